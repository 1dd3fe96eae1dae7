#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ommap/measures.hpp"
#include "ommap/potential.hpp"

namespace ommap {

/// Onsager-Machlup functional I extended by +infinity off its domain E.
///
/// Optimisers use the split I = smooth + sum_k |u_k| / l1_weights_k; an empty
/// `l1_weights` means no nonsmooth part.
struct OmFunctional {
    std::string name;
    int dim = 0;
    std::function<double(const Vector&)> eval;
    std::function<bool(const Vector&)> in_domain;
    std::function<double(const Vector&)> smooth;
    std::function<Vector(const Vector&)> smooth_gradient;
    Vector l1_weights;
    Vector anchor;
    std::string domain_note;

    double operator()(const Vector& u) const { return eval(u); }
    bool has_nonsmooth() const { return l1_weights.size() > 0; }
    double nonsmooth(const Vector& u) const;
};

/// 1/2 |C^{dagger/2}(u - m)|^2 on m + range C^{1/2}, +infinity elsewhere.
OmFunctional gaussian_om(const GaussianMeasure& mu, double rank_tol = kDefaultRankTol, double range_tol = 1e-10);

/// sum_k |u_k| / gamma_k. Finite everywhere at finite truncation.
OmFunctional besov_om(const BesovMeasure& mu);

/// phi + I_0.
OmFunctional posterior_om(const OmFunctional& prior, const Potential& phi);

/// -log density, for one-dimensional examples.
OmFunctional density_om(const Density1D& mu, double anchor);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

enum class Tri { yes, no, inconclusive };
std::string to_string(Tri v);

struct OmCheckOptions {
    BallOptions ball;
    double abs_tol = 1e-6;
    /// Tolerance is sigmas * extrapolation stderr + abs_tol.
    double sigmas = 3.0;
    /// Inconclusive when the stderr exceeds this fraction of the expected ratio.
    double max_rel_stderr = 0.25;
};

struct OmDifferenceReport {
    BallRatioEstimate ratio;   // mu(B_r(x1)) / mu(B_r(x2))
    double expected;           // exp(I(x2) - I(x1))
    double deviation;
    double tolerance;
    Verdict verdict;
};

OmDifferenceReport om_difference_check(const Measure& mu, const OmFunctional& om, const Vector& x1, const Vector& x2,
                                       const Vector& radii, const WeightedSeqSpace& norm,
                                       const OmCheckOptions& opts = {});

struct DecayTrend {
    double min_ratio;
    double last_ratio;
    double decreasing_fraction;   // share of consecutive steps that decrease
    double loglog_slope;          // slope of log ratio against log r over the smallest radii
    bool decays;
};

/// Trend of a ratio sequence along decreasing radii.
DecayTrend decay_trend(const Vector& radii, const Vector& ratios, int tail = 5);

struct MPropertyEntry {
    Vector point;
    BallRatioEstimate ratio;   // mu(B_r(x)) / mu(B_r(anchor))
    DecayTrend trend;
};

struct MPropertyReport {
    Vector anchor;
    std::vector<MPropertyEntry> entries;
    Verdict verdict;
};

MPropertyReport m_property_probe(const Measure& mu, const OmFunctional& om, const std::vector<Vector>& outside_points,
                                 const Vector& radii, const WeightedSeqSpace& norm, const BallOptions& opts = {});

struct ModeOptions {
    BallOptions ball;
    double tol = 0.02;
    double stderr_sigmas = 5.0;
    bool refine = true;
    int nelder_mead_iterations = 50;
    /// Monte Carlo draws per refinement evaluation.
    std::size_t refine_samples = 20'000;
    /// Radii for the weak test; empty reuses the strong schedule.
    Vector weak_radii;
    int weak_window = 5;
};

struct ModeClassification {
    Vector candidate;
    Vector radii;
    Vector strong_ratio_curve;   // mu(B_r(u)) / M_r
    Vector strong_stderr;
    Extrapolation strong_limit;
    Vector sup_location_per_radius_index;   // competitor index (or -1 for the refined point) attaining M_r
    Vector weak_radii;
    Vector weak_ratio_per_competitor;       // max over the small-radius window of mu(B_r(u')) / mu(B_r(u))
    double weak_worst_ratio;
    int weak_worst_competitor;
    Tri strong;
    Tri global_weak;
    std::string norm;
    std::string caveat;
};

ModeClassification classify_mode(const Measure& mu, const Vector& candidate, const std::vector<Vector>& competitors,
                                 const Vector& radii, const WeightedSeqSpace& norm, const ModeOptions& opts = {});

/// Downhill simplex maximisation of f from x0 with initial step `step`.
Vector nelder_mead_maximise(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                            int iterations);

}  // namespace ommap
