#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ommap/spaces.hpp"

namespace ommap {

struct GaussianMeasure {
    Vector mean;
    SpectralOperator covariance;

    GaussianMeasure(Vector m, SpectralOperator c);
    int dim() const { return static_cast<int>(mean.size()); }
};

struct BesovWeights {
    double tau;
    double t;
    Vector gamma;
    Vector delta;
};

/// tau = (s/d + 1/2)^{-1}, t = s - d(1 + eta), gamma_k = k^{1-1/tau}, delta_k = k^{2+eta-1/tau}.
BesovWeights besov_weights(double s, int d, double eta, int dim);

/// Product of Laplace laws, coordinate k with density Z1/gamma_k exp(-|u/gamma_k|).
struct BesovMeasure {
    static constexpr double kZ1 = 0.5;

    double s;
    int d;
    double eta;
    int truncation;
    double tau;
    double t;
    Vector gamma;
    Vector delta;

    BesovMeasure(double s, int d, double eta, int dim);
    int dim() const { return truncation; }
};

struct Interval {
    double lo;
    double hi;
};

/// Probability density on R. `retained_mass` is the mass carried by the
/// represented support (1 unless a tail of an infinite construction is cut off).
class Density1D {
public:
    using DensityFn = std::function<double(double)>;
    /// Exact mass of the ball of the given radius; the flag selects the closed ball.
    using MassFn = std::function<double(double center, double radius, bool closed)>;

    Density1D(std::string name, DensityFn density, std::vector<Interval> support,
              std::optional<MassFn> mass_fn = std::nullopt, std::vector<double> breakpoints = {},
              double retained_mass = 1.0);

    const std::string& name() const { return name_; }
    double operator()(double x) const { return density_(x); }
    const std::vector<Interval>& support() const { return support_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    bool has_closed_form() const { return mass_fn_.has_value(); }
    double retained_mass() const { return retained_mass_; }

    double closed_form_mass(double center, double radius, bool closed) const;
    /// Adaptive quadrature of the density over (lo, hi), split at support ends and breakpoints.
    double integrate(double lo, double hi, double abs_tol = 1e-12) const;

private:
    std::string name_;
    DensityFn density_;
    std::vector<Interval> support_;
    std::optional<MassFn> mass_fn_;
    std::vector<double> breakpoints_;
    double retained_mass_;
};

struct Segment2D {
    Vector a;
    Vector b;
};

/// Unnormalised arc-length measure on a finite union of planar segments.
struct LengthMeasure2D {
    std::string name;
    std::vector<Segment2D> segments;

    int dim() const { return 2; }
    double total_length() const;
};

using Measure = std::variant<GaussianMeasure, BesovMeasure, Density1D, LengthMeasure2D>;

int measure_dim(const Measure& mu);
std::string measure_kind(const Measure& mu);

/// Draws as rows. Gaussian and Besov only.
Matrix sample(const Measure& mu, int n, std::uint64_t seed);

enum class MassMethod { closed_form, quadrature, exact_product, monte_carlo };
std::string to_string(MassMethod m);

struct BallOptions {
    std::size_t samples = 1'000'000;
    int batches = 20;
    std::uint64_t seed = 0;
    double quad_tol = 1e-12;
    double max_rel_err = 0.05;
    bool closed = false;
    bool antithetic = true;
    int fit_points = 5;
    /// Ratios are fitted as a + b * r^fit_exponent.
    double fit_exponent = 1.0;
    int bootstrap = 200;
    int threads = 0;
};

struct BallMass {
    double estimate;
    double stderr;
    MassMethod method;
    bool low_confidence;
};

BallMass ball_mass(const Measure& mu, const Vector& center, double radius, const WeightedSeqSpace& norm,
                   const BallOptions& opts = {});

/// Log ball masses for several centres over one radius schedule. Monte Carlo
/// estimates share one set of uniform-ball draws across every centre and radius.
struct MassCurves {
    Vector radii;
    Matrix log_mass;                      // centres x radii
    Matrix rel_stderr;                    // centres x radii
    std::vector<Matrix> batch_log_mass;   // one centres x radii matrix per batch; empty if deterministic
    MassMethod method;
};

MassCurves ball_mass_curves(const Measure& mu, const std::vector<Vector>& centers, const Vector& radii,
                            const WeightedSeqSpace& norm, const BallOptions& opts = {});

struct Extrapolation {
    double limit;
    double stderr;
    double ci_lo;
    double ci_hi;
    double model_error;
};

/// Intercept of a + b r^q fitted to the `points` smallest radii (least squares).
/// `batch_values[b]` holds the per-radius values of batch b for the bootstrap.
Extrapolation extrapolate_limit(const Vector& radii, const Vector& values, const std::vector<Vector>& batch_values,
                                const BallOptions& opts);

struct BallRatioEstimate {
    Vector radii;
    Vector ratios;
    Vector stderr;
    Extrapolation limit;
    MassMethod method;
    bool low_confidence = false;
    std::string diagnostic;
    std::string norm;
};

BallRatioEstimate ratio_from_curves(const MassCurves& curves, int i, int j, const BallOptions& opts);

BallRatioEstimate ball_ratio_curve(const Measure& mu, const Vector& x1, const Vector& x2, const Vector& radii,
                                   const WeightedSeqSpace& norm, const BallOptions& opts = {});

/// r_j = r0 2^{-j}, j = 0..levels-1.
Vector geometric_radii(double r0 = 0.5, int levels = 10);

struct OpenClosedReport {
    BallRatioEstimate open;
    BallRatioEstimate closed;
    double max_ratio_discrepancy;
    double limit_discrepancy;
    bool agree;
};

OpenClosedReport open_vs_closed_check(const Density1D& mu, double x1, double x2, const Vector& radii,
                                      const BallOptions& opts = {});

std::string describe_norm(const WeightedSeqSpace& norm);

}  // namespace ommap
