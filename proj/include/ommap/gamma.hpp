#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ommap/measures.hpp"
#include "ommap/om.hpp"
#include "ommap/potential.hpp"

namespace ommap {

/// Members F_n for the indices `n` (increasing) and the candidate limit F.
struct FunctionalSequence {
    std::vector<double> n;
    std::vector<OmFunctional> members;
    OmFunctional limit;

    int size() const { return static_cast<int>(members.size()); }
    int dim() const { return limit.dim; }
    /// Positions i with n[i] in [n_max / 2, n_max].
    std::vector<int> trailing_window() const;
};

FunctionalSequence make_sequence(std::vector<double> n, std::vector<OmFunctional> members, OmFunctional limit);
FunctionalSequence gaussian_om_sequence(const std::vector<double>& n, const std::vector<GaussianMeasure>& members,
                                        const GaussianMeasure& limit);
FunctionalSequence besov_om_sequence(const std::vector<double>& n, const std::vector<BesovMeasure>& members,
                                     const BesovMeasure& limit);

// ---------------------------------------------------------------- liminf

struct PathOptions {
    int paths = 64;
    std::vector<double> alphas{0.5, 1.0, 2.0};
    double scale = 1.0;
    bool coordinate_paths = true;
    double tol = 1e-9;
    /// F_n(x_n) - F(x) is split into F_n(x_n) - F(x_n) and F(x_n) - F(x). A term below -tol is a
    /// violation only when its late value exceeds this fraction of its early value. For the member
    /// term the ranges are n in [3N/4, N] and [N/4, N/2); formula paths evaluate the limit term at
    /// n = 1e8 N and 1e4 N.
    double persist_ratio = 0.85;
    std::uint64_t seed = 0;
};

struct LiminfWitness {
    Vector x;
    std::string path;
    double limit_value;
    double window_min;          // min over the trailing window of F_n(x_n)
    double margin;              // window_min - F(x)
    std::vector<Vector> sequence;
};

struct LiminfReport {
    int paths_tested = 0;
    double worst_margin = kInf;
    std::vector<LiminfWitness> violations;
    Verdict verdict = Verdict::pass;
};

/// Paths x_n = x + scale * n^{-alpha} d for random unit d, signed coordinate
/// directions, the constant path, and any `extra_paths` (one point per member).
LiminfReport gamma_liminf_probe(const FunctionalSequence& seq, const Vector& x, const PathOptions& opts = {},
                                const std::vector<std::vector<Vector>>& extra_paths = {});

// ---------------------------------------------------------------- recovery

/// v = A^dagger (u - m), u^{(n)} = m^{(n)} + A_n v with A = C^{1/2}; the constant
/// sequence when u - m is outside range A.
std::vector<Vector> gaussian_recovery_sequence(const std::vector<GaussianMeasure>& members,
                                               const GaussianMeasure& limit, const Vector& u);

/// u^{(n)}_k = gamma^{(n)}_k u_k / gamma_k.
std::vector<Vector> besov_recovery_sequence(const std::vector<BesovMeasure>& members, const BesovMeasure& limit,
                                            const Vector& u);

struct RecoveryReport {
    Vector x;
    double limit_value;
    Vector member_values;       // F_n(x_n)
    double limsup_estimate;     // max over the trailing window
    double gap;                 // limsup_estimate - F(x)
    double worst_pointwise_gap; // max_n F_n(x_n) - F(x)
    double final_distance;
    Verdict verdict;
};

/// A gap above tol passes when it shrinks by at least `persist_ratio` from n in [N/4, N/2) to the trailing window.
RecoveryReport recovery_check(const FunctionalSequence& seq, const Vector& x, const std::vector<Vector>& sequence,
                              double tol = 1e-12, double persist_ratio = 0.85);

// ---------------------------------------------------------------- equicoercivity

/// Membership test for the compact set K_t; the member index selects K_t^{(n)} when it depends on n.
using CompactBound = std::function<bool(int member, const Vector& u, double t)>;

/// |A_n^dagger (u - m^{(n)})| <= sqrt(2t).
CompactBound gaussian_compact_bound(const std::vector<GaussianMeasure>& members, double rel_tol = 1e-9);
/// |u_k| <= k^{1/2 - sbar/d} t.
CompactBound besov_compact_bound(double sbar, int d, double rel_tol = 1e-12);

struct EquicoercivityReport {
    double t;
    int samples = 0;
    int violations = 0;
    bool vacuous = false;
    Vector witness;
    int witness_member = -1;
    Verdict verdict = Verdict::pass;
};

/// Draws `samples` points from the sublevel sets {F_n <= t}, spread over the members,
/// by bisection along random rays from each member's anchor (half on the boundary).
EquicoercivityReport equicoercivity_probe(const FunctionalSequence& seq, double t, int samples,
                                          const CompactBound& bound, std::uint64_t seed = 0);

// ---------------------------------------------------------------- minimisers

struct ModeConvergenceOptions {
    double tol = 1e-6;
    double cluster_tol = 1e-3;
    double trailing_fraction = 0.25;
    double value_tol = 1e-6;
};

struct ModeConvergenceReport {
    std::vector<Vector> cluster_points;
    std::vector<int> cluster_sizes;
    std::vector<double> distance_to_limit_argmin;
    double limit_min;
    Vector member_min;          // F_n(minimiser_n)
    double min_value_gap;       // |F_N(x_N) - min F|
    bool clusters_are_argmins;
    bool minima_converge;
    std::string diagnostic;
    Verdict verdict;
};

/// `limit_argmins` lists the minimisers of the limit functional.
ModeConvergenceReport mode_convergence_check(const FunctionalSequence& seq, const std::vector<Vector>& minimizers,
                                             const std::vector<Vector>& limit_argmins,
                                             const ModeConvergenceOptions& opts = {});

/// Single-linkage clusters (representative: latest member) of the trailing part of xs.
std::vector<std::vector<int>> trailing_clusters(const std::vector<Vector>& xs, double fraction, double radius);

// ---------------------------------------------------------------- continuous convergence

struct ContinuityOptions {
    double rho0 = 0.5;
    int samples = 200;
    double tol = 1e-6;
    double min_decay_slope = 0.2;
    std::uint64_t seed = 0;
};

struct ContinuityEntry {
    Vector x;
    Vector sup_deviation;   // per member: sup_{x' in U_n} |phi_n(x') - phi(x)|
    Vector sup_location;    // per member: the |x' - x| attaining it
    double decay_slope;     // -d log sup / d log n over the trailing half
    bool converges;
};

struct ContinuityReport {
    std::vector<double> n;
    std::vector<ContinuityEntry> entries;
    Verdict verdict;
};

/// Neighbourhoods U_n = B(x, rho0 n^{-1/2}) sampled uniformly, plus x itself and two boundary points.
ContinuityReport continuous_convergence_probe(const std::vector<double>& n, const std::vector<Potential>& members,
                                              const Potential& limit, const std::vector<Vector>& points,
                                              const ContinuityOptions& opts = {});

/// phi o P_n for every n (n clipped to the dimension).
std::vector<Potential> projected_potentials(const Potential& phi, const std::vector<double>& n);

// ---------------------------------------------------------------- sum rule and lsc envelope

struct SumRuleReport {
    std::vector<LiminfReport> liminf;
    std::vector<RecoveryReport> recovery;
    Verdict verdict;
};

/// Probes F_n + G_n against F + G. `recovery(x)` returns one point per member.
SumRuleReport sum_rule_check(const FunctionalSequence& f, const std::vector<Potential>& g, const Potential& g_limit,
                             const std::vector<Vector>& points,
                             const std::function<std::vector<Vector>(const Vector&)>& recovery,
                             const PathOptions& opts = {});

/// inf of f over [x - delta, x + delta] on a grid of `grid` points, per delta.
Vector lsc_envelope_1d(const std::function<double(double)>& f, double x, const Vector& deltas, int grid = 2001);

}  // namespace ommap
