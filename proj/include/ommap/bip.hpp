#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ommap/gamma.hpp"
#include "ommap/measures.hpp"
#include "ommap/om.hpp"
#include "ommap/potential.hpp"

namespace ommap {

/// y = O u + eta, eta ~ N(0, noise_cov).
struct LinearObservation {
    Matrix matrix;
    SpectralOperator noise_cov;
    Vector data;

    LinearObservation(Matrix o, SpectralOperator noise, Vector y);
    int J() const { return static_cast<int>(matrix.rows()); }
    int K() const { return static_cast<int>(matrix.cols()); }
    /// C_eta^{-1} v.
    Vector whiten2(const Vector& v) const;
    /// Same observation with O replaced by O P_n.
    LinearObservation projected(int n) const;
    LinearObservation with_data(Vector y) const;
    /// Noise covariance multiplied by `factor`.
    LinearObservation with_noise_scale(double factor) const;
};

/// 1/2 |C_eta^{-1/2}(y - O u)|^2 with gradient -O^T C_eta^{-1}(y - O u).
Potential quadratic_potential(const LinearObservation& obs);

using Prior = std::variant<GaussianMeasure, BesovMeasure>;

struct InverseProblem {
    Prior prior;
    LinearObservation obs;
};

OmFunctional prior_om(const Prior& prior);
OmFunctional posterior_om(const InverseProblem& p);

struct MapSolution {
    Vector point;
    double objective = 0.0;
    double optimality_residual = 0.0;
    int iterations = 0;
    std::string solver;
    bool converged = true;
    bool rank_deficient = false;
    bool non_unique = false;
    std::string note;
};

MapSolution map_solve_gaussian_linear(const GaussianMeasure& prior, const LinearObservation& obs);

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 100'000;
    int power_iterations = 10;
    /// Compare a Besov solve with coordinate descent and flag distinct minimisers of equal objective.
    bool check_uniqueness = false;
};

/// min pot(u) + sum_k |u_k| / weights_k by FISTA with backtracking and adaptive restart.
MapSolution minimise_weighted_l1(const Potential& pot, const Vector& weights, const SolverOptions& opts = {},
                                 std::optional<Vector> start = std::nullopt);

/// max_k dist(-d_k pot(u), d(|.|/w_k)(u_k)).
double weighted_l1_kkt_residual(const Vector& grad, const Vector& u, const Vector& weights);

MapSolution map_solve_besov(const BesovMeasure& prior, const Potential& pot, const SolverOptions& opts = {});

/// Cyclic coordinate descent for the quadratic misfit plus weighted l1.
MapSolution map_solve_besov_cd(const BesovMeasure& prior, const LinearObservation& obs, double tol = 1e-13,
                               int max_sweeps = 1'000'000);

MapSolution map_solve(const InverseProblem& p, const SolverOptions& opts = {});

// ---------------------------------------------------------------- perturbations

enum class PerturbationKind { data, potential_projection, prior };
std::string to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(const std::string& s);

/// One of the fields is used according to the kind.
struct PerturbationSchedule {
    std::function<Vector(double n)> data;
    std::function<Prior(double n)> prior;
};

struct ExperimentRow {
    double n;
    Vector map;
    double objective;
    double residual;
    double distance_to_limit;
    bool converged;
};

struct PerturbationReport {
    PerturbationKind kind;
    Vector limit_map;
    std::vector<ExperimentRow> rows;
    ModeConvergenceReport modes;
    std::optional<ContinuityReport> potential_continuity;
    std::vector<RecoveryReport> prior_recovery;
    std::optional<EquicoercivityReport> prior_equicoercivity;
    int burn_in;   // first index from which distances never increase
    bool monotone_after_burn_in;
    double final_distance;
    std::vector<std::string> notes;
};

struct ExperimentOptions {
    SolverOptions solver;
    ModeConvergenceOptions modes{1e-4, 1e-3, 0.25, kInf};
    std::uint64_t seed = 0;
    int probe_points = 4;
    int threads = 0;
};

PerturbationReport perturbation_experiment(PerturbationKind kind, const InverseProblem& base,
                                           const std::vector<double>& n, const PerturbationSchedule& schedule,
                                           const ExperimentOptions& opts = {});

/// First index from which the sequence never increases (the last index when the final step increases).
int monotone_burn_in(const std::vector<double>& v, double slack = 0.0);

// ---------------------------------------------------------------- small noise

struct ConstrainedMinimum {
    Vector point;
    double value;
    bool unique;
};

/// min I_0(u) subject to O u = y: minimum Cameron-Martin norm (Gaussian) or
/// weighted basis pursuit by vertex enumeration (Besov).
ConstrainedMinimum constrained_prior_minimum(const Prior& prior, const LinearObservation& obs);

struct SmallNoiseRow {
    double n;
    Vector map;
    double distance_to_limit;
    double potential;
    double prior_om;
    bool converged;
};

struct PointwiseLimitRow {
    Vector point;
    double potential;
    double prior_om;
    Vector values;       // n Phi + I_0 for each n
    double limit_value;  // I_0 if Phi = 0, +inf otherwise
};

struct SmallNoiseReport {
    ConstrainedMinimum limit;
    std::vector<SmallNoiseRow> rows;
    std::vector<PointwiseLimitRow> pointwise;
    double decay_exponent;
    std::string note;
};

SmallNoiseReport small_noise_experiment(const InverseProblem& base, const std::vector<double>& n,
                                        const std::vector<Vector>& table_points = {},
                                        const ExperimentOptions& opts = {});

}  // namespace ommap
