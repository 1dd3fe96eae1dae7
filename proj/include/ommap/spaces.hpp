#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>

namespace ommap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultRankTol = 1e-12;

/// Truncated weighted sequence space l^p_gamma: ||h|| = ||(h_k / gamma_k)_k||_{l^p}.
///
/// p may be any positive real or +infinity (p < 1 gives the usual quasi-norm).
class WeightedSeqSpace {
public:
    WeightedSeqSpace(double p, Vector weights);

    /// Unweighted l^p on R^dim.
    static WeightedSeqSpace uniform(int dim, double p);

    double p() const { return p_; }
    const Vector& weights() const { return weights_; }
    int dim() const { return static_cast<int>(weights_.size()); }
    bool is_sup_norm() const { return p_ == kInf; }
    bool is_unweighted() const;

private:
    double p_;
    Vector weights_;
};

/// Symmetric positive semi-definite operator stored through its spectrum.
///
/// The eigenvalues are the variances sigma_k^2. Without an explicit basis the
/// eigenvectors are the coordinate vectors.
class SpectralOperator {
public:
    SpectralOperator() = default;

    static SpectralOperator diagonal(Vector eigenvalues);
    /// Explicit orthonormal basis, columns are eigenvectors (checked to 1e-10).
    static SpectralOperator from_eigenpairs(Vector eigenvalues, Matrix basis);
    /// Symmetric eigendecomposition of a dense SPSD matrix. Eigenvalues that are
    /// negative by less than 1e-10 * max|lambda| are clamped to zero.
    static SpectralOperator from_matrix(const Matrix& m);
    static SpectralOperator identity(int dim);

    int dim() const { return static_cast<int>(eigenvalues_.size()); }
    const Vector& eigenvalues() const { return eigenvalues_; }
    bool has_basis() const { return basis_.has_value(); }
    /// Eigenvector matrix; identity when the basis is implicit.
    Matrix basis() const;
    double max_eigenvalue() const;

    /// Coordinates in the eigenbasis, B^T v.
    Vector to_eigen(const Vector& v) const;
    /// Back from eigen coordinates, B w.
    Vector from_eigen(const Vector& w) const;

    Vector apply(const Vector& v) const;
    Vector sqrt_apply(const Vector& v) const;
    Matrix dense() const;
    Matrix sqrt_dense() const;

    /// True when eigenvalue k counts as zero: lambda_k <= rank_tol * max lambda.
    bool is_null_mode(int k, double rank_tol = kDefaultRankTol) const;
    int rank(double rank_tol = kDefaultRankTol) const;

    /// Operator with every eigenvalue multiplied by `factor` (> 0).
    SpectralOperator scaled(double factor) const;

private:
    SpectralOperator(Vector eigenvalues, std::optional<Matrix> basis);

    Vector eigenvalues_;
    std::optional<Matrix> basis_;
};

double weighted_norm(const Vector& u, const WeightedSeqSpace& space);

/// Keep coordinates 1..n, zero the rest.
Vector project(const Vector& u, int n);

/// Moore-Penrose pseudoinverse A^dagger y.
Vector pinv_apply(const SpectralOperator& a, const Vector& y, double rank_tol = kDefaultRankTol);

/// (C^{1/2})^dagger v.
Vector sqrt_pinv_apply(const SpectralOperator& c, const Vector& v, double rank_tol = kDefaultRankTol);

/// Euclidean norm of the component of v in ker C (= (range C^{1/2})^perp).
double kernel_component(const SpectralOperator& c, const Vector& v, double rank_tol = kDefaultRankTol);

/// v in range C^{1/2} up to |kernel part| <= abs_tol * max(1, ||v||).
bool in_sqrt_range(const SpectralOperator& c, const Vector& v, double rank_tol = kDefaultRankTol,
                   double abs_tol = 1e-10);

/// sum_{k > K} k^{-exponent} <= K^{1-exponent} / (exponent - 1), for exponent > 1.
double power_tail_bound(int truncation, double exponent);

}  // namespace ommap
