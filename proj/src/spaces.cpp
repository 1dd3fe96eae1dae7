#include "ommap/spaces.hpp"

#include "ommap/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace ommap {

WeightedSeqSpace::WeightedSeqSpace(double p, Vector weights) : p_(p), weights_(std::move(weights)) {
    if (!(p_ > 0.0)) throw InputError("WeightedSeqSpace: p must be positive");
    if (weights_.size() < 1) throw InputError("WeightedSeqSpace: dim must be >= 1");
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
        if (!(weights_[k] > 0.0) || !std::isfinite(weights_[k]))
            throw InputError("WeightedSeqSpace: weight " + std::to_string(k + 1) +
                             " is not a positive finite number");
    }
}

WeightedSeqSpace WeightedSeqSpace::uniform(int dim, double p) {
    if (dim < 1) throw InputError("WeightedSeqSpace: dim must be >= 1");
    return WeightedSeqSpace(p, Vector::Ones(dim));
}

bool WeightedSeqSpace::is_unweighted() const {
    return (weights_.array() == 1.0).all();
}

SpectralOperator::SpectralOperator(Vector eigenvalues, std::optional<Matrix> basis)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)) {
    if (eigenvalues_.size() < 1) throw InputError("SpectralOperator: empty spectrum");
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
        if (!(eigenvalues_[k] >= 0.0) || !std::isfinite(eigenvalues_[k]))
            throw InputError("SpectralOperator: eigenvalues must be finite and non-negative");
    }
    if (basis_) {
        const Matrix& b = *basis_;
        if (b.rows() != eigenvalues_.size() || b.cols() != eigenvalues_.size())
            throw InputError("SpectralOperator: basis must be K x K");
        const double err = (b.transpose() * b - Matrix::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
        if (err > 1e-10) throw InputError("SpectralOperator: basis is not orthonormal");
    }
}

SpectralOperator SpectralOperator::diagonal(Vector eigenvalues) {
    return SpectralOperator(std::move(eigenvalues), std::nullopt);
}

SpectralOperator SpectralOperator::from_eigenpairs(Vector eigenvalues, Matrix basis) {
    return SpectralOperator(std::move(eigenvalues), std::move(basis));
}

SpectralOperator SpectralOperator::from_matrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) throw InputError("SpectralOperator: matrix must be square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw InputError("SpectralOperator: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) throw NumericalError("SpectralOperator: eigendecomposition failed");
    Vector vals = solver.eigenvalues();
    const double scale = vals.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        if (vals[k] < 0.0) {
            if (vals[k] < -1e-10 * scale) throw InputError("SpectralOperator: matrix is not positive semi-definite");
            vals[k] = 0.0;
        }
    }
    return SpectralOperator(std::move(vals), solver.eigenvectors());
}

SpectralOperator SpectralOperator::identity(int dim) {
    return diagonal(Vector::Ones(dim));
}

Matrix SpectralOperator::basis() const {
    return basis_ ? *basis_ : Matrix::Identity(dim(), dim());
}

double SpectralOperator::max_eigenvalue() const {
    return eigenvalues_.maxCoeff();
}

Vector SpectralOperator::to_eigen(const Vector& v) const {
    if (v.size() != dim()) throw InputError("SpectralOperator: dimension mismatch");
    return basis_ ? Vector(basis_->transpose() * v) : v;
}

Vector SpectralOperator::from_eigen(const Vector& w) const {
    if (w.size() != dim()) throw InputError("SpectralOperator: dimension mismatch");
    return basis_ ? Vector(*basis_ * w) : w;
}

Vector SpectralOperator::apply(const Vector& v) const {
    return from_eigen(eigenvalues_.cwiseProduct(to_eigen(v)));
}

Vector SpectralOperator::sqrt_apply(const Vector& v) const {
    return from_eigen(eigenvalues_.cwiseSqrt().cwiseProduct(to_eigen(v)));
}

Matrix SpectralOperator::dense() const {
    const Matrix b = basis();
    return b * eigenvalues_.asDiagonal() * b.transpose();
}

Matrix SpectralOperator::sqrt_dense() const {
    const Matrix b = basis();
    return b * eigenvalues_.cwiseSqrt().asDiagonal() * b.transpose();
}

bool SpectralOperator::is_null_mode(int k, double rank_tol) const {
    return eigenvalues_[k] <= rank_tol * max_eigenvalue();
}

int SpectralOperator::rank(double rank_tol) const {
    int r = 0;
    for (int k = 0; k < dim(); ++k) r += is_null_mode(k, rank_tol) ? 0 : 1;
    return r;
}

SpectralOperator SpectralOperator::scaled(double factor) const {
    if (!(factor > 0.0)) throw InputError("SpectralOperator::scaled: factor must be positive");
    return SpectralOperator(eigenvalues_ * factor, basis_);
}

double weighted_norm(const Vector& u, const WeightedSeqSpace& space) {
    if (u.size() != space.dim()) throw InputError("weighted_norm: dimension mismatch");
    const auto scaled = u.cwiseAbs().cwiseQuotient(space.weights()).array();
    if (space.is_sup_norm()) return scaled.maxCoeff();
    const double p = space.p();
    if (p == 1.0) return scaled.sum();
    if (p == 2.0) return std::sqrt(scaled.square().sum());
    // Factor out the largest entry so large p does not overflow.
    const double top = scaled.maxCoeff();
    if (top == 0.0 || !std::isfinite(top)) return top;
    return top * std::pow((scaled / top).pow(p).sum(), 1.0 / p);
}

Vector project(const Vector& u, int n) {
    if (n < 1 || n > u.size()) throw InputError("project: n must lie in [1, dim]");
    Vector out = Vector::Zero(u.size());
    out.head(n) = u.head(n);
    return out;
}

namespace {

Vector spectral_pinv(const SpectralOperator& a, const Vector& y, double rank_tol, bool sqrt_root) {
    if (y.size() != a.dim()) throw InputError("pinv_apply: dimension mismatch");
    if (rank_tol < 0.0) throw InputError("pinv_apply: rank_tol must be non-negative");
    Vector w = a.to_eigen(y);
    for (int k = 0; k < a.dim(); ++k) {
        if (a.is_null_mode(k, rank_tol) || a.eigenvalues()[k] == 0.0) {
            w[k] = 0.0;
        } else {
            const double lambda = a.eigenvalues()[k];
            w[k] /= sqrt_root ? std::sqrt(lambda) : lambda;
        }
    }
    return a.from_eigen(w);
}

}  // namespace

Vector pinv_apply(const SpectralOperator& a, const Vector& y, double rank_tol) {
    return spectral_pinv(a, y, rank_tol, false);
}

Vector sqrt_pinv_apply(const SpectralOperator& c, const Vector& v, double rank_tol) {
    return spectral_pinv(c, v, rank_tol, true);
}

double kernel_component(const SpectralOperator& c, const Vector& v, double rank_tol) {
    const Vector w = c.to_eigen(v);
    double sq = 0.0;
    for (int k = 0; k < c.dim(); ++k)
        if (c.is_null_mode(k, rank_tol) || c.eigenvalues()[k] == 0.0) sq += w[k] * w[k];
    return std::sqrt(sq);
}

bool in_sqrt_range(const SpectralOperator& c, const Vector& v, double rank_tol, double abs_tol) {
    return kernel_component(c, v, rank_tol) <= abs_tol * std::max(1.0, v.norm());
}

double power_tail_bound(int truncation, double exponent) {
    if (!(exponent > 1.0)) throw InputError("power_tail_bound: exponent must exceed 1");
    if (truncation < 1) throw InputError("power_tail_bound: truncation must be >= 1");
    return std::pow(static_cast<double>(truncation), 1.0 - exponent) / (exponent - 1.0);
}

}  // namespace ommap
