#pragma once

// Independent reference computations for the tests. Nothing here calls the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rational = boost::multiprecision::cpp_rational;

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 200000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

inline double normal_pdf(double x, double mean = 0.0, double var = 1.0) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(|X - c| < r) for X ~ N(mean, var).
inline double normal_ball(double mean, double var, double c, double r) {
    const double s = std::sqrt(var);
    return normal_cdf((c + r - mean) / s) - normal_cdf((c - r - mean) / s);
}

/// KL(N(0,1) || N(0,v)) by Simpson on [-40, 40].
inline double kl_normal_quad(double v) {
    return simpson([v](double x) {
        const double log_ratio = -0.5 * x * x + 0.5 * x * x / v + 0.5 * std::log(v);
        return normal_pdf(x) * log_ratio;
    }, -40.0, 40.0);
}

/// Maximiser of f on [lo, hi]: grid search then golden section around the best node.
inline double argmax_1d(const std::function<double(double)>& f, double lo, double hi, int grid = 100000) {
    const double h = (hi - lo) / grid;
    int best = 0;
    double fb = f(lo);
    for (int i = 1; i <= grid; ++i) {
        const double v = f(lo + i * h);
        if (v > fb) {
            fb = v;
            best = i;
        }
    }
    double a = std::max(lo, lo + (best - 1) * h), b = std::min(hi, lo + (best + 1) * h);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) > f(d)) b = d; else a = c;
    }
    return 0.5 * (a + b);
}

inline double spike_density(double n, double x) {
    if (std::isinf(n)) return normal_pdf(x, 1.0);
    const double bump = x >= 0.0 ? 4.0 * n * n * x * x * std::exp(-n * n * x * x) : 0.0;
    return (std::exp(-0.5 * (x - 1.0) * (x - 1.0)) + bump) / (std::sqrt(2.0 * std::numbers::pi) + std::sqrt(std::numbers::pi) / n);
}

inline double mixture_density(double t, double r, double x) {
    return ((1.0 + t) * std::exp(-0.5 * (x - r) * (x - r)) + (1.0 - t) * std::exp(-0.5 * (x + r) * (x + r))) /
           (2.0 * std::sqrt(2.0 * std::numbers::pi));
}

/// Posterior mean of N(m, C) under y = O u + N(0, Ce) in the data-space form.
inline Vec conjugate_posterior_mean(const Vec& m, const Mat& c, const Mat& o, const Mat& ce, const Vec& y) {
    const Mat s = o * c * o.transpose() + ce;
    return m + c * o.transpose() * s.ldlt().solve(y - o * m);
}

/// min 1/2 (y - O u)^T W (y - O u) + sum_k |u_k| / w_k by cyclic coordinate descent.
inline Vec lasso_cd(const Mat& o, const Mat& w, const Vec& y, const Vec& weights, double tol = 1e-14,
                    int max_sweeps = 2000000) {
    const int k = static_cast<int>(o.cols());
    const Mat h = o.transpose() * w * o;
    const Vec b = o.transpose() * w * y;
    Vec u = Vec::Zero(k);
    Vec g = -b;   // h u - b
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int j = 0; j < k; ++j) {
            if (h(j, j) <= 0.0) continue;
            const double z = u[j] - g[j] / h(j, j);
            const double lam = 1.0 / (weights[j] * h(j, j));
            const double nu = std::copysign(std::max(std::abs(z) - lam, 0.0), z);
            const double d = nu - u[j];
            if (d != 0.0) {
                g += h.col(j) * d;
                u[j] = nu;
                change = std::max(change, std::abs(d));
            }
        }
        if (change < tol) break;
    }
    return u;
}

/// Minimiser of |x|/g1 + |1-x|/g2 over x by grid plus golden section; returns (x, 1-x).
inline Vec weighted_l1_on_line(double g1, double g2) {
    const auto f = [&](double x) { return -(std::abs(x) / g1 + std::abs(1.0 - x) / g2); };
    const double x = argmax_1d(f, -2.0, 3.0, 500000);
    Vec u(2);
    u << x, 1.0 - x;
    return u;
}

/// Liminf-only measure from its defining series, exact, with levels past `depth`
/// represented by their telescoped tail masses a_{depth+1} and b_{depth+1}.
struct DyadicMeasure {
    int depth;

    static Rational pow2(long e) {
        Rational r = 1;
        const Rational two = e >= 0 ? Rational(2) : Rational(1, 2);
        for (long i = 0; i < std::abs(e); ++i) r *= two;
        return r;
    }
    Rational a(int n) const {
        const long e = static_cast<long>(n - 1) * (n + 2) / 2;
        return pow2(-e);
    }
    Rational alpha(int n) const { return pow2(-n) * (a(n) - a(n + 1)); }

    static Rational overlap(const Rational& lo, const Rational& hi, const Rational& blo, const Rational& bhi) {
        const Rational l = std::max(lo, blo), h = std::min(hi, bhi);
        return h > l ? Rational(h - l) : Rational(0);
    }
    /// Unnormalised mass of the ball (c - r, c + r) for c in {-1, 1}.
    Rational ball(int c, const Rational& r) const {
        Rational m = 0;
        for (int k = 1; k <= depth; ++k) {
            const Rational w = alpha(k);
            if (c < 0) m += pow2(k) * overlap(-1 + w, -1 + 2 * w, -1 - r, -1 + r);
            else m += pow2(k) * overlap(1 - w, 1 - w / 2, 1 - r, 1 + r);
        }
        const Rational tail_reach = 2 * alpha(depth + 1);
        if (r > tail_reach) m += c < 0 ? a(depth + 1) : a(depth + 1) / 2;
        return m;
    }
};

/// Arc length of a planar segment inside a p-ball, by midpoint sampling.
inline double segment_length_in_ball(const Vec& a, const Vec& b, const Vec& c, double r, double p, int pieces = 2000000) {
    const double len = (b - a).norm();
    int inside = 0;
    for (int i = 0; i < pieces; ++i) {
        const Vec x = a + (b - a) * ((i + 0.5) / pieces) - c;
        const double n = std::isinf(p) ? x.cwiseAbs().maxCoeff() : std::pow(std::pow(std::abs(x[0]), p) + std::pow(std::abs(x[1]), p), 1.0 / p);
        if (n < r) ++inside;
    }
    return len * inside / pieces;
}

}  // namespace oracle
