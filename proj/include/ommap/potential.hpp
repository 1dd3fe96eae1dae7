#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ommap/spaces.hpp"

namespace ommap {

/// Negative log-likelihood Phi(u), optionally with its gradient.
struct Potential {
    std::string name;
    int dim = 0;
    std::function<double(const Vector&)> eval;
    std::function<Vector(const Vector&)> gradient;
    std::optional<double> lipschitz_grad;
    std::optional<double> lower_bound;

    double operator()(const Vector& u) const { return eval(u); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
};

/// Builds a potential and, when a gradient is given, compares it with central
/// differences at `checks` random points; ParameterError above `rel_tol`.
Potential make_potential(std::string name, int dim, std::function<double(const Vector&)> eval,
                         std::function<Vector(const Vector&)> gradient = {}, std::optional<double> lipschitz_grad = {},
                         std::optional<double> lower_bound = {}, int checks = 5, std::uint64_t seed = 0,
                         double rel_tol = 1e-6);

/// max_k |g_k - fd_k| / max(1, |g|_inf) with central differences of step h.
double gradient_fd_error(const Potential& phi, const Vector& u, double h = 1e-6);

Potential zero_potential(int dim);

/// Phi o P_n: coordinates past n are zeroed before evaluation.
Potential projected_potential(const Potential& phi, int n);

}  // namespace ommap
