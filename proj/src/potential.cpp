#include "ommap/potential.hpp"

#include <algorithm>
#include <random>

#include "ommap/errors.hpp"
#include "ommap/rng.hpp"

namespace ommap {

double gradient_fd_error(const Potential& phi, const Vector& u, double h) {
    if (!phi.has_gradient()) throw InputError("gradient_fd_error: potential has no gradient");
    const Vector g = phi.gradient(u);
    double worst = 0.0;
    Vector v = u;
    for (int k = 0; k < u.size(); ++k) {
        const double step = h * std::max(1.0, std::abs(u[k]));
        v[k] = u[k] + step;
        const double fp = phi.eval(v);
        v[k] = u[k] - step;
        const double fm = phi.eval(v);
        v[k] = u[k];
        worst = std::max(worst, std::abs(g[k] - (fp - fm) / (2.0 * step)));
    }
    return worst / std::max(1.0, g.cwiseAbs().maxCoeff());
}

Potential make_potential(std::string name, int dim, std::function<double(const Vector&)> eval,
                         std::function<Vector(const Vector&)> gradient, std::optional<double> lipschitz_grad,
                         std::optional<double> lower_bound, int checks, std::uint64_t seed, double rel_tol) {
    if (dim <= 0) throw InputError("make_potential: dim must be positive");
    if (!eval) throw InputError("make_potential: eval is required");
    Potential phi{std::move(name), dim, std::move(eval), std::move(gradient), lipschitz_grad, lower_bound};
    if (!phi.has_gradient()) return phi;
    Rng rng = make_rng(seed, 0x67ad);
    std::normal_distribution<double> normal;
    for (int c = 0; c < checks; ++c) {
        Vector u(dim);
        for (int k = 0; k < dim; ++k) u[k] = normal(rng);
        const double err = gradient_fd_error(phi, u);
        if (!(err <= rel_tol))
            throw ParameterError("potential '" + phi.name + "': gradient differs from finite differences by " +
                                 std::to_string(err));
    }
    return phi;
}

Potential zero_potential(int dim) {
    return Potential{"zero", dim, [](const Vector&) { return 0.0; },
                     [dim](const Vector&) { return Vector(Vector::Zero(dim)); }, 0.0, 0.0};
}

Potential projected_potential(const Potential& phi, int n) {
    if (n < 1) throw InputError("projected_potential: n must be positive");
    n = std::min(n, phi.dim);
    Potential out = phi;
    out.name = phi.name + " o P_" + std::to_string(n);
    auto f = phi.eval;
    out.eval = [f, n](const Vector& u) { return f(project(u, n)); };
    if (phi.has_gradient()) {
        auto g = phi.gradient;
        out.gradient = [g, n](const Vector& u) { return project(g(project(u, n)), n); };
    }
    return out;
}

}  // namespace ommap
