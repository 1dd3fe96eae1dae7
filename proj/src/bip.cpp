#include "ommap/bip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ommap/errors.hpp"
#include "ommap/parallel.hpp"
#include "ommap/rng.hpp"

namespace ommap {

LinearObservation::LinearObservation(Matrix o, SpectralOperator noise, Vector y)
    : matrix(std::move(o)), noise_cov(std::move(noise)), data(std::move(y)) {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw InputError("LinearObservation: empty observation matrix");
    if (noise_cov.dim() != matrix.rows() || data.size() != matrix.rows())
        throw InputError("LinearObservation: noise covariance and data must have J = rows(O) entries");
    if (!(noise_cov.eigenvalues().minCoeff() > 0.0))
        throw ParameterError("LinearObservation: noise covariance must be positive definite");
}

Vector LinearObservation::whiten2(const Vector& v) const {
    Vector w = noise_cov.to_eigen(v);
    w.array() /= noise_cov.eigenvalues().array();
    return noise_cov.from_eigen(w);
}

LinearObservation LinearObservation::projected(int n) const {
    if (n < 1) throw InputError("LinearObservation::projected: n must be positive");
    Matrix o = matrix;
    if (n < K()) o.rightCols(K() - n).setZero();
    return LinearObservation(std::move(o), noise_cov, data);
}

LinearObservation LinearObservation::with_data(Vector y) const { return LinearObservation(matrix, noise_cov, std::move(y)); }

LinearObservation LinearObservation::with_noise_scale(double factor) const {
    if (!(factor > 0.0)) throw InputError("LinearObservation::with_noise_scale: factor must be positive");
    return LinearObservation(matrix, noise_cov.scaled(factor), data);
}

Potential quadratic_potential(const LinearObservation& obs) {
    const LinearObservation o = obs;
    Matrix h(o.K(), o.K());
    for (int k = 0; k < o.K(); ++k) h.col(k) = o.matrix.transpose() * o.whiten2(o.matrix.col(k));
    const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    Potential phi;
    phi.name = "quadratic_misfit";
    phi.dim = o.K();
    phi.eval = [o](const Vector& u) {
        if (u.size() != o.K()) throw InputError("quadratic_potential: dimension mismatch");
        const Vector r = o.data - o.matrix * u;
        return 0.5 * r.dot(o.whiten2(r));
    };
    phi.gradient = [o](const Vector& u) {
        if (u.size() != o.K()) throw InputError("quadratic_potential: dimension mismatch");
        return Vector(-o.matrix.transpose() * o.whiten2(o.data - o.matrix * u));
    };
    phi.lipschitz_grad = std::max(lip, 0.0);
    phi.lower_bound = 0.0;
    return phi;
}

OmFunctional prior_om(const Prior& prior) {
    return std::visit(
        [](const auto& mu) -> OmFunctional {
            using T = std::decay_t<decltype(mu)>;
            if constexpr (std::is_same_v<T, GaussianMeasure>)
                return gaussian_om(mu);
            else
                return besov_om(mu);
        },
        prior);
}

OmFunctional posterior_om(const InverseProblem& p) { return posterior_om(prior_om(p.prior), quadratic_potential(p.obs)); }

namespace {

int prior_dim(const Prior& p) {
    return std::visit([](const auto& mu) { return mu.dim(); }, p);
}

}  // namespace

MapSolution map_solve_gaussian_linear(const GaussianMeasure& prior, const LinearObservation& obs) {
    if (prior.dim() != obs.K()) throw InputError("map_solve_gaussian_linear: prior and observation dimensions differ");
    const SpectralOperator& c = prior.covariance;
    const Matrix basis = c.basis();
    std::vector<int> keep;
    for (int k = 0; k < c.dim(); ++k)
        if (!c.is_null_mode(k)) keep.push_back(k);
    const int r = static_cast<int>(keep.size());
    Matrix s(c.dim(), r);
    for (int i = 0; i < r; ++i) s.col(i) = basis.col(keep[i]) * std::sqrt(c.eigenvalues()[keep[i]]);

    MapSolution sol;
    sol.solver = "gaussian_normal_equations";
    const Vector resid0 = obs.data - obs.matrix * prior.mean;
    Vector w = Vector::Zero(r);
    if (r > 0) {
        const Matrix g = obs.matrix * s;
        Matrix wg(obs.J(), r);
        for (int i = 0; i < r; ++i) wg.col(i) = obs.whiten2(g.col(i));
        Matrix m = g.transpose() * wg;
        m.diagonal().array() += 1.0;
        m = 0.5 * (m + m.transpose());
        const Vector b = wg.transpose() * resid0;
        Eigen::LLT<Matrix> llt(m);
        if (llt.info() == Eigen::Success) {
            w = llt.solve(b);
        } else {
            sol.rank_deficient = true;
            w = m.completeOrthogonalDecomposition().solve(b);
        }
        sol.optimality_residual = (m * w - b).norm();
    }
    sol.point = prior.mean + s * w;
    const Vector res = obs.data - obs.matrix * sol.point;
    sol.objective = 0.5 * res.dot(obs.whiten2(res)) + 0.5 * w.squaredNorm();
    sol.iterations = 1;
    sol.converged = sol.optimality_residual <= 1e-8 * std::max(1.0, w.norm());
    return sol;
}

double weighted_l1_kkt_residual(const Vector& grad, const Vector& u, const Vector& weights) {
    double worst = 0.0;
    for (int k = 0; k < u.size(); ++k) {
        const double lam = 1.0 / weights[k];
        const double d = u[k] != 0.0 ? std::abs(grad[k] + (u[k] > 0.0 ? lam : -lam)) : std::max(0.0, std::abs(grad[k]) - lam);
        worst = std::max(worst, d);
    }
    return worst;
}

namespace {

Vector soft_threshold(const Vector& v, const Vector& thresholds) {
    Vector out(v.size());
    for (int k = 0; k < v.size(); ++k) {
        const double a = std::abs(v[k]) - thresholds[k];
        out[k] = a > 0.0 ? std::copysign(a, v[k]) : 0.0;
    }
    return out;
}

double power_lipschitz(const Potential& pot, int iterations) {
    const int dim = pot.dim;
    const Vector base = Vector::Zero(dim);
    const Vector g0 = pot.gradient(base);
    Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Vector hv = pot.gradient(base + v) - g0;
        est = v.dot(hv);
        const double nrm = hv.norm();
        if (!(nrm > 0.0)) break;
        v = hv / nrm;
    }
    return std::max(est, 1e-12);
}

}  // namespace

MapSolution minimise_weighted_l1(const Potential& pot, const Vector& weights, const SolverOptions& opts,
                                 std::optional<Vector> start) {
    if (!pot.has_gradient()) throw InputError("minimise_weighted_l1: potential needs a gradient");
    if (weights.size() != pot.dim) throw InputError("minimise_weighted_l1: weight dimension mismatch");
    if (!(weights.array() > 0.0).all()) throw ParameterError("minimise_weighted_l1: weights must be positive");
    const Vector inv_w = weights.cwiseInverse();
    auto objective = [&](const Vector& u) { return pot.eval(u) + u.cwiseAbs().dot(inv_w); };

    double lip = power_lipschitz(pot, opts.power_iterations);
    Vector x = start ? *start : Vector(Vector::Zero(pot.dim));
    Vector y = x;
    double t = 1.0;
    MapSolution sol;
    sol.solver = "fista";
    sol.converged = false;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const Vector g = pot.gradient(y);
        const double fy = pot.eval(y);
        Vector z;
        for (int bt = 0; bt < 200; ++bt) {
            z = soft_threshold(y - g / lip, inv_w / lip);
            const Vector dz = z - y;
            const double model = fy + g.dot(dz) + 0.5 * lip * dz.squaredNorm();
            if (pot.eval(z) <= model + 1e-14 * std::max(1.0, std::abs(fy))) break;
            lip *= 2.0;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if ((y - z).dot(z - x) > 0.0) {
            y = z;
            t = 1.0;
        } else {
            y = z + ((t - 1.0) / t_next) * (z - x);
            t = t_next;
        }
        x = z;
        sol.iterations = it;
        sol.optimality_residual = weighted_l1_kkt_residual(pot.gradient(x), x, weights);
        if (sol.optimality_residual < opts.tol) {
            sol.converged = true;
            break;
        }
    }
    sol.point = x;
    sol.objective = objective(x);
    if (!sol.converged) sol.note = "iteration limit reached";
    return sol;
}

MapSolution map_solve_besov(const BesovMeasure& prior, const Potential& pot, const SolverOptions& opts) {
    if (prior.dim() != pot.dim) throw InputError("map_solve_besov: prior and potential dimensions differ");
    return minimise_weighted_l1(pot, prior.gamma, opts);
}

MapSolution map_solve_besov_cd(const BesovMeasure& prior, const LinearObservation& obs, double tol, int max_sweeps) {
    if (prior.dim() != obs.K()) throw InputError("map_solve_besov_cd: prior and observation dimensions differ");
    const int k_dim = obs.K();
    Matrix q(k_dim, k_dim);
    for (int k = 0; k < k_dim; ++k) q.col(k) = obs.matrix.transpose() * obs.whiten2(obs.matrix.col(k));
    const Vector c = obs.matrix.transpose() * obs.whiten2(obs.data);
    Vector u = Vector::Zero(k_dim);
    Vector qu = Vector::Zero(k_dim);
    MapSolution sol;
    sol.solver = "coordinate_descent";
    sol.converged = false;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double change = 0.0;
        for (int k = 0; k < k_dim; ++k) {
            const double qkk = q(k, k);
            double next = 0.0;
            if (qkk > 0.0) {
                const double rho = c[k] - (qu[k] - qkk * u[k]);
                const double a = std::abs(rho) - 1.0 / prior.gamma[k];
                next = a > 0.0 ? std::copysign(a, rho) / qkk : 0.0;
            }
            const double delta = next - u[k];
            if (delta != 0.0) {
                qu += q.col(k) * delta;
                u[k] = next;
                change = std::max(change, std::abs(delta));
            }
        }
        sol.iterations = sweep;
        if (change <= tol) {
            sol.converged = true;
            break;
        }
    }
    sol.point = u;
    const Potential phi = quadratic_potential(obs);
    sol.objective = phi.eval(u) + (u.array().abs() / prior.gamma.array()).sum();
    sol.optimality_residual = weighted_l1_kkt_residual(phi.gradient(u), u, prior.gamma);
    return sol;
}

MapSolution map_solve(const InverseProblem& p, const SolverOptions& opts) {
    if (prior_dim(p.prior) != p.obs.K()) throw InputError("map_solve: prior and observation dimensions differ");
    if (const auto* g = std::get_if<GaussianMeasure>(&p.prior)) return map_solve_gaussian_linear(*g, p.obs);
    const BesovMeasure& b = std::get<BesovMeasure>(p.prior);
    MapSolution sol = map_solve_besov(b, quadratic_potential(p.obs), opts);
    if (opts.check_uniqueness) {
        const MapSolution cd = map_solve_besov_cd(b, p.obs);
        if ((cd.point - sol.point).norm() > 1e-4 && std::abs(cd.objective - sol.objective) <= 1e-10) {
            sol.non_unique = true;
            sol.note = "coordinate descent reached a different minimiser with equal objective";
        }
    }
    return sol;
}

// ---------------------------------------------------------------- perturbations

std::string to_string(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::data: return "data";
        case PerturbationKind::potential_projection: return "potential_projection";
        case PerturbationKind::prior: return "prior";
    }
    return "?";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
    if (s == "data") return PerturbationKind::data;
    if (s == "potential_projection") return PerturbationKind::potential_projection;
    if (s == "prior") return PerturbationKind::prior;
    throw InputError("unknown perturbation kind '" + s + "'");
}

int monotone_burn_in(const std::vector<double>& v, double slack) {
    const int n = static_cast<int>(v.size());
    int i = n - 1;
    while (i > 0 && v[i] <= v[i - 1] + slack) --i;
    return std::max(i, 0);
}

namespace {

std::vector<Vector> probe_points(const Vector& center, int count, std::uint64_t seed) {
    std::vector<Vector> pts{center};
    Rng rng = make_rng(seed, 0x9b0e);
    std::normal_distribution<double> normal;
    for (int i = 1; i < count; ++i) {
        Vector p = center;
        for (int k = 0; k < p.size(); ++k) p[k] += normal(rng);
        pts.push_back(p);
    }
    return pts;
}

}  // namespace

PerturbationReport perturbation_experiment(PerturbationKind kind, const InverseProblem& base,
                                           const std::vector<double>& n, const PerturbationSchedule& schedule,
                                           const ExperimentOptions& opts) {
    if (n.empty()) throw InputError("perturbation_experiment: empty schedule");
    if (kind == PerturbationKind::data && !schedule.data)
        throw InputError("perturbation_experiment: data schedule missing");
    if (kind == PerturbationKind::prior && !schedule.prior)
        throw InputError("perturbation_experiment: prior schedule missing");

    auto problem_at = [&](double v) -> InverseProblem {
        switch (kind) {
            case PerturbationKind::data: return {base.prior, base.obs.with_data(schedule.data(v))};
            case PerturbationKind::potential_projection:
                return {base.prior, base.obs.projected(static_cast<int>(std::lround(v)))};
            case PerturbationKind::prior: return {schedule.prior(v), base.obs};
        }
        throw InputError("perturbation_experiment: bad kind");
    };

    PerturbationReport rep;
    rep.kind = kind;
    const MapSolution limit = map_solve(base, opts.solver);
    rep.limit_map = limit.point;
    if (!limit.converged) rep.notes.push_back("limit MAP solve did not converge");

    const int nn = static_cast<int>(n.size());
    std::vector<InverseProblem> problems;
    for (double v : n) problems.push_back(problem_at(v));
    std::vector<MapSolution> sols(nn);
    parallel_for(static_cast<std::size_t>(nn), [&](std::size_t i) { sols[i] = map_solve(problems[i], opts.solver); },
                 opts.threads);

    std::vector<double> dist;
    std::vector<Vector> maps;
    std::vector<OmFunctional> members;
    for (int i = 0; i < nn; ++i) {
        const double d = (sols[i].point - limit.point).norm();
        rep.rows.push_back({n[i], sols[i].point, sols[i].objective, sols[i].optimality_residual, d, sols[i].converged});
        if (!sols[i].converged) rep.notes.push_back("solve at n=" + std::to_string(n[i]) + " flagged non-converged");
        dist.push_back(d);
        maps.push_back(sols[i].point);
        members.push_back(posterior_om(problems[i]));
    }
    const FunctionalSequence seq = make_sequence(n, members, posterior_om(base));
    rep.modes = mode_convergence_check(seq, maps, {limit.point}, opts.modes);
    rep.burn_in = monotone_burn_in(dist, 1e-13);
    rep.monotone_after_burn_in = rep.burn_in <= nn / 2;
    rep.final_distance = dist.back();

    const std::vector<Vector> pts = probe_points(limit.point, opts.probe_points, opts.seed);
    if (kind == PerturbationKind::data || kind == PerturbationKind::potential_projection) {
        std::vector<Potential> phis;
        for (const InverseProblem& p : problems) phis.push_back(quadratic_potential(p.obs));
        ContinuityOptions co;
        co.seed = opts.seed;
        rep.potential_continuity = continuous_convergence_probe(n, phis, quadratic_potential(base.obs), pts, co);
    } else {
        std::vector<OmFunctional> priors;
        for (const InverseProblem& p : problems) priors.push_back(prior_om(p.prior));
        const FunctionalSequence pseq = make_sequence(n, priors, prior_om(base.prior));
        if (const auto* g = std::get_if<GaussianMeasure>(&base.prior)) {
            std::vector<GaussianMeasure> gs;
            for (const InverseProblem& p : problems) gs.push_back(std::get<GaussianMeasure>(p.prior));
            for (const Vector& x : pts) rep.prior_recovery.push_back(recovery_check(pseq, x, gaussian_recovery_sequence(gs, *g, x)));
            rep.prior_equicoercivity = equicoercivity_probe(pseq, 1.0, 1000, gaussian_compact_bound(gs), opts.seed);
        } else {
            const BesovMeasure& b = std::get<BesovMeasure>(base.prior);
            std::vector<BesovMeasure> bs;
            double smin = b.s;
            for (const InverseProblem& p : problems) {
                bs.push_back(std::get<BesovMeasure>(p.prior));
                smin = std::min(smin, bs.back().s);
            }
            for (const Vector& x : pts) rep.prior_recovery.push_back(recovery_check(pseq, x, besov_recovery_sequence(bs, b, x)));
            const double sbar = b.s - b.d * b.eta / 2.0;
            if (smin >= sbar)
                rep.prior_equicoercivity =
                    equicoercivity_probe(pseq, 1.0, 1000, besov_compact_bound(sbar, b.d), opts.seed);
            else
                rep.notes.push_back("some member has s below sbar; coordinate compactness bound not applicable");
        }
    }
    return rep;
}

// ---------------------------------------------------------------- small noise

namespace {

/// Visits every size-r subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(int n, int r, F&& f) {
    std::vector<int> idx(r);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        f(idx);
        int i = r - 1;
        while (i >= 0 && idx[i] == n - r + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double binomial(int n, int r) {
    double v = 1.0;
    for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
    return v;
}

}  // namespace

ConstrainedMinimum constrained_prior_minimum(const Prior& prior, const LinearObservation& obs) {
    if (prior_dim(prior) != obs.K()) throw InputError("constrained_prior_minimum: dimension mismatch");
    if (const auto* g = std::get_if<GaussianMeasure>(&prior)) {
        const SpectralOperator& c = g->covariance;
        const Matrix basis = c.basis();
        std::vector<int> keep;
        for (int k = 0; k < c.dim(); ++k)
            if (!c.is_null_mode(k)) keep.push_back(k);
        Matrix s(c.dim(), keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i)
            s.col(i) = basis.col(keep[i]) * std::sqrt(c.eigenvalues()[keep[i]]);
        const Matrix gm = obs.matrix * s;
        const Vector w = gm.completeOrthogonalDecomposition().solve(obs.data - obs.matrix * g->mean);
        const Vector u = g->mean + s * w;
        return {u, 0.5 * w.squaredNorm(), true};
    }
    const BesovMeasure& b = std::get<BesovMeasure>(prior);
    const Eigen::FullPivLU<Matrix> lu(obs.matrix);
    const int r = static_cast<int>(lu.rank());
    const int k_dim = obs.K();
    if (binomial(k_dim, r) > 2e6) throw InputError("constrained_prior_minimum: too many vertices to enumerate");
    const double scale = std::max(1.0, obs.data.norm());
    double best = kInf, second = kInf;
    Vector best_u = Vector::Zero(k_dim);
    if (r == 0) {
        if (obs.data.norm() > 1e-10) throw InputError("constrained_prior_minimum: constraint set is empty");
        return {best_u, 0.0, true};
    }
    for_each_subset(k_dim, r, [&](const std::vector<int>& idx) {
        Matrix sub(obs.J(), r);
        for (int i = 0; i < r; ++i) sub.col(i) = obs.matrix.col(idx[i]);
        const Eigen::ColPivHouseholderQR<Matrix> qr(sub);
        if (qr.rank() < r) return;
        const Vector x = qr.solve(obs.data);
        if ((sub * x - obs.data).norm() > 1e-9 * scale) return;
        Vector u = Vector::Zero(k_dim);
        for (int i = 0; i < r; ++i) u[idx[i]] = x[i];
        const double cost = (u.array().abs() / b.gamma.array()).sum();
        if ((u - best_u).norm() <= 1e-12 * scale && std::isfinite(best)) return;
        if (cost < best) {
            second = best;
            best = cost;
            best_u = u;
        } else if (cost < second) {
            second = cost;
        }
    });
    if (!std::isfinite(best)) throw InputError("constrained_prior_minimum: constraint set is empty");
    return {best_u, best, !(second - best <= 1e-12 * std::max(1.0, best))};
}

SmallNoiseReport small_noise_experiment(const InverseProblem& base, const std::vector<double>& n,
                                        const std::vector<Vector>& table_points, const ExperimentOptions& opts) {
    if (n.empty()) throw InputError("small_noise_experiment: empty schedule");
    SmallNoiseReport rep;
    rep.limit = constrained_prior_minimum(base.prior, base.obs);
    const Potential phi = quadratic_potential(base.obs);
    const OmFunctional i0 = prior_om(base.prior);
    if (phi.eval(rep.limit.point) > 1e-10 * std::max(1.0, base.obs.data.squaredNorm()))
        rep.note = "potential minimum 0 not attained on the constraint set; ";
    const int nn = static_cast<int>(n.size());
    std::vector<MapSolution> sols(nn);
    parallel_for(static_cast<std::size_t>(nn), [&](std::size_t i) {
        if (!(n[i] > 0.0)) throw InputError("small_noise_experiment: n must be positive");
        sols[i] = map_solve({base.prior, base.obs.with_noise_scale(1.0 / n[i])}, opts.solver);
    }, opts.threads);
    std::vector<double> lx, ly;
    for (int i = 0; i < nn; ++i) {
        const double d = (sols[i].point - rep.limit.point).norm();
        rep.rows.push_back({n[i], sols[i].point, d, phi.eval(sols[i].point), i0.eval(sols[i].point), sols[i].converged});
        if (d > 0.0) {
            lx.push_back(std::log(n[i]));
            ly.push_back(std::log(d));
        }
    }
    rep.decay_exponent = 0.0;
    if (lx.size() >= 2) {
        const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
        const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        rep.decay_exponent = sxx > 0.0 ? -sxy / sxx : 0.0;
    }

    std::vector<Vector> pts = table_points;
    if (pts.empty()) {
        pts.push_back(rep.limit.point);
        pts.push_back(i0.anchor);
        Vector off = rep.limit.point;
        off[0] += 0.1;
        pts.push_back(off);
    }
    for (const Vector& p : pts) {
        PointwiseLimitRow row;
        row.point = p;
        row.potential = phi.eval(p);
        row.prior_om = i0.eval(p);
        row.values = Vector(nn);
        for (int i = 0; i < nn; ++i) row.values[i] = n[i] * row.potential + row.prior_om;
        row.limit_value = row.potential <= 1e-12 * std::max(1.0, base.obs.data.squaredNorm()) ? row.prior_om : kInf;
        rep.pointwise.push_back(std::move(row));
    }
    rep.note += "Gamma-convergence of n Phi + I_0 is not asserted: the liminf inequality needs fast enough "
                "convergence of the arguments, so the trajectory is measured rather than assumed to converge";
    return rep;
}

}  // namespace ommap
