#include "ommap/om.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ommap/errors.hpp"

namespace ommap {

double OmFunctional::nonsmooth(const Vector& u) const {
    if (!has_nonsmooth()) return 0.0;
    return (u.array().abs() / l1_weights.array()).sum();
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(Tri v) {
    switch (v) {
        case Tri::yes: return "yes";
        case Tri::no: return "no";
        case Tri::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

void check_dim(const Vector& u, int dim, const std::string& who) {
    if (u.size() != dim) throw InputError(who + ": expected a vector of dimension " + std::to_string(dim));
}

}  // namespace

OmFunctional gaussian_om(const GaussianMeasure& mu, double rank_tol, double range_tol) {
    OmFunctional om;
    om.name = "gaussian";
    om.dim = mu.dim();
    om.anchor = mu.mean;
    const Vector m = mu.mean;
    const SpectralOperator c = mu.covariance;
    const int dim = om.dim;
    om.in_domain = [m, c, rank_tol, range_tol, dim](const Vector& u) {
        check_dim(u, dim, "gaussian_om");
        return in_sqrt_range(c, u - m, rank_tol, range_tol);
    };
    om.smooth = [m, c, rank_tol](const Vector& u) { return 0.5 * sqrt_pinv_apply(c, u - m, rank_tol).squaredNorm(); };
    om.smooth_gradient = [m, c, rank_tol](const Vector& u) { return pinv_apply(c, u - m, rank_tol); };
    auto inside = om.in_domain;
    auto smooth = om.smooth;
    om.eval = [inside, smooth](const Vector& u) { return inside(u) ? smooth(u) : kInf; };
    om.domain_note = "E = m + range C^{1/2}";
    return om;
}

OmFunctional besov_om(const BesovMeasure& mu) {
    OmFunctional om;
    om.name = "besov1";
    om.dim = mu.dim();
    om.anchor = Vector::Zero(om.dim);
    om.l1_weights = mu.gamma;
    const Vector gamma = mu.gamma;
    const int dim = om.dim;
    om.in_domain = [dim](const Vector& u) {
        check_dim(u, dim, "besov_om");
        return u.allFinite();
    };
    om.smooth = [](const Vector&) { return 0.0; };
    om.smooth_gradient = [dim](const Vector&) { return Vector(Vector::Zero(dim)); };
    om.eval = [gamma, dim](const Vector& u) {
        check_dim(u, dim, "besov_om");
        return (u.array().abs() / gamma.array()).sum();
    };
    om.domain_note = "E = l1_gamma; every vector of the truncation has finite norm, the tail sum_{k>K} |u_k|/gamma_k is "
                     "not represented";
    return om;
}

OmFunctional posterior_om(const OmFunctional& prior, const Potential& phi) {
    if (phi.dim != prior.dim) throw InputError("posterior_om: potential and prior dimensions differ");
    OmFunctional om = prior;
    om.name = "posterior(" + prior.name + ", " + phi.name + ")";
    auto pe = prior.eval;
    auto ps = prior.smooth;
    auto pg = prior.smooth_gradient;
    auto f = phi.eval;
    auto g = phi.gradient;
    om.eval = [pe, f](const Vector& u) {
        const double i0 = pe(u);
        return i0 == kInf ? kInf : f(u) + i0;
    };
    om.smooth = [ps, f](const Vector& u) { return f(u) + ps(u); };
    if (g && pg)
        om.smooth_gradient = [pg, g](const Vector& u) { return Vector(g(u) + pg(u)); };
    else
        om.smooth_gradient = nullptr;
    return om;
}

OmFunctional density_om(const Density1D& mu, double anchor) {
    const double ra = mu(anchor);
    if (!(ra > 0.0) || !std::isfinite(ra)) throw InputError("density_om: density must be finite and positive at the anchor");
    OmFunctional om;
    om.name = "-log " + mu.name();
    om.dim = 1;
    om.anchor = Vector::Constant(1, anchor);
    const double log_ra = std::log(ra);
    om.in_domain = [mu](const Vector& x) {
        check_dim(x, 1, "density_om");
        const double v = mu(x[0]);
        return v > 0.0 && std::isfinite(v);
    };
    om.eval = [mu, log_ra](const Vector& x) {
        check_dim(x, 1, "density_om");
        const double v = mu(x[0]);
        return v > 0.0 ? log_ra - std::log(v) : kInf;
    };
    om.smooth = om.eval;
    om.domain_note = "{x : 0 < rho(x) < inf}";
    return om;
}

// ---------------------------------------------------------------- difference check

OmDifferenceReport om_difference_check(const Measure& mu, const OmFunctional& om, const Vector& x1, const Vector& x2,
                                       const Vector& radii, const WeightedSeqSpace& norm, const OmCheckOptions& opts) {
    if (!om.in_domain(x1) || !om.in_domain(x2)) throw InputError("om_difference_check: both points must lie in E");
    OmDifferenceReport rep;
    rep.ratio = ball_ratio_curve(mu, x1, x2, radii, norm, opts.ball);
    rep.expected = std::exp(om.eval(x2) - om.eval(x1));
    rep.deviation = std::abs(rep.ratio.limit.limit - rep.expected);
    rep.tolerance = opts.sigmas * rep.ratio.limit.stderr + opts.abs_tol;
    if (!(rep.ratio.limit.stderr <= opts.max_rel_stderr * rep.expected))
        rep.verdict = Verdict::inconclusive;
    else
        rep.verdict = rep.deviation <= rep.tolerance ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- property M

DecayTrend decay_trend(const Vector& radii, const Vector& ratios, int tail) {
    const int n = static_cast<int>(ratios.size());
    if (n == 0 || radii.size() != n) throw InputError("decay_trend: radii and ratios must be non-empty and aligned");
    DecayTrend t{};
    t.min_ratio = ratios.minCoeff();
    t.last_ratio = ratios[n - 1];
    int down = 0;
    for (int k = 1; k < n; ++k)
        if (ratios[k] <= ratios[k - 1]) ++down;
    t.decreasing_fraction = n > 1 ? static_cast<double>(down) / (n - 1) : 1.0;

    std::vector<double> lx, ly;
    for (int k = std::max(0, n - tail); k < n; ++k)
        if (ratios[k] > 0.0 && std::isfinite(ratios[k])) {
            lx.push_back(std::log(radii[k]));
            ly.push_back(std::log(ratios[k]));
        }
    t.loglog_slope = 0.0;
    if (lx.size() >= 2) {
        const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
        const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        t.loglog_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    const bool vanished = t.last_ratio == 0.0;
    t.decays = t.decreasing_fraction >= 0.8 && (vanished || (t.last_ratio < ratios[0] && t.loglog_slope > 0.05));
    return t;
}

MPropertyReport m_property_probe(const Measure& mu, const OmFunctional& om, const std::vector<Vector>& outside_points,
                                 const Vector& radii, const WeightedSeqSpace& norm, const BallOptions& opts) {
    MPropertyReport rep;
    rep.anchor = om.anchor;
    if (!std::isfinite(om.eval(om.anchor))) throw InputError("m_property_probe: OM must be finite at the anchor");
    bool all = true;
    for (const Vector& x : outside_points) {
        if (om.in_domain(x)) throw InputError("m_property_probe: outside point lies in E");
        MPropertyEntry e;
        e.point = x;
        e.ratio = ball_ratio_curve(mu, x, om.anchor, radii, norm, opts);
        e.trend = decay_trend(radii, e.ratio.ratios);
        all = all && e.trend.decays;
        rep.entries.push_back(std::move(e));
    }
    rep.verdict = all ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- modes

Vector nelder_mead_maximise(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                            int iterations) {
    const int n = static_cast<int>(x0.size());
    std::vector<Vector> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    for (int i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);
    std::vector<int> order(n + 1);
    for (int it = 0; it < iterations; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] > val[b]; });
        const int worst = order[n];
        const int second = order[n - 1];
        const int best = order[0];
        Vector centroid = Vector::Zero(n);
        for (int i = 0; i < n; ++i) centroid += pts[order[i]];
        centroid /= n;
        const Vector xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        if (fr > val[best]) {
            const Vector xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            if (fe > fr) {
                pts[worst] = xe;
                val[worst] = fe;
            } else {
                pts[worst] = xr;
                val[worst] = fr;
            }
        } else if (fr > val[second]) {
            pts[worst] = xr;
            val[worst] = fr;
        } else {
            const Vector xc = centroid + 0.5 * (pts[worst] - centroid);
            const double fc = f(xc);
            if (fc > val[worst]) {
                pts[worst] = xc;
                val[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    val[i] = f(pts[i]);
                }
            }
        }
    }
    const int best = static_cast<int>(std::max_element(val.begin(), val.end()) - val.begin());
    return pts[best];
}

namespace {

bool is_monte_carlo(const MassCurves& c) { return c.method == MassMethod::monte_carlo; }

}  // namespace

ModeClassification classify_mode(const Measure& mu, const Vector& candidate, const std::vector<Vector>& competitors,
                                 const Vector& radii, const WeightedSeqSpace& norm, const ModeOptions& opts) {
    if (radii.size() == 0) throw InputError("classify_mode: empty radius schedule");
    ModeClassification mc;
    mc.candidate = candidate;
    mc.radii = radii;
    mc.norm = describe_norm(norm);

    std::vector<Vector> centers{candidate};
    centers.insert(centers.end(), competitors.begin(), competitors.end());
    const int nc = static_cast<int>(centers.size());
    const int nr = static_cast<int>(radii.size());
    const MassCurves curves = ball_mass_curves(mu, centers, radii, norm, opts.ball);
    for (int k = 0; k < nr; ++k)
        if (curves.log_mass(0, k) == -kInf) throw InputError("classify_mode: candidate ball has zero mass");

    BallOptions cheap = opts.ball;
    cheap.samples = std::min(opts.ball.samples, opts.refine_samples);

    mc.strong_ratio_curve = Vector(nr);
    mc.strong_stderr = Vector::Zero(nr);
    mc.sup_location_per_radius_index = Vector(nr);
    std::vector<int> argmax(nr);
    for (int k = 0; k < nr; ++k) {
        int best = 0;
        for (int i = 1; i < nc; ++i)
            if (curves.log_mass(i, k) > curves.log_mass(best, k)) best = i;
        double log_sup = curves.log_mass(best, k);
        argmax[k] = best;
        mc.sup_location_per_radius_index[k] = best - 1;
        if (opts.refine && opts.nelder_mead_iterations > 0) {
            const double r = radii[k];
            auto f = [&](const Vector& c) {
                const double m = ball_mass(mu, c, r, norm, cheap).estimate;
                return m > 0.0 ? std::log(m) : -kInf;
            };
            const Vector x = nelder_mead_maximise(f, centers[best], 0.5 * r, opts.nelder_mead_iterations);
            const double m = ball_mass(mu, x, r, norm, opts.ball).estimate;
            if (m > 0.0 && std::log(m) > log_sup) {
                log_sup = std::log(m);
                mc.sup_location_per_radius_index[k] = -2;
            }
        }
        mc.strong_ratio_curve[k] = std::min(1.0, std::exp(curves.log_mass(0, k) - log_sup));
        const double rel = std::hypot(curves.rel_stderr(0, k), best == 0 ? 0.0 : curves.rel_stderr(best, k));
        mc.strong_stderr[k] = rel * mc.strong_ratio_curve[k];
    }
    std::vector<Vector> batch;
    for (const Matrix& b : curves.batch_log_mass) {
        Vector v(nr);
        for (int k = 0; k < nr; ++k) v[k] = std::min(1.0, std::exp(b(0, k) - b(argmax[k], k)));
        batch.push_back(v);
    }
    mc.strong_limit = extrapolate_limit(radii, mc.strong_ratio_curve, batch, opts.ball);

    bool dips = false;
    for (int k = 0; k < nr; ++k)
        if (mc.strong_ratio_curve[k] < 1.0 - std::max(opts.tol, opts.stderr_sigmas * mc.strong_stderr[k])) dips = true;
    if (dips)
        mc.strong = Tri::no;
    else if (mc.strong_limit.limit >= 1.0 - opts.tol && mc.strong_limit.limit <= 1.0 + opts.tol)
        mc.strong = Tri::yes;
    else
        mc.strong = Tri::inconclusive;

    mc.weak_radii = opts.weak_radii.size() > 0 ? opts.weak_radii : radii;
    const MassCurves wc = opts.weak_radii.size() > 0 ? ball_mass_curves(mu, centers, mc.weak_radii, norm, opts.ball)
                                                     : curves;
    const int nw = static_cast<int>(mc.weak_radii.size());
    const int window = std::clamp(opts.weak_window, 1, nw);
    mc.weak_ratio_per_competitor = Vector::Zero(nc - 1);
    mc.weak_worst_ratio = 0.0;
    mc.weak_worst_competitor = -1;
    double worst_se = 0.0;
    for (int i = 1; i < nc; ++i) {
        const BallRatioEstimate est = ratio_from_curves(wc, i, 0, opts.ball);
        double v = 0.0, se = 0.0;
        for (int k = nw - window; k < nw; ++k)
            if (est.ratios[k] > v) {
                v = est.ratios[k];
                se = est.stderr[k];
            }
        mc.weak_ratio_per_competitor[i - 1] = v;
        if (v > mc.weak_worst_ratio) {
            mc.weak_worst_ratio = v;
            mc.weak_worst_competitor = i - 1;
            worst_se = se;
        }
    }
    if (nc == 1) mc.weak_worst_ratio = 1.0;
    if (mc.weak_worst_ratio > 1.0 + std::max(opts.tol, opts.stderr_sigmas * worst_se))
        mc.global_weak = Tri::no;
    else if (mc.weak_worst_ratio <= 1.0 + opts.tol)
        mc.global_weak = Tri::yes;
    else
        mc.global_weak = Tri::inconclusive;

    if (mc.strong == Tri::yes && mc.global_weak != Tri::yes) mc.strong = Tri::inconclusive;

    mc.caveat = "approximate sup: M_r is the largest ball mass over " + std::to_string(nc) + " supplied centres" +
                (opts.refine ? " refined by " + std::to_string(opts.nelder_mead_iterations) + " Nelder-Mead steps" : "") +
                (is_monte_carlo(curves) ? "; Monte Carlo masses" : "");
    return mc;
}

}  // namespace ommap
