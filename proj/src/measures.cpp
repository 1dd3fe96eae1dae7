#include "ommap/measures.hpp"

#include "ommap/errors.hpp"
#include "ommap/parallel.hpp"
#include "ommap/rng.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ommap {

GaussianMeasure::GaussianMeasure(Vector m, SpectralOperator c) : mean(std::move(m)), covariance(std::move(c)) {
    if (mean.size() != covariance.dim()) throw InputError("GaussianMeasure: mean and covariance dimensions differ");
}

BesovWeights besov_weights(double s, int d, double eta, int dim) {
    if (d < 1) throw ParameterError("besov_weights: d must be a positive integer");
    if (!(eta > 0.0)) throw ParameterError("besov_weights: eta must be positive");
    if (dim < 1) throw ParameterError("besov_weights: dim must be >= 1");
    const double inv_tau = s / d + 0.5;
    if (!(inv_tau > 0.0)) throw ParameterError("besov_weights: tau = (s/d + 1/2)^{-1} must be positive");
    BesovWeights w{1.0 / inv_tau, s - d * (1.0 + eta), Vector(dim), Vector(dim)};
    for (int k = 1; k <= dim; ++k) {
        w.gamma[k - 1] = std::pow(static_cast<double>(k), 1.0 - inv_tau);
        w.delta[k - 1] = std::pow(static_cast<double>(k), 2.0 + eta - inv_tau);
    }
    return w;
}

BesovMeasure::BesovMeasure(double s_, int d_, double eta_, int dim) : s(s_), d(d_), eta(eta_), truncation(dim) {
    BesovWeights w = besov_weights(s, d, eta, dim);
    tau = w.tau;
    t = w.t;
    gamma = std::move(w.gamma);
    delta = std::move(w.delta);
}

// ---------------------------------------------------------------- Density1D

Density1D::Density1D(std::string name, DensityFn density, std::vector<Interval> support,
                     std::optional<MassFn> mass_fn, std::vector<double> breakpoints, double retained_mass)
    : name_(std::move(name)),
      density_(std::move(density)),
      support_(std::move(support)),
      mass_fn_(std::move(mass_fn)),
      breakpoints_(std::move(breakpoints)),
      retained_mass_(retained_mass) {
    if (support_.empty()) throw InputError("Density1D: empty support");
    std::sort(breakpoints_.begin(), breakpoints_.end());
    double total = 0.0;
    for (const Interval& piece : support_) total += integrate(piece.lo, piece.hi, 1e-13);
    if (std::abs(total - retained_mass_) > 1e-8) {
        std::ostringstream msg;
        msg << "Density1D '" << name_ << "': total mass " << total << " differs from " << retained_mass_;
        throw ParameterError(msg.str());
    }
}

double Density1D::closed_form_mass(double center, double radius, bool closed) const {
    if (!mass_fn_) throw InputError("Density1D '" + name_ + "' has no closed-form mass");
    return (*mass_fn_)(center, radius, closed);
}

namespace {

double gk(const std::function<double(double)>& f, double a, double b, double* err) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12, err);
}

/// Integral over (a, b) with x = a + (b - a) s^2, which removes an integrable
/// |x - a|^{-1/2} singularity at a (b < a mirrors it).
double integrate_from_singular_end(const std::function<double(double)>& f, double a, double b) {
    const double w = b - a;
    auto g = [&](double s) {
        double x = a + w * s * s;
        if (x == a) x = std::nextafter(a, b);
        const double v = f(x) * 2.0 * std::abs(w) * s;
        return std::isfinite(v) ? v : 0.0;
    };
    double err = 0.0;
    return gk(g, 0.0, 1.0, &err);
}

double integrate_piece(const std::function<double(double)>& f, double a, double b, bool sing_a, bool sing_b,
                       double abs_tol) {
    if (!(b > a)) return 0.0;
    if (b - a < 256.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)))
        return f(0.5 * (a + b)) * (b - a);
    if (!sing_a && !sing_b) {
        double err = 0.0;
        const double value = gk(f, a, b, &err);
        if (err <= abs_tol) return value;
        const double m = 0.5 * (a + b);
        return integrate_from_singular_end(f, a, m) + integrate_from_singular_end(f, b, m);
    }
    if (sing_a && sing_b) {
        const double m = 0.5 * (a + b);
        return integrate_from_singular_end(f, a, m) + integrate_from_singular_end(f, b, m);
    }
    return sing_a ? integrate_from_singular_end(f, a, b) : integrate_from_singular_end(f, b, a);
}

}  // namespace

double Density1D::integrate(double lo, double hi, double abs_tol) const {
    double total = 0.0;
    for (const Interval& piece : support_) {
        const double a = std::max(lo, piece.lo);
        const double b = std::min(hi, piece.hi);
        if (!(b > a)) continue;
        std::vector<double> cuts{a};
        for (double bp : breakpoints_)
            if (bp > a && bp < b) cuts.push_back(bp);
        cuts.push_back(b);
        auto is_break = [&](double x) { return std::binary_search(breakpoints_.begin(), breakpoints_.end(), x); };
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_piece(density_, cuts[i], cuts[i + 1], is_break(cuts[i]), is_break(cuts[i + 1]), abs_tol);
    }
    return total;
}

double LengthMeasure2D::total_length() const {
    double total = 0.0;
    for (const auto& s : segments) total += (s.b - s.a).norm();
    return total;
}

int measure_dim(const Measure& mu) {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Density1D>) return 1;
            else return m.dim();
        },
        mu);
}

std::string measure_kind(const Measure& mu) {
    static const char* names[] = {"gaussian", "besov1", "density1d", "length2d"};
    return names[mu.index()];
}

std::string to_string(MassMethod m) {
    switch (m) {
        case MassMethod::closed_form: return "closed-form";
        case MassMethod::quadrature: return "quadrature";
        case MassMethod::exact_product: return "exact-product";
        case MassMethod::monte_carlo: return "monte-carlo";
    }
    return "unknown";
}

std::string describe_norm(const WeightedSeqSpace& norm) {
    std::ostringstream s;
    s << "l^";
    if (norm.is_sup_norm()) s << "inf";
    else s << norm.p();
    s << (norm.is_unweighted() ? "" : "_gamma") << "(dim=" << norm.dim() << ")";
    return s.str();
}

Vector geometric_radii(double r0, int levels) {
    if (!(r0 > 0.0) || levels < 1) throw InputError("geometric_radii: need r0 > 0 and levels >= 1");
    Vector r(levels);
    for (int j = 0; j < levels; ++j) r[j] = std::ldexp(r0, -j);
    return r;
}

// ---------------------------------------------------------------- sampling

Matrix sample(const Measure& mu, int n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample: n must be >= 1");
    Rng rng(derive_seed(seed, 0x5a3));
    if (const auto* g = std::get_if<GaussianMeasure>(&mu)) {
        const int k = g->dim();
        const Vector sd = g->covariance.eigenvalues().cwiseSqrt();
        std::normal_distribution<double> normal;
        Matrix out(n, k);
        Vector xi(k);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) xi[j] = sd[j] * normal(rng);
            out.row(i) = (g->mean + g->covariance.from_eigen(xi)).transpose();
        }
        return out;
    }
    if (const auto* b = std::get_if<BesovMeasure>(&mu)) {
        std::exponential_distribution<double> expo;
        std::bernoulli_distribution coin;
        Matrix out(n, b->dim());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < b->dim(); ++j) out(i, j) = (coin(rng) ? 1.0 : -1.0) * b->gamma[j] * expo(rng);
        return out;
    }
    throw InputError("sample: only gaussian and besov1 measures can be sampled");
}

// ---------------------------------------------------------------- product measures

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Gaussian or Laplace product law in (possibly rotated) coordinates.
struct ProductModel {
    bool laplace = false;
    std::optional<Matrix> basis;
    Vector loc;
    Vector scale;
    std::vector<bool> degenerate;
    Vector weights;
    double p = 2.0;

    int dim() const { return static_cast<int>(loc.size()); }

    Vector to_model(const Vector& x) const { return basis ? Vector(basis->transpose() * x) : x; }

    double log_density(int k, double x) const {
        const double z = (x - loc[k]) / scale[k];
        if (laplace) return std::log(BesovMeasure::kZ1 / scale[k]) - std::abs(z);
        return -0.5 * z * z - std::log(scale[k]) - kLogSqrt2Pi;
    }

    /// log P(|U_k - c| < h) for a non-degenerate coordinate.
    double log_interval_mass(int k, double c, double h) const {
        const double s = scale[k];
        const double a = (c - h - loc[k]) / s;
        const double b = (c + h - loc[k]) / s;
        if (laplace) {
            double mass;
            if (a >= 0.0) mass = 0.5 * std::exp(-a) * -std::expm1(a - b);
            else if (b <= 0.0) mass = 0.5 * std::exp(b) * -std::expm1(a - b);
            else mass = 0.5 * (-std::expm1(-b)) + 0.5 * (-std::expm1(a));
            return std::log(mass);
        }
        if (b - a < 1.0) {
            auto phi = [](double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); };
            return std::log(boost::math::quadrature::gauss<double, 20>::integrate(phi, a, b));
        }
        double mass;
        if (a >= 0.0) mass = 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
        else if (b <= 0.0) mass = 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
        else mass = 1.0 - 0.5 * std::erfc(b / std::numbers::sqrt2) - 0.5 * std::erfc(-a / std::numbers::sqrt2);
        return std::log(mass);
    }
};

ProductModel product_model(const Measure& mu, const WeightedSeqSpace& norm) {
    ProductModel pm;
    pm.p = norm.p();
    pm.weights = norm.weights();
    if (const auto* g = std::get_if<GaussianMeasure>(&mu)) {
        const SpectralOperator& c = g->covariance;
        if (c.has_basis()) {
            if (!(norm.is_unweighted() && norm.p() == 2.0))
                throw InputError("ball_mass: a Gaussian with an explicit eigenbasis supports only unweighted l2 balls");
            pm.basis = c.basis();
        }
        pm.loc = pm.to_model(g->mean);
        pm.scale = c.eigenvalues().cwiseSqrt();
        for (int k = 0; k < c.dim(); ++k) pm.degenerate.push_back(c.is_null_mode(k));
    } else {
        const auto& b = std::get<BesovMeasure>(mu);
        pm.laplace = true;
        pm.loc = Vector::Zero(b.dim());
        pm.scale = b.gamma;
        pm.degenerate.assign(b.dim(), false);
    }
    return pm;
}

double lp_sum(double x, double p) { return std::pow(std::abs(x), p); }

/// log of the volume of the unit l^p ball in R^d.
double log_unit_ball_volume(int d, double p) {
    if (p == kInf) return d * std::log(2.0);
    return d * std::log(2.0 * std::tgamma(1.0 + 1.0 / p)) - std::lgamma(1.0 + d / p);
}

/// Uniform draw from the unit l^p ball (Barthe, Guedon, Mendelson, Naor).
void uniform_ball_draw(Rng& rng, double p, Eigen::Ref<Vector> z) {
    const int d = static_cast<int>(z.size());
    if (p == kInf) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < d; ++i) z[i] = u(rng);
        return;
    }
    std::exponential_distribution<double> expo;
    double acc = 0.0;
    if (p == 2.0) {
        std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
        for (int i = 0; i < d; ++i) {
            z[i] = normal(rng);
            acc += z[i] * z[i];
        }
    } else {
        std::gamma_distribution<double> gam(1.0 / p, 1.0);
        std::bernoulli_distribution coin;
        for (int i = 0; i < d; ++i) {
            const double g = gam(rng);
            z[i] = (coin(rng) ? 1.0 : -1.0) * std::pow(g, 1.0 / p);
            acc += g;
        }
    }
    acc += expo(rng);
    z /= std::pow(acc, 1.0 / p);
}

bool inside(double dist, double r, bool closed) { return closed ? dist <= r : dist < r; }

MassCurves product_curves(const Measure& mu, const std::vector<Vector>& centers, const Vector& radii,
                          const WeightedSeqSpace& norm, const BallOptions& opts) {
    const ProductModel pm = product_model(mu, norm);
    const int nc = static_cast<int>(centers.size());
    const int nr = static_cast<int>(radii.size());
    const double p = pm.p;

    std::vector<int> active;
    for (int k = 0; k < pm.dim(); ++k)
        if (!pm.degenerate[k]) active.push_back(k);
    const int d = static_cast<int>(active.size());

    std::vector<Vector> model_centers;
    Vector degenerate_dist(nc);
    for (const Vector& c : centers) {
        Vector mc = pm.to_model(c);
        double acc = 0.0;
        for (int k = 0; k < pm.dim(); ++k) {
            if (!pm.degenerate[k]) continue;
            const double z = std::abs(mc[k] - pm.loc[k]) / pm.weights[k];
            acc = (p == kInf) ? std::max(acc, z) : acc + lp_sum(z, p);
        }
        degenerate_dist[static_cast<int>(model_centers.size())] = (p == kInf) ? acc : std::pow(acc, 1.0 / p);
        model_centers.push_back(std::move(mc));
    }

    // Radius left for the active coordinates once the degenerate ones are fixed.
    Matrix eff_radius(nc, nr);
    for (int i = 0; i < nc; ++i) {
        for (int j = 0; j < nr; ++j) {
            const double r = radii[j];
            const double dd = degenerate_dist[i];
            if (!inside(dd, r, opts.closed)) eff_radius(i, j) = 0.0;
            else if (p == kInf || dd == 0.0) eff_radius(i, j) = r;
            else eff_radius(i, j) = std::pow(std::pow(r, p) - std::pow(dd, p), 1.0 / p);
        }
    }

    MassCurves out;
    out.radii = radii;
    out.log_mass = Matrix::Constant(nc, nr, -kInf);
    out.rel_stderr = Matrix::Zero(nc, nr);

    if (d == 0) {
        out.method = MassMethod::exact_product;
        for (int i = 0; i < nc; ++i)
            for (int j = 0; j < nr; ++j)
                if (eff_radius(i, j) > 0.0 || inside(degenerate_dist[i], radii[j], opts.closed)) out.log_mass(i, j) = 0.0;
        return out;
    }

    if (p == kInf || d == 1) {
        out.method = MassMethod::exact_product;
        for (int i = 0; i < nc; ++i) {
            for (int j = 0; j < nr; ++j) {
                const double re = eff_radius(i, j);
                if (!(re > 0.0)) continue;
                double lm = 0.0;
                for (int k : active) lm += pm.log_interval_mass(k, model_centers[i][k], re * pm.weights[k]);
                out.log_mass(i, j) = lm;
            }
        }
        return out;
    }

    out.method = MassMethod::monte_carlo;
    const int batches = std::max(2, opts.batches);
    const std::size_t per_batch = std::max<std::size_t>(2, opts.samples / static_cast<std::size_t>(batches));

    Vector log_center_density(nc);
    for (int i = 0; i < nc; ++i) {
        double acc = 0.0;
        for (int k : active) acc += pm.log_density(k, model_centers[i][k]);
        log_center_density[i] = acc;
    }
    double log_weight_volume = log_unit_ball_volume(d, p);
    for (int k : active) log_weight_volume += std::log(pm.weights[k]);

    std::vector<Matrix> batch_means(batches, Matrix::Zero(nc, nr));
    parallel_for(
        static_cast<std::size_t>(batches),
        [&](std::size_t b) {
            Rng rng = make_rng(opts.seed, 0xba11, b);
            Vector z(d);
            Matrix& acc = batch_means[b];
            std::size_t drawn = 0;
            auto accumulate = [&](const Vector& zz) {
                for (int i = 0; i < nc; ++i) {
                    for (int j = 0; j < nr; ++j) {
                        const double re = eff_radius(i, j);
                        if (!(re > 0.0)) continue;
                        double lw = -log_center_density[i];
                        for (int a = 0; a < d; ++a) {
                            const int k = active[a];
                            lw += pm.log_density(k, model_centers[i][k] + re * pm.weights[k] * zz[a]);
                        }
                        acc(i, j) += std::exp(lw);
                    }
                }
            };
            while (drawn < per_batch) {
                uniform_ball_draw(rng, p, z);
                accumulate(z);
                ++drawn;
                if (opts.antithetic && drawn < per_batch) {
                    accumulate(-z);
                    ++drawn;
                }
            }
            acc /= static_cast<double>(drawn);
        },
        opts.threads);

    out.batch_log_mass.assign(batches, Matrix::Constant(nc, nr, -kInf));
    for (int i = 0; i < nc; ++i) {
        for (int j = 0; j < nr; ++j) {
            const double re = eff_radius(i, j);
            if (!(re > 0.0)) continue;
            const double base = log_weight_volume + d * std::log(re) + log_center_density[i];
            double mean = 0.0;
            for (int b = 0; b < batches; ++b) mean += batch_means[b](i, j);
            mean /= batches;
            double var = 0.0;
            for (int b = 0; b < batches; ++b) var += std::pow(batch_means[b](i, j) - mean, 2);
            var /= (batches - 1);
            out.log_mass(i, j) = base + std::log(mean);
            out.rel_stderr(i, j) = mean > 0.0 ? std::sqrt(var / batches) / mean : kInf;
            for (int b = 0; b < batches; ++b) out.batch_log_mass[b](i, j) = base + std::log(batch_means[b](i, j));
        }
    }
    return out;
}

// ---------------------------------------------------------------- arc length

double segment_arc_inside(const Segment2D& seg, const Vector& c, double r, const WeightedSeqSpace& norm, bool closed) {
    const Vector dir = seg.b - seg.a;
    const double len = dir.norm();
    if (len == 0.0) return 0.0;
    const Vector u = dir / len;
    auto f = [&](double s) { return weighted_norm(seg.a + s * u - c, norm); };

    double lo = 0.0, hi = len;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 300 && hi - lo > 1e-17 * len; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    double smin = 0.5 * (lo + hi);
    for (double cand : {0.0, len})
        if (f(cand) < f(smin)) smin = cand;
    if (!inside(f(smin), r, closed)) return 0.0;

    auto crossing = [&](double in, double out) {
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (in + out);
            if (mid == in || mid == out) break;
            if (inside(f(mid), r, closed)) in = mid;
            else out = mid;
        }
        return 0.5 * (in + out);
    };
    const double left = inside(f(0.0), r, closed) ? 0.0 : crossing(smin, 0.0);
    const double right = inside(f(len), r, closed) ? len : crossing(smin, len);
    return std::max(0.0, right - left);
}

void check_center(const Vector& c, int dim, const char* what) {
    if (c.size() != dim) throw InputError(std::string(what) + ": centre dimension mismatch");
}

}  // namespace

MassCurves ball_mass_curves(const Measure& mu, const std::vector<Vector>& centers, const Vector& radii,
                            const WeightedSeqSpace& norm, const BallOptions& opts) {
    if (centers.empty()) throw InputError("ball_mass: no centres");
    for (Eigen::Index j = 0; j < radii.size(); ++j)
        if (!(radii[j] > 0.0)) throw InputError("ball_mass: radius must be positive");
    const int dim = measure_dim(mu);
    if (norm.dim() != dim) throw InputError("ball_mass: norm dimension differs from measure dimension");
    for (const auto& c : centers) check_center(c, dim, "ball_mass");

    if (std::holds_alternative<GaussianMeasure>(mu) || std::holds_alternative<BesovMeasure>(mu))
        return product_curves(mu, centers, radii, norm, opts);

    const int nc = static_cast<int>(centers.size());
    const int nr = static_cast<int>(radii.size());
    MassCurves out;
    out.radii = radii;
    out.log_mass = Matrix::Constant(nc, nr, -kInf);
    out.rel_stderr = Matrix::Zero(nc, nr);

    if (const auto* rho = std::get_if<Density1D>(&mu)) {
        out.method = rho->has_closed_form() ? MassMethod::closed_form : MassMethod::quadrature;
        for (int i = 0; i < nc; ++i) {
            for (int j = 0; j < nr; ++j) {
                const double c = centers[i][0];
                const double h = radii[j] * norm.weights()[0];
                const double m = rho->has_closed_form() ? rho->closed_form_mass(c, h, opts.closed)
                                                        : rho->integrate(c - h, c + h, opts.quad_tol);
                out.log_mass(i, j) = std::log(std::max(0.0, m));
            }
        }
        return out;
    }

    const auto& len = std::get<LengthMeasure2D>(mu);
    out.method = MassMethod::closed_form;
    for (int i = 0; i < nc; ++i) {
        for (int j = 0; j < nr; ++j) {
            double m = 0.0;
            for (const auto& seg : len.segments) m += segment_arc_inside(seg, centers[i], radii[j], norm, opts.closed);
            out.log_mass(i, j) = std::log(m);
        }
    }
    return out;
}

BallMass ball_mass(const Measure& mu, const Vector& center, double radius, const WeightedSeqSpace& norm,
                   const BallOptions& opts) {
    if (!(radius > 0.0)) throw InputError("ball_mass: radius must be positive");
    Vector radii(1);
    radii[0] = radius;
    const MassCurves mc = ball_mass_curves(mu, {center}, radii, norm, opts);
    const double est = std::exp(mc.log_mass(0, 0));
    const double rel = mc.rel_stderr(0, 0);
    return {est, est * rel, mc.method, rel > opts.max_rel_err};
}

// ---------------------------------------------------------------- extrapolation

namespace {

/// Intercept of the least-squares polynomial of the given degree in x.
double poly_intercept(const Vector& x, const Vector& y, int degree) {
    Matrix a(x.size(), degree + 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = 1.0;
        for (int k = 0; k <= degree; ++k) {
            a(i, k) = v;
            v *= x[i];
        }
    }
    // Column scaling keeps the tiny-radius fits well conditioned.
    Vector scale = a.colwise().norm().transpose();
    for (int k = 0; k <= degree; ++k)
        if (scale[k] > 0.0) a.col(k) /= scale[k];
    const Vector coef = a.colPivHouseholderQr().solve(y);
    return coef[0] / scale[0];
}

}  // namespace

Extrapolation extrapolate_limit(const Vector& radii, const Vector& values, const std::vector<Vector>& batch_values,
                                const BallOptions& opts) {
    const int n = static_cast<int>(radii.size());
    const int m = std::clamp(opts.fit_points, 1, n);
    Vector x(m), y(m);
    for (int i = 0; i < m; ++i) {
        x[i] = std::pow(radii[n - m + i], opts.fit_exponent);
        y[i] = values[n - m + i];
    }
    Extrapolation e{};
    if (!y.allFinite()) {
        e.limit = y[m - 1];
        e.ci_lo = e.ci_hi = e.limit;
        e.stderr = kInf;
        e.model_error = kInf;
        return e;
    }
    const double lin = m >= 2 ? poly_intercept(x, y, 1) : y[0];
    const double quad = m >= 3 ? poly_intercept(x, y, 2) : lin;
    e.model_error = std::abs(lin - quad);
    e.limit = std::max(0.0, lin);

    double boot_sd = 0.0;
    double lo = lin, hi = lin;
    if (!batch_values.empty() && opts.bootstrap > 1) {
        const int nb = static_cast<int>(batch_values.size());
        std::vector<double> est;
        est.reserve(opts.bootstrap);
        Rng rng = make_rng(opts.seed, 0xb007);
        std::uniform_int_distribution<int> pick(0, nb - 1);
        for (int t = 0; t < opts.bootstrap; ++t) {
            Vector yb = Vector::Zero(m);
            for (int s = 0; s < nb; ++s) {
                const Vector& bv = batch_values[pick(rng)];
                for (int i = 0; i < m; ++i) yb[i] += bv[n - m + i];
            }
            yb /= nb;
            if (yb.allFinite()) est.push_back(m >= 2 ? poly_intercept(x, yb, 1) : yb[0]);
        }
        if (est.size() >= 2) {
            double mean = 0.0;
            for (double v : est) mean += v;
            mean /= static_cast<double>(est.size());
            for (double v : est) boot_sd += (v - mean) * (v - mean);
            boot_sd = std::sqrt(boot_sd / static_cast<double>(est.size() - 1));
            std::sort(est.begin(), est.end());
            lo = est[static_cast<std::size_t>(0.025 * (est.size() - 1))];
            hi = est[static_cast<std::size_t>(0.975 * (est.size() - 1))];
        }
    }
    e.stderr = std::sqrt(boot_sd * boot_sd + e.model_error * e.model_error);
    e.ci_lo = std::max(0.0, std::min(lo, lin) - e.model_error);
    e.ci_hi = std::max(lo, std::max(hi, lin)) + e.model_error;
    return e;
}

BallRatioEstimate ratio_from_curves(const MassCurves& curves, int i, int j, const BallOptions& opts) {
    const int nr = static_cast<int>(curves.radii.size());
    BallRatioEstimate est;
    est.radii = curves.radii;
    est.ratios = Vector(nr);
    est.stderr = Vector::Zero(nr);
    est.method = curves.method;
    for (int k = 1; k < nr; ++k)
        if (!(curves.radii[k] < curves.radii[k - 1])) throw InputError("ball_ratio_curve: radii must be strictly decreasing");

    bool outside = false;
    for (int k = 0; k < nr; ++k) {
        const double num = curves.log_mass(i, k);
        const double den = curves.log_mass(j, k);
        if (den == -kInf) {
            outside = true;
            est.ratios[k] = num == -kInf ? 0.0 : kInf;
        } else {
            est.ratios[k] = i == j ? 1.0 : std::exp(num - den);
        }
    }
    if (outside) est.diagnostic = "x2 outside support: denominator ball mass is zero";

    std::vector<Vector> batch;
    const int nb = static_cast<int>(curves.batch_log_mass.size());
    if (nb > 0) {
        for (int b = 0; b < nb; ++b) {
            Vector v(nr);
            for (int k = 0; k < nr; ++k) {
                const double den = curves.batch_log_mass[b](j, k);
                const double num = curves.batch_log_mass[b](i, k);
                v[k] = i == j ? 1.0 : (den == -kInf ? (num == -kInf ? 0.0 : kInf) : std::exp(num - den));
            }
            batch.push_back(std::move(v));
        }
        for (int k = 0; k < nr; ++k) {
            double mean = 0.0;
            for (const auto& v : batch) mean += v[k];
            mean /= nb;
            double var = 0.0;
            for (const auto& v : batch) var += (v[k] - mean) * (v[k] - mean);
            est.stderr[k] = std::sqrt(var / (nb - 1) / nb);
            if (est.ratios[k] > 0.0 && est.stderr[k] / est.ratios[k] > opts.max_rel_err) est.low_confidence = true;
        }
    }
    est.limit = extrapolate_limit(est.radii, est.ratios, batch, opts);
    if (i == j) est.limit = Extrapolation{1.0, 0.0, 1.0, 1.0, 0.0};
    return est;
}

BallRatioEstimate ball_ratio_curve(const Measure& mu, const Vector& x1, const Vector& x2, const Vector& radii,
                                   const WeightedSeqSpace& norm, const BallOptions& opts) {
    const MassCurves curves = ball_mass_curves(mu, {x1, x2}, radii, norm, opts);
    BallRatioEstimate est = ratio_from_curves(curves, 0, 1, opts);
    if ((x1 - x2).norm() == 0.0) {
        est.ratios.setOnes();
        est.stderr.setZero();
        est.limit = Extrapolation{1.0, 0.0, 1.0, 1.0, 0.0};
    }
    est.norm = describe_norm(norm);
    return est;
}

OpenClosedReport open_vs_closed_check(const Density1D& mu, double x1, double x2, const Vector& radii,
                                      const BallOptions& opts) {
    const Measure m = mu;
    const auto norm = WeightedSeqSpace::uniform(1, 2.0);
    Vector c1(1), c2(1);
    c1[0] = x1;
    c2[0] = x2;
    BallOptions open_opts = opts;
    open_opts.closed = false;
    BallOptions closed_opts = opts;
    closed_opts.closed = true;
    OpenClosedReport rep{ball_ratio_curve(m, c1, c2, radii, norm, open_opts),
                         ball_ratio_curve(m, c1, c2, radii, norm, closed_opts), 0.0, 0.0, false};
    rep.max_ratio_discrepancy = (rep.open.ratios - rep.closed.ratios).cwiseAbs().maxCoeff();
    rep.limit_discrepancy = std::abs(rep.open.limit.limit - rep.closed.limit.limit);
    const double width = std::max(rep.open.limit.ci_hi - rep.open.limit.ci_lo, rep.closed.limit.ci_hi - rep.closed.limit.ci_lo);
    rep.agree = rep.limit_discrepancy <= width + 1e-12;
    return rep;
}

}  // namespace ommap
