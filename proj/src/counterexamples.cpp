#include "ommap/counterexamples.hpp"

#include "ommap/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ommap {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double quad(const std::function<double(double)>& f, std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-12);
    }
    return total;
}

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace

std::vector<double> local_maximisers(const std::function<double(double)>& f, double lo, double hi, int grid) {
    if (!(hi > lo) || grid < 3) throw InputError("local_maximisers: need hi > lo and grid >= 3");
    const double step = (hi - lo) / (grid - 1);
    std::vector<double> x(grid), y(grid);
    for (int i = 0; i < grid; ++i) {
        x[i] = lo + i * step;
        y[i] = f(x[i]);
    }
    auto logf = [&](double z) { return std::log(f(z)); };
    std::vector<double> found;
    for (int i = 1; i + 1 < grid; ++i) {
        if (!(y[i] > 0.0) || !(y[i] >= y[i - 1] && y[i] > y[i + 1])) continue;
        double a = x[i - 1], b = x[i + 1];
        const double h = std::min(1e-6, step / 50.0);
        auto slope = [&](double z) { return logf(z + h) - logf(z - h); };
        if (slope(a) > 0.0 && slope(b) < 0.0) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                if (mid == a || mid == b) break;
                if (slope(mid) > 0.0) a = mid;
                else b = mid;
            }
            found.push_back(0.5 * (a + b));
        } else {
            found.push_back(x[i]);
        }
    }
    std::sort(found.begin(), found.end(), [&](double u, double v) { return f(u) > f(v); });
    return found;
}

// ---------------------------------------------------------------- Gaussian pair

double kl_gaussians(double sigma) {
    if (!(sigma > 0.0)) throw InputError("kl_gaussians: sigma must be positive");
    return (1.0 / sigma - 1.0 + std::log(sigma)) / 2.0;
}

double kl_gaussians_quadrature(double sigma) {
    if (!(sigma > 0.0)) throw InputError("kl_gaussians: sigma must be positive");
    auto integrand = [sigma](double x) {
        const double log_p = -0.5 * x * x - kLogSqrt2Pi;
        const double log_q = -0.5 * x * x / sigma - 0.5 * std::log(sigma) - kLogSqrt2Pi;
        return std::exp(log_p) * (log_p - log_q);
    };
    return quad(integrand, {-40.0, -10.0, -3.0, 0.0, 3.0, 10.0, 40.0});
}

// ---------------------------------------------------------------- mixture

MixtureFamily::MixtureFamily(double t_, double r_) : t(t_), r(r_) {
    if (!(std::abs(t) < 1.0)) throw InputError("MixtureFamily: |t| must be < 1");
    if (!(r > 0.0)) throw InputError("MixtureFamily: r must be positive");
}

double MixtureFamily::log_density(double x) const {
    const double a = std::log1p(t) - 0.5 * (x - r) * (x - r);
    const double b = std::log1p(-t) - 0.5 * (x + r) * (x + r);
    return log_add(a, b) - std::log(2.0) - kLogSqrt2Pi;
}

double MixtureFamily::density(double x) const { return std::exp(log_density(x)); }

MixtureModes mixture_modes(double t, double r) {
    const MixtureFamily fam(t, r);
    auto f = [&](double x) { return fam.density(x); };
    MixtureModes out;
    out.maximisers = local_maximisers(f, -r - 6.0, r + 6.0, 40001);
    if (out.maximisers.empty()) throw NumericalError("mixture_modes: no maximiser found");
    out.mode = out.maximisers.front();
    out.warning_small_r = r < 3.0;
    return out;
}

double kl_mixture(double t, double r) {
    const MixtureFamily p(t, r), q(-t, r);
    auto integrand = [&](double x) {
        const double lp = p.log_density(x);
        return std::exp(lp) * (lp - q.log_density(x));
    };
    return quad(integrand, {-r - 14.0, -r - 4.0, -r, -r + 4.0, 0.0, r - 4.0, r, r + 4.0, r + 14.0});
}

Density1D mixture_density1d(double t, double r) {
    const MixtureFamily fam(t, r);
    return Density1D("mixture", [fam](double x) { return fam.density(x); }, {{-r - 15.0, r + 15.0}}, std::nullopt,
                     {-r, 0.0, r});
}

// ---------------------------------------------------------------- spike

SpikeFamily::SpikeFamily(double n_) : n(n_) {
    if (!(n >= 1.0)) throw InputError("SpikeFamily: n must be >= 1");
}

double SpikeFamily::log_density(double x) const {
    const double gauss = -0.5 * (x - 1.0) * (x - 1.0);
    if (n == kInf) return gauss - kLogSqrt2Pi;
    const double norm = std::log(std::sqrt(2.0 * std::numbers::pi) + std::sqrt(std::numbers::pi) / n);
    if (x <= 0.0) return gauss - norm;
    const double nx = n * x;
    const double spike = std::log(4.0) + 2.0 * std::log(nx) - nx * nx;
    return log_add(gauss, spike) - norm;
}

double SpikeFamily::density(double x) const { return std::exp(log_density(x)); }

double spike_mode(double n) {
    const SpikeFamily fam(n);
    auto f = [&](double x) { return fam.density(x); };
    const auto maxima = local_maximisers(f, -1.0, 4.0, 200001);
    if (maxima.empty()) throw NumericalError("spike_mode: no maximiser found");
    return maxima.front();
}

namespace {

std::vector<double> spike_cuts(double n) {
    std::vector<double> cuts{-14.0, -4.0, 0.0, 1.0, 4.0, 16.0};
    if (n != kInf)
        for (double c : {0.5, 1.0, 2.0, 4.0, 8.0}) cuts.push_back(std::min(c / n, 0.99));
    return cuts;
}

}  // namespace

double kl_spike(double n) {
    const SpikeFamily lim(kInf), fam(n);
    auto integrand = [&](double x) {
        const double lp = lim.log_density(x);
        return std::exp(lp) * (lp - fam.log_density(x));
    };
    return quad(integrand, spike_cuts(n));
}

double kl_spike_reverse(double n) {
    const SpikeFamily lim(kInf), fam(n);
    auto integrand = [&](double x) {
        const double lp = fam.log_density(x);
        return std::exp(lp) * (lp - lim.log_density(x));
    };
    return quad(integrand, spike_cuts(n));
}

Density1D spike_density1d(double n) {
    const SpikeFamily fam(n);
    std::vector<double> cuts{0.0, 1.0};
    if (n != kInf) cuts.push_back(1.0 / n);
    return Density1D("spike", [fam](double x) { return fam.density(x); }, {{-16.0, 18.0}}, std::nullopt, cuts);
}

// ---------------------------------------------------------------- liminf-only

namespace {

Rational pow2_neg(long e) {
    using boost::multiprecision::cpp_int;
    if (e >= 0) return Rational(cpp_int(1), cpp_int(1) << e);
    return Rational(cpp_int(1) << (-e));
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace

double log2_rational(const Rational& q) {
    using boost::multiprecision::cpp_int;
    if (q <= 0) throw InputError("log2_rational: argument must be positive");
    auto log2_int = [](const cpp_int& x) {
        const long e = static_cast<long>(boost::multiprecision::msb(x));
        const long shift = std::max(0L, e - 60);
        const cpp_int top = x >> shift;
        return static_cast<double>(shift) + std::log2(top.convert_to<double>());
    };
    return log2_int(boost::multiprecision::numerator(q)) - log2_int(boost::multiprecision::denominator(q));
}

LiminfOnlyMeasure::LiminfOnlyMeasure(int depth) : depth_(depth) {
    if (depth < 3) throw InputError("LiminfOnlyMeasure: depth must be >= 3");
    const long deepest = static_cast<long>(depth + 3) * (depth + 6) / 2 + depth + 3;
    scale_ = std::max(deepest, 1100L) + 8;
    alpha_.resize(depth + 3);
    for (int n = 1; n <= depth + 2; ++n) {
        const long en = static_cast<long>(n - 1) * (n + 2) / 2;
        const long en1 = static_cast<long>(n) * (n + 3) / 2;
        alpha_[n] = pow2_scaled(n + en) - pow2_scaled(n + en1);
    }
    if (!intervals_disjoint()) throw NumericalError("LiminfOnlyMeasure: intervals overlap");
}

LiminfOnlyMeasure::Int LiminfOnlyMeasure::pow2_scaled(long e) const { return Int(1) << (scale_ - e); }

LiminfOnlyMeasure::Int LiminfOnlyMeasure::scaled(const Rational& q) const {
    const Int num = boost::multiprecision::numerator(q) << scale_;
    const Int& den = boost::multiprecision::denominator(q);
    if (num % den != 0) throw InputError("LiminfOnlyMeasure: centre and radius must be dyadic rationals");
    return num / den;
}

Rational LiminfOnlyMeasure::a(int n) const { return pow2_neg(static_cast<long>(n - 1) * (n + 2) / 2); }
Rational LiminfOnlyMeasure::b(int n) const { return a(n) / 2; }

Rational LiminfOnlyMeasure::alpha(int n) const {
    if (n < 1 || n > depth_ + 2) throw InputError("LiminfOnlyMeasure: level out of range");
    return Rational(alpha_[n], Int(1) << scale_);
}

Rational LiminfOnlyMeasure::beta(int n) const { return alpha(n) / 2; }
Rational LiminfOnlyMeasure::epsilon(int n) const { return alpha(n) * 2; }
Rational LiminfOnlyMeasure::delta(int n) const { return alpha(n); }

bool LiminfOnlyMeasure::intervals_disjoint() const {
    for (int n = 1; n < depth_ + 2; ++n)
        if (!(2 * alpha_[n + 1] < alpha_[n])) return false;
    return true;
}

Rational LiminfOnlyMeasure::ball_mass(const Rational& center, const Rational& radius, bool closed) const {
    // Interval masses are overlap lengths, so open and closed balls agree.
    (void)closed;
    const Int c = scaled(center);
    const Int r = scaled(radius);
    const Int lo = c - r, hi = c + r;
    const Int one = Int(1) << scale_;
    auto overlap = [&](const Int& a, const Int& b) {
        const Int& l = lo > a ? lo : a;
        const Int& h = hi < b ? hi : b;
        return h > l ? Int(h - l) : Int(0);
    };
    Int total = 0;
    for (int n = 1; n <= depth_; ++n) {
        total += overlap(-one + alpha_[n], -one + 2 * alpha_[n]) << n;
        total += overlap(one - alpha_[n], one - alpha_[n] / 2) << n;
    }
    Rational mass(total, one);
    // Levels beyond the depth, spread over (-1, -1 + 2 alpha_{D+1}] and [1 - alpha_{D+1}, 1).
    const Int left_width = 2 * alpha_[depth_ + 1];
    const Int right_width = alpha_[depth_ + 1];
    mass += a(depth_ + 1) * Rational(overlap(-one, -one + left_width), left_width);
    mass += b(depth_ + 1) * Rational(overlap(one - right_width, one), right_width);
    return mass;
}

Rational LiminfOnlyMeasure::total_mass() const {
    Int total = 0;
    for (int n = 1; n <= depth_; ++n) total += (alpha_[n] + alpha_[n] / 2) << n;
    return Rational(total, Int(1) << scale_) + a(depth_ + 1) + b(depth_ + 1);
}

Rational LiminfOnlyMeasure::left_telescoped() const {
    Int total = 0;
    for (int n = 1; n <= depth_; ++n) total += alpha_[n] << n;
    return Rational(total, Int(1) << scale_) + a(depth_ + 1);
}

Density1D LiminfOnlyMeasure::density1d() const {
    const double norm = to_double(total_mass());
    std::vector<Interval> support;
    std::vector<double> height;
    for (int n = 1; n <= depth_; ++n) {
        const double al = to_double(alpha(n));
        const Interval left{-1.0 + al, -1.0 + 2.0 * al};
        const Interval right{1.0 - al, 1.0 - 0.5 * al};
        for (const Interval& iv : {left, right}) {
            if (!(iv.hi > iv.lo)) continue;
            support.push_back(iv);
            height.push_back(std::ldexp(1.0, n) / norm);
        }
    }
    auto density = [support, height](double x) {
        for (std::size_t i = 0; i < support.size(); ++i)
            if (x >= support[i].lo && x <= support[i].hi) return height[i];
        return 0.0;
    };
    std::vector<double> cuts;
    const Rational total = total_mass();
    auto self = *this;
    auto mass = [self, total](double c, double r, bool closed) {
        return to_double(self.ball_mass(Rational(c), Rational(r), closed) / total);
    };
    return Density1D("liminf_only", density, support, mass, cuts, 1.0);
}

LiminfOnlyRatios liminf_only_ratios(const LiminfOnlyMeasure& mu, int n_max) {
    if (n_max < 1 || n_max > mu.depth() - 2) throw InputError("liminf_only_ratios: need 1 <= n_max <= depth - 2");
    LiminfOnlyRatios out;
    out.epsilon_all_two = true;
    out.delta_all_match = true;
    for (int n = 1; n <= n_max; ++n) {
        const Rational eps = mu.epsilon(n), del = mu.delta(n);
        const Rational re = mu.ball_mass(Rational(-1), eps) / mu.ball_mass(Rational(1), eps);
        const Rational rd = mu.ball_mass(Rational(-1), del) / mu.ball_mass(Rational(1), del);
        out.n.push_back(n);
        out.epsilon_ratios.push_back(re);
        out.delta_ratios.push_back(rd);
        out.log2_delta_ratios.push_back(log2_rational(rd));
        out.epsilon_all_two = out.epsilon_all_two && re == 2;
        out.delta_all_match = out.delta_all_match && rd == mu.a(n + 1) / mu.b(n);
    }
    return out;
}

// ---------------------------------------------------------------- OM minimiser not strong

OmNotStrongMeasure::OmNotStrongMeasure(int levels) : levels_(levels) {
    if (levels < 1) throw InputError("OmNotStrongMeasure: levels must be >= 1");
}

double OmNotStrongMeasure::normalisation() { return 24.0 / (5.0 * std::numbers::pi * std::numbers::pi); }

double OmNotStrongMeasure::spike_primitive(double y) {
    const double a = std::min(std::abs(y), 0.25);
    return std::copysign(0.5 * std::sqrt(a) - 0.5 * a, y);
}

double OmNotStrongMeasure::component_density(int k, double x) {
    const double ay = std::abs(x - k);
    const double kk = static_cast<double>(k) * k;
    double v = 0.0;
    if (ay <= 0.25) v = ay == 0.0 ? kInf : 0.25 * (1.0 / std::sqrt(ay) - 2.0) / kk;
    if (ay <= 0.5 / (kk * kk)) v += kk;
    return v;
}

double OmNotStrongMeasure::component_mass(int k, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double kk = static_cast<double>(k) * k;
    const double w = 0.5 / (kk * kk);
    const double plateau = std::max(0.0, std::min(hi, w) - std::max(lo, -w));
    return (spike_primitive(hi) - spike_primitive(lo)) / kk + kk * plateau;
}

double OmNotStrongMeasure::density(double x) const {
    const int k = static_cast<int>(std::lround(x));
    if (k < 1 || k > levels_) return 0.0;
    return normalisation() * component_density(k, x);
}

double OmNotStrongMeasure::ball_mass(double center, double radius) const {
    const int k_lo = std::max(1, static_cast<int>(std::floor(center - radius - 0.5)));
    const int k_hi = std::min(levels_, static_cast<int>(std::ceil(center + radius + 0.5)));
    double total = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double offset = center - k;
        total += component_mass(k, offset - radius, offset + radius);
    }
    return normalisation() * total;
}

double OmNotStrongMeasure::retained_mass() const {
    double total = 0.0;
    for (int k = 1; k <= levels_; ++k) total += component_total(k);
    return normalisation() * total;
}

Density1D OmNotStrongMeasure::density1d() const {
    std::vector<Interval> support;
    std::vector<double> cuts;
    for (int k = 1; k <= levels_; ++k) {
        // The k = 1 plateau [1/2, 3/2] is wider than the spike support.
        const double w = 0.5 / std::pow(static_cast<double>(k), 4);
        const double half = std::max(0.25, w);
        support.push_back({k - half, k + half});
        cuts.insert(cuts.end(), {k - w, static_cast<double>(k), k + w});
        if (w < 0.25) continue;
        cuts.insert(cuts.end(), {k - 0.25, k + 0.25});
    }
    auto self = *this;
    return Density1D("om_not_strong", [self](double x) { return self.density(x); }, support,
                     [self](double c, double r, bool) { return self.ball_mass(c, r); }, cuts, retained_mass());
}

namespace {

double loglog_slope(const Vector& r, const Vector& v) {
    const Eigen::Index n = r.size();
    Matrix a(n, 2);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = std::log(r[i]);
        y[i] = std::log(v[i]);
    }
    return a.colPivHouseholderQr().solve(y)[1];
}

}  // namespace

OmNotStrongSuite om_not_strong_suite(const OmNotStrongMeasure& mu, const std::vector<int>& ks,
                                     const std::vector<int>& ns) {
    OmNotStrongSuite out;
    const Measure m = mu.density1d();
    const auto norm = WeightedSeqSpace::uniform(1, 2.0);
    BallOptions opts;
    opts.fit_exponent = 0.5;
    const Vector radii = geometric_radii(1e-10, 10);
    Vector one(1);
    one[0] = 1.0;
    for (int k : ks) {
        if (k < 1 || k > mu.levels()) throw InputError("om_not_strong_suite: k outside the retained levels");
        Vector ck(1);
        ck[0] = k;
        out.k.push_back(k);
        out.ratio_to_k.push_back(ball_ratio_curve(m, one, ck, radii, norm, opts));
        out.om_values.push_back(2.0 * std::log(static_cast<double>(k)));
    }

    const std::vector<std::pair<int, double>> off = {{1, 0.1}, {2, 0.05}, {3, -0.2}};
    const Vector small = geometric_radii(1e-4, 10);
    for (const auto& [mm, d] : off) {
        if (mm > mu.levels()) continue;
        Vector ratio(small.size());
        for (Eigen::Index j = 0; j < small.size(); ++j)
            ratio[j] = mu.ball_mass(mm + d, small[j]) / mu.ball_mass(mm, small[j]);
        out.off_integer_points.push_back(mm + d);
        out.off_integer_decay_slopes.push_back(loglog_slope(small, ratio));
    }

    for (int n : ns) {
        if (n > mu.levels()) throw InputError("om_not_strong_suite: n outside the retained levels");
        const double nn = static_cast<double>(n) * n;
        const double rn = 0.5 / (nn * nn);
        out.n.push_back(n);
        out.strong_ratio_at_rn.push_back(mu.ball_mass(1.0, rn) / mu.ball_mass(n, rn));
        out.bound_at_rn.push_back((1.0 / (std::numbers::sqrt2 * nn) + 1.0 / (nn * nn)) * nn);
    }
    return out;
}

// ---------------------------------------------------------------- crosses

LengthMeasure2D crosses_measure() {
    const double s = std::numbers::sqrt2 / 2.0;
    auto pt = [](double x, double y) {
        Vector v(2);
        v << x, y;
        return v;
    };
    LengthMeasure2D m;
    m.name = "crosses";
    m.segments = {{pt(0.0, 0.0), pt(2.0, 0.0)},
                  {pt(1.0, -1.0), pt(1.0, 1.0)},
                  {pt(-1.0 - s, -s), pt(-1.0 + s, s)},
                  {pt(-1.0 - s, s), pt(-1.0 + s, -s)}};
    return m;
}

double crosses_ball_mass(CrossNorm norm, int center_sign, double r) {
    if (!(r > 0.0)) throw InputError("crosses_ball_mass: r must be positive");
    if (r > 0.5) throw RegimeError("crosses_ball_mass: r > 0.5 leaves the single-cross regime");
    if (center_sign != 1 && center_sign != -1) throw InputError("crosses_ball_mass: centre must be e1 or -e1");
    if (center_sign == 1) return 4.0 * r;
    return norm == CrossNorm::one ? 2.0 * std::numbers::sqrt2 * r : 4.0 * std::numbers::sqrt2 * r;
}

double crosses_om_difference(CrossNorm norm) {
    return std::log(crosses_ball_mass(norm, 1, 0.1) / crosses_ball_mass(norm, -1, 0.1));
}

int crosses_mode(CrossNorm norm) {
    return crosses_ball_mass(norm, 1, 0.1) > crosses_ball_mass(norm, -1, 0.1) ? 1 : -1;
}

}  // namespace ommap
