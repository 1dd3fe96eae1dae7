#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ommap/counterexamples.hpp"
#include "ommap/errors.hpp"
#include "ommap/om.hpp"

using namespace ommap;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

GaussianMeasure std_normal(int k) { return GaussianMeasure(Vector::Zero(k), SpectralOperator::identity(k)); }

/// I(k) = 2 log k on E = {1, ..., levels}, +inf elsewhere.
OmFunctional integer_om(int levels) {
    OmFunctional om;
    om.name = "2 log k";
    om.dim = 1;
    om.in_domain = [levels](const Vector& u) {
        const double k = std::round(u[0]);
        return u[0] == k && k >= 1 && k <= levels;
    };
    om.eval = [d = om.in_domain](const Vector& u) { return d(u) ? 2.0 * std::log(u[0]) : kInf; };
    om.anchor = vec({1.0});
    return om;
}

/// I = 0 at the single point `at`, +inf elsewhere.
OmFunctional point_om(double at) {
    OmFunctional om;
    om.name = "point";
    om.dim = 1;
    om.in_domain = [at](const Vector& u) { return u[0] == at; };
    om.eval = [at](const Vector& u) { return u[0] == at ? 0.0 : kInf; };
    om.anchor = vec({at});
    return om;
}

}  // namespace

TEST_CASE("gaussian_om") {
    const GaussianMeasure g(vec({0.0, 0.0}), SpectralOperator::diagonal(vec({4.0, 1.0})));
    const OmFunctional om = gaussian_om(g);
    CHECK(om(vec({0.0, 0.0})) == 0.0);
    CHECK(om(vec({2.0, 0.0})) == doctest::Approx(0.5));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 100; ++i) CHECK(om(vec({nd(rng), nd(rng)})) > 0.0);

    const OmFunctional deg = gaussian_om(GaussianMeasure(Vector::Zero(2), SpectralOperator::diagonal(vec({4.0, 0.0}))));
    CHECK(std::isinf(deg(vec({0.0, 1.0}))));
    CHECK_FALSE(deg.in_domain(vec({0.0, 1.0})));
    CHECK(deg(vec({2.0, 0.0})) == doctest::Approx(0.5));

    // gradient of the smooth part by finite differences
    const GaussianMeasure r(vec({0.5, -1.0}), SpectralOperator::from_matrix((Matrix(2, 2) << 2, 0.5, 0.5, 1).finished()));
    const OmFunctional ro = gaussian_om(r);
    const Vector u = vec({0.3, 0.9});
    const Vector grad = ro.smooth_gradient(u);
    for (int k = 0; k < 2; ++k) {
        Vector e = Vector::Zero(2);
        e[k] = 1e-6;
        CHECK(grad[k] == doctest::Approx((ro(u + e) - ro(u - e)) / 2e-6).epsilon(1e-6));
    }
}

TEST_CASE("gaussian_om against ball ratios") {
    const GaussianMeasure g(vec({0.0, 0.0}), SpectralOperator::diagonal(vec({4.0, 1.0})));
    BallOptions o;
    o.samples = 400000;
    o.seed = 3;
    const BallRatioEstimate r = ball_ratio_curve(g, vec({2.0, 0.0}), vec({0.0, 0.0}), geometric_radii(0.5, 10),
                                                 WeightedSeqSpace::uniform(2, kInf), o);
    CHECK(std::abs(r.limit.limit - std::exp(-0.5)) < 3.0 * r.limit.stderr + 1e-6);
}

TEST_CASE("besov_om") {
    const BesovMeasure b(1.0, 1, 1.0, 4);
    const OmFunctional om = besov_om(b);
    CHECK(om(Vector::Zero(4)) == 0.0);
    CHECK(om(vec({1, 0, 0, 0})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(om(vec({1, 1, 0, 0})) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
    CHECK(om.has_nonsmooth());
    // positive homogeneity of degree 1
    const Vector u = vec({0.3, -1.0, 2.0, 0.1});
    CHECK(om(2.5 * u) == doctest::Approx(2.5 * om(u)).epsilon(1e-14));

    // exp(I(0) - I(u)) from ball ratios; sup-norm balls of a product measure are exact products
    const BesovMeasure b2(1.0, 1, 1.0, 2);
    BallOptions eo;
    eo.fit_exponent = 1.0;
    const BallRatioEstimate r = ball_ratio_curve(b2, vec({1.0, 1.0}), vec({0.0, 0.0}), geometric_radii(0.01, 10),
                                                 WeightedSeqSpace::uniform(2, kInf), eo);
    CHECK(r.limit.limit == doctest::Approx(std::exp(-(1.0 + std::sqrt(2.0)))).epsilon(1e-6));
}

TEST_CASE("posterior_om") {
    const OmFunctional prior = gaussian_om(std_normal(1));
    const OmFunctional same = posterior_om(prior, zero_potential(1));
    for (double x : {-1.0, 0.0, 2.0}) CHECK(same(vec({x})) == prior(vec({x})));

    const Potential phi = make_potential("misfit", 1, [](const Vector& u) { return 0.5 * (2.0 - u[0]) * (2.0 - u[0]); },
                                         [](const Vector& u) { return Vector::Constant(1, u[0] - 2.0); });
    const OmFunctional post = posterior_om(prior, phi);
    const double argmin = oracle::argmax_1d([&](double x) { return -post(vec({x})); }, -3.0, 3.0);
    CHECK(argmin == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(post.smooth_gradient(vec({1.0}))[0] == doctest::Approx(0.0));

    const Potential c = make_potential("const", 1, [](const Vector&) { return 3.0; });
    const OmFunctional shifted = posterior_om(prior, c);
    for (double x : {-1.0, 0.5}) CHECK(shifted(vec({x})) == doctest::Approx(prior(vec({x})) + 3.0));

    // difference identity: I(u1) - I(u2) = phi(u1) - phi(u2) + I0(u1) - I0(u2)
    const Vector a = vec({0.4}), b = vec({-1.3});
    CHECK(post(a) - post(b) == doctest::Approx(phi(a) - phi(b) + prior(a) - prior(b)).epsilon(1e-14));

    CHECK_THROWS_AS(posterior_om(prior, zero_potential(2)), InputError);
}

TEST_CASE("om_difference_check") {
    const WeightedSeqSpace l2 = WeightedSeqSpace::uniform(1, 2.0);
    const Vector radii = geometric_radii(0.5, 10);
    const OmFunctional om = gaussian_om(std_normal(1));
    const OmDifferenceReport same = om_difference_check(std_normal(1), om, vec({0.7}), vec({0.7}), radii, l2);
    CHECK(same.ratio.limit.limit == doctest::Approx(1.0));
    CHECK(same.expected == 1.0);
    CHECK(same.verdict == Verdict::pass);

    OmCheckOptions o;
    o.ball.fit_exponent = 2.0;
    const OmDifferenceReport one = om_difference_check(std_normal(1), om, vec({1.0}), vec({0.0}), radii, l2, o);
    CHECK(one.expected == doctest::Approx(std::exp(-0.5)));
    CHECK(one.verdict == Verdict::pass);
    const double q = oracle::normal_ball(0.0, 1.0, 1.0, 1e-4) / oracle::normal_ball(0.0, 1.0, 0.0, 1e-4);
    CHECK(one.ratio.limit.limit == doctest::Approx(q).epsilon(1e-8));

    // a wrong functional is rejected
    OmFunctional wrong = om;
    wrong.eval = [](const Vector& u) { return u[0] * u[0]; };
    CHECK(om_difference_check(std_normal(1), wrong, vec({1.0}), vec({0.0}), radii, l2, o).verdict == Verdict::fail);

    const OmNotStrongMeasure b3(30);
    OmCheckOptions bo;
    bo.ball.fit_exponent = 0.5;
    bo.abs_tol = 0.01;
    const OmFunctional iom = integer_om(30);
    for (int k : {2, 3, 5}) {
        const OmDifferenceReport r =
            om_difference_check(b3.density1d(), iom, vec({1.0}), vec({double(k)}), geometric_radii(1e-10, 10), l2, bo);
        CHECK(r.expected == doctest::Approx(double(k) * k));
        CHECK(std::abs(r.ratio.limit.limit / r.expected - 1.0) < 0.01);
    }
}

TEST_CASE("decay_trend") {
    const Vector radii = geometric_radii(0.5, 8);
    Vector ratios(8);
    for (int k = 0; k < 8; ++k) ratios[k] = std::sqrt(radii[k]);
    const DecayTrend t = decay_trend(radii, ratios);
    CHECK(t.decays);
    CHECK(t.loglog_slope == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(decay_trend(radii, Vector::Ones(8)).decays);
    CHECK(decay_trend(radii, Vector::Zero(8)).decays);
}

TEST_CASE("m_property_probe") {
    const WeightedSeqSpace l2 = WeightedSeqSpace::uniform(2, 2.0);
    const GaussianMeasure deg(Vector::Zero(2), SpectralOperator::diagonal(vec({1.0, 0.0})));
    const MPropertyReport g = m_property_probe(deg, gaussian_om(deg), {vec({0.0, 1.0})}, geometric_radii(0.5, 8), l2);
    CHECK(g.verdict == Verdict::pass);
    CHECK(g.entries[0].ratio.ratios.maxCoeff() == 0.0);
    CHECK_THROWS_AS(m_property_probe(deg, gaussian_om(deg), {vec({1.0, 0.0})}, geometric_radii(0.5, 8), l2), InputError);

    // B.1 with E = {1}: along delta_n the ratio is a_{n+1} / b_n = 2^{-n}
    const LiminfOnlyMeasure lm(40);
    Vector deltas(20);
    for (int n = 1; n <= 20; ++n) deltas[n - 1] = lm.delta(n).convert_to<double>();
    const WeightedSeqSpace l1d = WeightedSeqSpace::uniform(1, 2.0);
    const MPropertyReport b1 = m_property_probe(lm.density1d(), point_om(1.0), {vec({-1.0})}, deltas, l1d);
    CHECK(b1.verdict == Verdict::pass);
    for (int n = 1; n <= 20; ++n) CHECK(b1.entries[0].ratio.ratios[n - 1] == doctest::Approx(std::pow(2.0, -n)).epsilon(1e-9));

    // B.3: a point in the support but off E decays like r^{1/2} against the spike at 1
    const OmNotStrongMeasure b3(30);
    const MPropertyReport r = m_property_probe(b3.density1d(), integer_om(30), {vec({2.1})}, geometric_radii(1e-4, 10), l1d);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.entries[0].trend.loglog_slope == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("classify_mode: Gaussian") {
    ModeOptions o;
    o.ball.samples = 100000;
    const ModeClassification c = classify_mode(std_normal(1), vec({0.0}), {vec({-1.0}), vec({0.5}), vec({2.0})},
                                               geometric_radii(0.5, 10), WeightedSeqSpace::uniform(1, 2.0), o);
    CHECK(c.strong == Tri::yes);
    CHECK(c.global_weak == Tri::yes);
    const ModeClassification off = classify_mode(std_normal(1), vec({0.5}), {vec({0.0})}, geometric_radii(0.5, 10),
                                                 WeightedSeqSpace::uniform(1, 2.0), o);
    CHECK(off.strong == Tri::no);
    CHECK(off.global_weak == Tri::no);
}

TEST_CASE("classify_mode: liminf-only measure is not a global weak mode at 1") {
    const LiminfOnlyMeasure lm(40);
    Vector eps(15);
    for (int n = 1; n <= 15; ++n) eps[n - 1] = lm.epsilon(n).convert_to<double>();
    ModeOptions o;
    o.refine = false;
    o.weak_window = 15;
    const ModeClassification c =
        classify_mode(lm.density1d(), vec({1.0}), {vec({-1.0})}, eps, WeightedSeqSpace::uniform(1, 2.0), o);
    CHECK(c.global_weak == Tri::no);
    CHECK(c.weak_worst_ratio == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c.strong == Tri::no);
}

TEST_CASE("classify_mode: crosses flip with the norm") {
    const Measure m = crosses_measure();
    ModeOptions o;
    o.refine = false;
    const Vector radii = geometric_radii(0.2, 8);
    const std::vector<Vector> pair{vec({1.0, 0.0}), vec({-1.0, 0.0})};
    const ModeClassification one = classify_mode(m, vec({1.0, 0.0}), pair, radii, WeightedSeqSpace::uniform(2, 1.0), o);
    const ModeClassification sup = classify_mode(m, vec({1.0, 0.0}), pair, radii, WeightedSeqSpace::uniform(2, kInf), o);
    CHECK(one.global_weak == Tri::yes);
    CHECK(sup.global_weak == Tri::no);
}

TEST_CASE("nelder_mead_maximise") {
    const auto f = [](const Vector& x) { return -(x[0] - 1.0) * (x[0] - 1.0) - 4.0 * (x[1] + 0.5) * (x[1] + 0.5); };
    const Vector x = nelder_mead_maximise(f, vec({0.0, 0.0}), 0.5, 400);
    CHECK((x - vec({1.0, -0.5})).norm() < 1e-6);
}
