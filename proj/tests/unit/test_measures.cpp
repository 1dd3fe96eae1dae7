#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ommap/counterexamples.hpp"
#include "ommap/errors.hpp"
#include "ommap/measures.hpp"

using namespace ommap;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Density1D uniform01() {
    return Density1D("uniform", [](double x) { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; }, {{0.0, 1.0}});
}

GaussianMeasure std_normal(int k) { return GaussianMeasure(Vector::Zero(k), SpectralOperator::identity(k)); }

}  // namespace

TEST_CASE("sample") {
    const int n = 100000;
    const Matrix g = sample(GaussianMeasure(vec({1.0, -2.0}), SpectralOperator::identity(2)), n, 11);
    CHECK(g.rows() == n);
    CHECK(std::abs(g.col(0).mean() - 1.0) < 4.0 / std::sqrt(n));
    CHECK(std::abs(g.col(1).mean() + 2.0) < 4.0 / std::sqrt(n));

    const BesovMeasure b(1.0, 1, 1.0, 3);
    const Matrix s = sample(b, n, 5);
    const double mean = s.col(0).mean();
    const double var = (s.col(0).array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(var - 2.0) < 0.03 * 2.0);
    // coordinate 2 has scale gamma_2 = 2^{-1/2}, variance 1
    const double m2 = s.col(1).mean();
    CHECK(std::abs((s.col(1).array() - m2).square().sum() / (n - 1) - 1.0) < 0.03);

    CHECK(sample(b, 50, 9) == sample(b, 50, 9));
    CHECK(sample(b, 50, 9) != sample(b, 50, 10));
    CHECK_THROWS_AS(sample(Measure(uniform01()), 10, 1), InputError);
}

TEST_CASE("ball_mass: closed forms and quadrature") {
    const WeightedSeqSpace l2 = WeightedSeqSpace::uniform(1, 2.0);
    const BallMass u = ball_mass(uniform01(), vec({0.5}), 0.1, l2);
    CHECK(u.estimate == doctest::Approx(0.2).epsilon(1e-12));

    // unnormalised spike component of the B.3 construction
    for (double r : {0.25, 0.1, 1e-3, 1e-6}) {
        const double m = OmNotStrongMeasure::component_mass(1, -r, r) - 2.0 * std::min(r, 0.5);
        CHECK(m == doctest::Approx(std::sqrt(r) - r).epsilon(1e-12));
        // y = s^2 removes the singularity
        const double q = oracle::simpson([](double s) { return 0.25 * (1.0 / s - 2.0) * 2.0 * s; }, 1e-300, std::sqrt(r), 2000);
        CHECK(std::abs(2.0 * q - (std::sqrt(r) - r)) < 1e-12);
    }

    const BallMass n1 = ball_mass(std_normal(1), vec({0.3}), 0.2, l2);
    CHECK(n1.estimate == doctest::Approx(oracle::normal_ball(0.0, 1.0, 0.3, 0.2)).epsilon(1e-10));

    CHECK_THROWS_AS(ball_mass(std_normal(1), vec({0.0}), -1.0, l2), InputError);
    CHECK_THROWS_AS(ball_mass(std_normal(2), vec({0.0}), 1.0, WeightedSeqSpace::uniform(2, 2.0)), InputError);
}

TEST_CASE("ball_mass: Monte Carlo against chi-square") {
    BallOptions o;
    o.samples = 400000;
    o.seed = 2;
    const BallMass m = ball_mass(std_normal(2), Vector::Zero(2), 1.0, WeightedSeqSpace::uniform(2, 2.0), o);
    const double exact = 1.0 - std::exp(-0.5);
    CHECK(m.stderr > 0.0);
    CHECK(std::abs(m.estimate - exact) < 4.0 * m.stderr + 1e-4);

    // exact product for the sup norm: P(|Z| < r)^2
    const BallMass s = ball_mass(std_normal(2), Vector::Zero(2), 0.7, WeightedSeqSpace::uniform(2, kInf), o);
    const double p = oracle::normal_ball(0.0, 1.0, 0.0, 0.7);
    CHECK(s.estimate == doctest::Approx(p * p).epsilon(1e-10));
}

TEST_CASE("ball_mass: determinism and thread independence") {
    BallOptions a;
    a.samples = 100000;
    a.seed = 4;
    a.threads = 1;
    BallOptions b = a;
    b.threads = 4;
    const BesovMeasure mu(1.0, 1, 1.0, 3);
    const WeightedSeqSpace l2 = WeightedSeqSpace::uniform(3, 2.0);
    const BallMass x = ball_mass(mu, vec({0.1, 0.2, 0.0}), 0.3, l2, a);
    const BallMass y = ball_mass(mu, vec({0.1, 0.2, 0.0}), 0.3, l2, b);
    CHECK(x.estimate == y.estimate);
    CHECK(x.stderr == y.stderr);
}

TEST_CASE("ball_ratio_curve") {
    const WeightedSeqSpace l2 = WeightedSeqSpace::uniform(1, 2.0);
    const Vector radii = geometric_radii(0.5, 10);
    const BallRatioEstimate same = ball_ratio_curve(std_normal(1), vec({0.0}), vec({0.0}), radii, l2);
    for (int k = 0; k < radii.size(); ++k) CHECK(same.ratios[k] == 1.0);
    CHECK(same.limit.limit == doctest::Approx(1.0));

    BallOptions even;
    even.fit_exponent = 2.0;
    const BallRatioEstimate r = ball_ratio_curve(std_normal(1), vec({1.0}), vec({0.0}), radii, l2, even);
    CHECK(std::abs(r.limit.limit - std::exp(-0.5)) < 1e-9);
    for (double rad : {1e-2, 1e-3}) {
        const BallRatioEstimate one = ball_ratio_curve(std_normal(1), vec({1.0}), vec({0.0}), vec({rad}), l2);
        const double q = oracle::normal_ball(0.0, 1.0, 1.0, rad) / oracle::normal_ball(0.0, 1.0, 0.0, rad);
        CHECK(one.ratios[0] == doctest::Approx(q).epsilon(1e-9));
    }

    const Measure crosses = crosses_measure();
    const BallRatioEstimate c = ball_ratio_curve(crosses, vec({-1.0, 0.0}), vec({1.0, 0.0}), geometric_radii(0.4, 8),
                                                 WeightedSeqSpace::uniform(2, 1.0));
    CHECK(c.limit.limit == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-10));

    CHECK_THROWS_AS(ball_ratio_curve(std_normal(1), vec({0.0}), vec({0.0}), vec({0.1, 0.2}), l2), InputError);
}

TEST_CASE("geometric_radii") {
    const Vector r = geometric_radii(0.5, 4);
    CHECK(r == vec({0.5, 0.25, 0.125, 0.0625}));
}

TEST_CASE("open_vs_closed_check") {
    const Vector radii = geometric_radii(0.1, 8);
    const OpenClosedReport u = open_vs_closed_check(uniform01(), 0.3, 0.6, radii);
    CHECK(u.max_ratio_discrepancy == 0.0);
    CHECK(u.agree);

    const LiminfOnlyMeasure lm(40);
    Vector eps(12);
    for (int n = 1; n <= 12; ++n) eps[n - 1] = lm.epsilon(n).convert_to<double>();
    const OpenClosedReport b = open_vs_closed_check(lm.density1d(), -1.0, 1.0, eps);
    CHECK(b.agree);
    CHECK(b.open.limit.limit == doctest::Approx(2.0).epsilon(1e-6));

    const Density1D g("normal", [](double x) { return oracle::normal_pdf(x); }, {{-40.0, 40.0}});
    const OpenClosedReport n = open_vs_closed_check(g, 1.0, 0.0, geometric_radii(0.5, 8));
    CHECK(n.max_ratio_discrepancy < 1e-10);
    CHECK(n.agree);
}

TEST_CASE("describe_norm") {
    CHECK(describe_norm(WeightedSeqSpace::uniform(3, kInf)).find("inf") != std::string::npos);
}
