#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ommap/counterexamples.hpp"
#include "ommap/errors.hpp"
#include "ommap/om.hpp"

using namespace ommap;

TEST_CASE("kl_gaussians") {
    CHECK(kl_gaussians(1.0) == 0.0);
    CHECK(kl_gaussians(2.0) == doctest::Approx((0.5 - 1.0 + std::log(2.0)) / 2.0).epsilon(1e-15));
    for (double s : {0.1, 0.5, 2.0, 10.0}) {
        CHECK(std::abs(kl_gaussians(s) - oracle::kl_normal_quad(s)) < 1e-9);
        CHECK(std::abs(kl_gaussians_quadrature(s) - kl_gaussians(s)) < 1e-10);
    }
    CHECK(kl_gaussians(1e-6) > 1e5);
    CHECK(kl_gaussians(1e6) > 6.0);
    CHECK(kl_gaussians(1e6) > kl_gaussians(1e3));
    CHECK_THROWS_AS(kl_gaussians(0.0), InputError);
}

TEST_CASE("mixture density and modes") {
    for (double x : {-5.0, 0.0, 1.3, 4.9})
        CHECK(MixtureFamily(0.05, 5.0).density(x) == doctest::Approx(oracle::mixture_density(0.05, 5.0, x)).epsilon(1e-14));
    const double mass = oracle::simpson([](double x) { return oracle::mixture_density(0.3, 5.0, x); }, -20.0, 20.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    const MixtureModes sym = mixture_modes(0.0, 5.0);
    REQUIRE(sym.maximisers.size() == 2);
    CHECK(std::abs(std::abs(sym.maximisers[0]) - std::abs(sym.maximisers[1])) < 1e-8);
    CHECK(MixtureFamily(0.0, 5.0).density(sym.maximisers[0]) ==
          doctest::Approx(MixtureFamily(0.0, 5.0).density(sym.maximisers[1])).epsilon(1e-12));

    const MixtureModes p = mixture_modes(0.1, 5.0);
    const double ref = oracle::argmax_1d([](double x) { return oracle::mixture_density(0.1, 5.0, x); }, -10.0, 10.0);
    CHECK(p.mode == doctest::Approx(ref).epsilon(1e-7));
    CHECK(std::abs(p.mode - 5.0) < 0.01);
    CHECK(mixture_modes(-0.1, 5.0).mode == doctest::Approx(-p.mode).epsilon(1e-9));
    CHECK_FALSE(p.warning_small_r);
    CHECK(mixture_modes(0.1, 0.8).warning_small_r);
}

TEST_CASE("mixture KL against quadrature and closed form") {
    // KL(mu_t || mu_{-t}) for well separated components is t log((1+t)/(1-t)) up to e^{-r^2} terms
    const double t = 1e-2;
    const double q = oracle::simpson([t](double x) {
        const double p = oracle::mixture_density(t, 5.0, x), m = oracle::mixture_density(-t, 5.0, x);
        return p > 0.0 ? p * std::log(p / m) : 0.0;
    }, -20.0, 20.0, 400000);
    CHECK(kl_mixture(t, 5.0) == doctest::Approx(q).epsilon(1e-6));
    CHECK(kl_mixture(t, 5.0) == doctest::Approx(t * std::log((1 + t) / (1 - t))).epsilon(1e-6));
    // the asymptotic 10^{5/4} t^{9/4} is off by a factor of about 2.8 here
    const double claimed = std::pow(10.0, 1.25) * std::pow(t, 2.25);
    CHECK(claimed / kl_mixture(t, 5.0) > 2.5);
}

TEST_CASE("spike family") {
    for (double n : {1.0, 2.0, 10.0})
        for (double x : {-0.5, 0.0, 0.05, 1.0, 3.0})
            CHECK(SpikeFamily(n).density(x) == doctest::Approx(oracle::spike_density(n, x)).epsilon(1e-14));
    for (double n : {1.0, 10.0}) {
        const double mass = oracle::simpson([n](double x) { return oracle::spike_density(n, x); }, -15.0, 15.0, 600000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(spike_mode(kInf) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(spike_mode(100) >= 0.009);
    CHECK(spike_mode(100) <= 0.011);
    for (double n : {10.0, 50.0}) {
        const double ref = oracle::argmax_1d([n](double x) { return oracle::spike_density(n, x); }, -1.0, 3.0, 400000);
        CHECK(spike_mode(n) == doctest::Approx(ref).epsilon(1e-6));
    }
    // pointwise but not uniform convergence
    for (double x : {-1.0, 0.0, 0.5, 1.0, 2.0})
        CHECK(std::abs(SpikeFamily(1e6).density(x) - SpikeFamily(kInf).density(x)) < 1e-5);
    for (double n : {10.0, 100.0, 1000.0})
        CHECK(std::abs(SpikeFamily(n).density(1.0 / n) - SpikeFamily(kInf).density(1.0 / n)) > 0.5);
}

TEST_CASE("spike KL is a positive constant over n, not 1/n") {
    for (double n : {20.0, 50.0}) {
        const double q = oracle::simpson([n](double x) {
            const double p = oracle::spike_density(kInf, x), m = oracle::spike_density(n, x);
            return p > 0.0 ? p * std::log(p / m) : 0.0;
        }, -15.0, 15.0, 2000000);
        CHECK(kl_spike(n) == doctest::Approx(q).epsilon(1e-6));
        CHECK(n * kl_spike(n) > 0.25);
        CHECK(n * kl_spike(n) < 0.3);
        CHECK(kl_spike_reverse(n) > 0.0);
    }
}

TEST_CASE("liminf-only measure: exact geometry") {
    const LiminfOnlyMeasure mu(40);
    const oracle::DyadicMeasure ref{40};
    CHECK(mu.intervals_disjoint());
    CHECK(mu.left_telescoped() == mu.a(1));
    CHECK(mu.total_mass() == Rational(3, 2));
    for (int n = 1; n <= 10; ++n) {
        CHECK(mu.a(n) == ref.a(n));
        CHECK(mu.alpha(n) == ref.alpha(n));
        CHECK(mu.b(n) * 2 == mu.a(n));
        CHECK(mu.alpha(n) / mu.alpha(n + 1) > 2);
    }
    for (int n : {1, 3, 7, 15}) {
        CHECK(mu.ball_mass(Rational(-1), mu.epsilon(n)) == ref.ball(-1, ref.alpha(n) * 2));
        CHECK(mu.ball_mass(Rational(1), mu.delta(n)) == ref.ball(1, ref.alpha(n)));
        CHECK(mu.ball_mass(Rational(-1), mu.epsilon(n)) == mu.a(n));
    }
}

TEST_CASE("liminf_only_ratios") {
    const LiminfOnlyMeasure mu(40);
    const LiminfOnlyRatios r = liminf_only_ratios(mu, 30);
    CHECK(r.epsilon_all_two);
    CHECK(r.delta_all_match);
    for (std::size_t i = 0; i < r.n.size(); ++i) {
        CHECK(r.epsilon_ratios[i] == 2);
        // a_{n+1} / b_n simplifies to 2^{-n}
        CHECK(r.delta_ratios[i] == mu.a(r.n[i] + 1) / mu.b(r.n[i]));
        CHECK(r.delta_ratios[i] * oracle::DyadicMeasure::pow2(r.n[i]) == 1);
        CHECK(r.log2_delta_ratios[i] == -r.n[i]);
    }
    CHECK(r.delta_ratios[2] == Rational(1, 8));
    CHECK(log2_rational(Rational(3, 16)) == doctest::Approx(std::log2(3.0 / 16.0)).epsilon(1e-14));
    CHECK_THROWS_AS(liminf_only_ratios(mu, 39), InputError);
}

TEST_CASE("om-not-strong measure") {
    CHECK(OmNotStrongMeasure::normalisation() == doctest::Approx(24.0 / (5.0 * std::numbers::pi * std::numbers::pi)));
    for (int k : {1, 2, 3, 7}) {
        CHECK(OmNotStrongMeasure::component_mass(k, -0.5, 0.5) == doctest::Approx(1.25 / (k * k)).epsilon(1e-12));
        for (double r : {1e-2, 1e-4}) {
            if (r > 0.5 / std::pow(k, 4)) continue;
            const double m = OmNotStrongMeasure::component_mass(k, -r, r);
            CHECK(m == doctest::Approx((std::sqrt(r) - r) / (k * k) + 2.0 * r * k * k).epsilon(1e-12));
        }
    }
    const OmNotStrongMeasure mu(30);
    double tail = 0.0;
    for (int k = 31; k < 2000000; ++k) tail += 1.25 / (static_cast<double>(k) * k);
    CHECK(mu.retained_mass() + OmNotStrongMeasure::normalisation() * tail == doctest::Approx(1.0).epsilon(1e-6));
    const Density1D d = mu.density1d();
    CHECK(d.integrate(0.0, 31.0, 1e-10) == doctest::Approx(mu.retained_mass()).epsilon(1e-6));
    CHECK(mu.ball_mass(3.0, 1e-3) == doctest::Approx(d.closed_form_mass(3.0, 1e-3, false)).epsilon(1e-12));
}

TEST_CASE("om_not_strong_suite") {
    const OmNotStrongMeasure mu(30);
    const OmNotStrongSuite s = om_not_strong_suite(mu, {2, 3, 5}, {2, 5, 10, 20});
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        const double k2 = static_cast<double>(s.k[i]) * s.k[i];
        CHECK(std::abs(s.ratio_to_k[i].limit.limit / k2 - 1.0) < 0.01);
        CHECK(s.om_values[i] == doctest::Approx(2.0 * std::log(s.k[i])));
    }
    for (std::size_t i = 0; i < s.n.size(); ++i) {
        const double n = s.n[i];
        CHECK(s.bound_at_rn[i] == doctest::Approx((1.0 / (std::sqrt(2.0) * n * n) + std::pow(n, -4)) * n * n));
        CHECK(s.strong_ratio_at_rn[i] <= s.bound_at_rn[i] + 1e-12);
    }
    CHECK(s.bound_at_rn[2] == doctest::Approx(1.0 / std::sqrt(2.0) + 0.01));
    CHECK(s.strong_ratio_at_rn[2] <= 0.72);
    for (double slope : s.off_integer_decay_slopes) CHECK(slope > 0.3);
}

TEST_CASE("om-not-strong: I(k) = 2 log k through ball ratios") {
    const OmNotStrongMeasure mu(30);
    CHECK_THROWS_AS(density_om(mu.density1d(), 1.0), InputError);
    BallOptions o;
    o.fit_exponent = 0.5;
    const Vector radii = geometric_radii(1e-10, 10);
    const BallRatioEstimate r = ball_ratio_curve(mu.density1d(), Vector::Constant(1, 1.0), Vector::Constant(1, 3.0), radii,
                                                 WeightedSeqSpace::uniform(1, 2.0), o);
    CHECK(std::abs(r.limit.limit / 9.0 - 1.0) < 0.01);
}

TEST_CASE("crosses") {
    const double r = 0.1;
    CHECK(crosses_ball_mass(CrossNorm::one, 1, r) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(crosses_ball_mass(CrossNorm::one, -1, r) == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(crosses_ball_mass(CrossNorm::sup, -1, r) == doctest::Approx(0.4 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(crosses_ball_mass(CrossNorm::sup, 1, r) == doctest::Approx(0.4).epsilon(1e-15));

    const LengthMeasure2D m = crosses_measure();
    for (int sign : {-1, 1})
        for (double p : {1.0, kInf}) {
            Vector c = Vector::Zero(2);
            c[0] = sign;
            double len = 0.0;
            for (const Segment2D& s : m.segments) len += oracle::segment_length_in_ball(s.a, s.b, c, r, p, 200000);
            const CrossNorm n = std::isinf(p) ? CrossNorm::sup : CrossNorm::one;
            CHECK(std::abs(len - crosses_ball_mass(n, sign, r)) < 1e-5);
            const BallMass b = ball_mass(m, c, r, WeightedSeqSpace::uniform(2, p));
            CHECK(b.estimate == doctest::Approx(crosses_ball_mass(n, sign, r)).epsilon(1e-12));
        }

    CHECK(crosses_om_difference(CrossNorm::one) == doctest::Approx(std::log(std::sqrt(2.0))).epsilon(1e-12));
    CHECK(crosses_om_difference(CrossNorm::sup) == doctest::Approx(-std::log(std::sqrt(2.0))).epsilon(1e-12));
    CHECK(crosses_mode(CrossNorm::one) == 1);
    CHECK(crosses_mode(CrossNorm::sup) == -1);
    CHECK_THROWS_AS(crosses_ball_mass(CrossNorm::one, 1, 0.7), RegimeError);
}
