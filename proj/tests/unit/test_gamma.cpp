#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ommap/bip.hpp"
#include "ommap/counterexamples.hpp"
#include "ommap/errors.hpp"
#include "ommap/gamma.hpp"

using namespace ommap;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::vector<double> range(int lo, int hi) {
    std::vector<double> n;
    for (int i = lo; i <= hi; ++i) n.push_back(i);
    return n;
}

OmFunctional neg_log(const std::string& name, std::function<double(double)> density) {
    OmFunctional om;
    om.name = name;
    om.dim = 1;
    om.eval = [density](const Vector& u) { return -std::log(density(u[0])); };
    om.in_domain = [density](const Vector& u) { return density(u[0]) > 0.0; };
    om.anchor = Vector::Zero(1);
    return om;
}

FunctionalSequence spike_sequence(const std::vector<double>& n) {
    std::vector<OmFunctional> members;
    for (double v : n) members.push_back(neg_log("spike", [v](double x) { return SpikeFamily(v).density(x); }));
    return make_sequence(n, members, neg_log("spike inf", [](double x) { return SpikeFamily(kInf).density(x); }));
}

FunctionalSequence gaussian_scaled(const std::vector<double>& n, const GaussianMeasure& limit,
                                   const std::function<double(double)>& factor) {
    std::vector<GaussianMeasure> members;
    for (double v : n) members.emplace_back(limit.mean, limit.covariance.scaled(factor(v)));
    return gaussian_om_sequence(n, members, limit);
}

}  // namespace

TEST_CASE("gamma_liminf_probe") {
    const GaussianMeasure g(vec({0.5, -1.0}), SpectralOperator::diagonal(vec({2.0, 0.5})));
    const std::vector<double> n = range(1, 64);
    const FunctionalSequence constant = gaussian_scaled(n, g, [](double) { return 1.0; });
    PathOptions only_constant;
    only_constant.paths = 0;
    only_constant.coordinate_paths = false;
    const LiminfReport c = gamma_liminf_probe(constant, vec({1.0, 0.0}), only_constant);
    CHECK(c.paths_tested == 1);
    CHECK(c.worst_margin == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c.verdict == Verdict::pass);

    const FunctionalSequence scaled = gaussian_scaled(n, g, [](double v) { return 1.0 + 1.0 / v; });
    for (const Vector& x : {vec({1.0, 0.0}), vec({-2.0, 3.0}), vec({0.5, -1.0})}) {
        const LiminfReport r = gamma_liminf_probe(scaled, x);
        CHECK(r.verdict == Verdict::pass);
        CHECK(r.violations.empty());
    }

    // the spike family is not Gamma-convergent at 0: the path 1/n beats the limit value
    const std::vector<double> sn = range(1, 200);
    std::vector<Vector> path;
    for (double v : sn) path.push_back(vec({1.0 / v}));
    const LiminfReport s = gamma_liminf_probe(spike_sequence(sn), vec({0.0}), {}, {path});
    CHECK(s.verdict == Verdict::fail);
    REQUIRE_FALSE(s.violations.empty());
    const double f0 = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi);
    const double v = -std::log(oracle::spike_density(200.0, 1.0 / 200.0));
    CHECK(s.worst_margin <= v - f0 + 1e-9);
    CHECK(s.worst_margin < -1.0);
}

TEST_CASE("gaussian_recovery_sequence") {
    const GaussianMeasure g(vec({1.0}), SpectralOperator::identity(1));
    const std::vector<double> n = range(1, 20);
    std::vector<GaussianMeasure> same(n.size(), g);
    for (const Vector& u : gaussian_recovery_sequence(same, g, vec({2.5}))) CHECK(u == vec({2.5}));

    const GaussianMeasure c0(vec({0.0}), SpectralOperator::identity(1));
    std::vector<GaussianMeasure> grow;
    for (double v : n) grow.emplace_back(vec({0.0}), SpectralOperator::diagonal(vec({(1 + 1 / v) * (1 + 1 / v)})));
    const std::vector<Vector> seq = gaussian_recovery_sequence(grow, c0, vec({1.0}));
    for (std::size_t i = 0; i < n.size(); ++i) {
        CHECK(seq[i][0] == doctest::Approx(1.0 + 1.0 / n[i]).epsilon(1e-15));
        CHECK(gaussian_om(grow[i])(seq[i]) == doctest::Approx(0.5).epsilon(1e-14));
    }
    const RecoveryReport rep = recovery_check(gaussian_om_sequence(n, grow, c0), vec({1.0}), seq);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(std::abs(rep.gap) < 1e-12);

    const GaussianMeasure deg(vec({0.0, 0.0}), SpectralOperator::diagonal(vec({1.0, 0.0})));
    std::vector<GaussianMeasure> dm(3, deg);
    for (const Vector& u : gaussian_recovery_sequence(dm, deg, vec({0.0, 1.0}))) CHECK(u == vec({0.0, 1.0}));
}

TEST_CASE("besov_recovery_sequence") {
    const BesovMeasure lim(1.0, 1, 1.0, 4);
    const std::vector<double> n = range(2, 30);
    std::vector<BesovMeasure> same(n.size(), lim);
    for (const Vector& u : besov_recovery_sequence(same, lim, vec({1, 2, 3, 4}))) CHECK(u == vec({1, 2, 3, 4}));

    std::vector<BesovMeasure> up;
    for (double v : n) up.emplace_back(1.0 + 1.0 / v, 1, 1.0, 4);
    const Vector e2 = vec({0, 1, 0, 0});
    const std::vector<Vector> seq = besov_recovery_sequence(up, lim, e2);
    for (std::size_t i = 0; i < n.size(); ++i) {
        CHECK(seq[i][1] == doctest::Approx(std::pow(2.0, -1.0 / n[i])).epsilon(1e-14));
        CHECK(std::abs(besov_om(up[i])(seq[i]) - besov_om(lim)(e2)) < 1e-12);
    }
    for (const Vector& u : besov_recovery_sequence(up, lim, Vector::Zero(4))) CHECK(u == Vector::Zero(4));
}

TEST_CASE("equicoercivity_probe") {
    const std::vector<double> n = range(2, 40);
    const BesovMeasure lim(1.0, 1, 1.0, 10);
    std::vector<BesovMeasure> members;
    for (double v : n) members.emplace_back(1.0 + (std::lround(v) % 2 ? -1.0 : 1.0) / v, 1, 1.0, 10);
    const FunctionalSequence seq = besov_om_sequence(n, members, lim);
    const double sbar = 1.0 - 0.5;

    const EquicoercivityReport empty = equicoercivity_probe(seq, -1.0, 100, besov_compact_bound(sbar, 1));
    CHECK(empty.vacuous);
    CHECK(empty.verdict == Verdict::pass);

    const EquicoercivityReport b = equicoercivity_probe(seq, 1.0, 2000, besov_compact_bound(sbar, 1), 7);
    CHECK(b.samples == 2000);
    CHECK(b.violations == 0);
    CHECK(b.verdict == Verdict::pass);

    // a bound that is too tight is caught
    const CompactBound tight = [](int, const Vector& u, double t) { return u.cwiseAbs().maxCoeff() <= 0.1 * t; };
    CHECK(equicoercivity_probe(seq, 1.0, 200, tight, 7).verdict == Verdict::fail);

    const GaussianMeasure g(vec({0.0, 1.0}), SpectralOperator::diagonal(vec({1.0, 0.3})));
    std::vector<GaussianMeasure> gm;
    for (double v : n) gm.emplace_back(g.mean, SpectralOperator::diagonal(vec({1.0 + 1.0 / v, 0.3 + 0.5 / v})));
    const FunctionalSequence gs = gaussian_om_sequence(n, gm, g);
    const EquicoercivityReport ge = equicoercivity_probe(gs, 2.0, 2000, gaussian_compact_bound(gm), 3);
    CHECK(ge.violations == 0);
}

TEST_CASE("mode_convergence_check") {
    const std::vector<double> n = range(1, 40);
    const GaussianMeasure g(vec({0.5, -1.0}), SpectralOperator::diagonal(vec({2.0, 0.5})));
    const FunctionalSequence constant = gaussian_scaled(n, g, [](double) { return 1.0; });
    std::vector<Vector> fixed(n.size(), g.mean);
    const ModeConvergenceReport c = mode_convergence_check(constant, fixed, {g.mean});
    CHECK(c.verdict == Verdict::pass);
    REQUIRE(c.cluster_points.size() == 1);
    CHECK(c.cluster_points[0] == g.mean);

    std::vector<GaussianMeasure> shifted;
    std::vector<Vector> means;
    for (double v : n) {
        shifted.emplace_back(g.mean + vec({1.0 / v, 0.0}), g.covariance);
        means.push_back(shifted.back().mean);
    }
    const ModeConvergenceReport s = mode_convergence_check(gaussian_om_sequence(n, shifted, g), means, {g.mean},
                                                           {1e-1, 1e-1, 0.25, 1e-6});
    CHECK(s.verdict == Verdict::pass);
    CHECK(s.distance_to_limit_argmin[0] < 1.0 / 10.0);

    // mixture modes along t_n = (-1)^n / n cluster at both argmins of the symmetric limit
    const std::vector<double> mn = range(10, 200);
    std::vector<OmFunctional> members;
    std::vector<Vector> modes;
    for (double v : mn) {
        const double t = (std::lround(v) % 2 ? -1.0 : 1.0) / v;
        members.push_back(neg_log("mixture", [t](double x) { return MixtureFamily(t, 5.0).density(x); }));
        modes.push_back(vec({mixture_modes(t, 5.0).mode}));
    }
    const FunctionalSequence mix =
        make_sequence(mn, members, neg_log("mixture 0", [](double x) { return MixtureFamily(0.0, 5.0).density(x); }));
    std::vector<Vector> argmins;
    for (double x : mixture_modes(0.0, 5.0).maximisers) {
        const double ref = oracle::argmax_1d([](double y) { return oracle::mixture_density(0.0, 5.0, y); },
                                             x > 0 ? 3.0 : -7.0, x > 0 ? 7.0 : -3.0);
        CHECK(x == doctest::Approx(ref).epsilon(1e-8));
        argmins.push_back(vec({x}));
    }
    const ModeConvergenceReport m = mode_convergence_check(mix, modes, argmins, {1e-4, 1e-2, 0.25, 1e-2});
    // F_N(x_N) - min F is about -log(1 + 1/N) at N = 200
    CHECK(m.min_value_gap == doctest::Approx(std::log(1.0 + 1.0 / 200.0)).epsilon(0.05));
    CHECK(m.cluster_points.size() == 2);
    CHECK(m.clusters_are_argmins);
    for (double d : m.distance_to_limit_argmin) CHECK(d < 1e-4);
    CHECK(m.verdict == Verdict::pass);

    // the spike modes cluster at 0, which is not the limit argmin 1
    const std::vector<double> sn = range(50, 120);
    std::vector<Vector> smodes;
    for (double v : sn) smodes.push_back(vec({spike_mode(v)}));
    const ModeConvergenceReport sp = mode_convergence_check(spike_sequence(sn), smodes, {vec({1.0})}, {1e-4, 0.05, 0.25, kInf});
    CHECK(sp.verdict == Verdict::fail);
    CHECK_FALSE(sp.clusters_are_argmins);
}

TEST_CASE("continuous_convergence_probe") {
    const int k = 20;
    Matrix o(1, k);
    for (int j = 0; j < k; ++j) o(0, j) = 1.0 / (j + 1);
    const LinearObservation obs(o, SpectralOperator::identity(1), vec({1.0}));
    const Potential phi = quadratic_potential(obs);
    const std::vector<double> n = range(1, k);
    std::vector<Vector> points{Vector::Zero(k), Vector::Constant(k, 0.3)};

    std::vector<Potential> same(n.size(), phi);
    CHECK(continuous_convergence_probe(n, same, phi, points).verdict == Verdict::pass);

    const ContinuityReport p = continuous_convergence_probe(n, projected_potentials(phi, n), phi, points);
    CHECK(p.verdict == Verdict::pass);
    // at the last member P_n is the identity, so only the neighbourhood radius remains
    for (const ContinuityEntry& e : p.entries) {
        CHECK(e.converges);
        CHECK(e.sup_deviation[k - 1] < e.sup_deviation[0]);
    }

    // spike potentials -log(rho_n / rho_inf) converge pointwise but not continuously at 0
    const std::vector<double> sn = range(1, 200);
    std::vector<Potential> sp;
    for (double v : sn)
        sp.push_back(make_potential("spike", 1, [v](const Vector& u) {
            return -std::log(SpikeFamily(v).density(u[0]) / SpikeFamily(kInf).density(u[0]));
        }));
    const Potential lim = make_potential("spike inf", 1, [](const Vector& u) {
        return std::log(1.0) * u[0];
    });
    ContinuityOptions co;
    co.rho0 = 1.0;
    const ContinuityReport s = continuous_convergence_probe(sn, sp, lim, {vec({0.0})}, co);
    CHECK(s.verdict == Verdict::fail);
}

TEST_CASE("sum_rule_check and lsc envelope") {
    const std::vector<double> n = range(1, 400);
    const GaussianMeasure g(vec({0.0, 0.0, 0.0}), SpectralOperator::diagonal(vec({1.0, 0.5, 0.25})));
    std::vector<GaussianMeasure> members;
    for (double v : n) members.emplace_back(g.mean + vec({1.0 / v, 0.0, 0.0}), SpectralOperator::diagonal(vec({1.0 + 1.0 / v, 0.5, 0.25 + 0.1 / v})));
    const FunctionalSequence f = gaussian_om_sequence(n, members, g);
    const auto recovery = [&](const Vector& u) { return gaussian_recovery_sequence(members, g, u); };
    const std::vector<Vector> points{vec({0.3, -0.2, 0.1}), vec({1.0, 1.0, -1.0})};

    std::vector<Potential> zero(n.size(), zero_potential(3));
    CHECK(sum_rule_check(f, zero, zero_potential(3), points, recovery).verdict == Verdict::pass);

    Matrix o(2, 3);
    o << 1, 0.5, 0.2, 0, 1, -0.3;
    const Potential phi = quadratic_potential(LinearObservation(o, SpectralOperator::identity(2), vec({1.0, -1.0})));
    const SumRuleReport s = sum_rule_check(f, projected_potentials(phi, n), phi, points, recovery);
    CHECK(s.verdict == Verdict::pass);

    // step function: F = 1 on [0, inf), 0 elsewhere; its lsc envelope at 0 is 0
    const auto step = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
    const Vector env = lsc_envelope_1d(step, 0.0, vec({0.1, 0.01, 0.001}));
    for (int i = 0; i < env.size(); ++i) CHECK(env[i] == 0.0);
    OmFunctional sf = neg_log("step", [](double) { return 1.0; });
    sf.eval = [step](const Vector& u) { return step(u[0]); };
    const std::vector<OmFunctional> copies(n.size(), sf);
    std::vector<Vector> left;
    for (double v : n) left.push_back(vec({-1.0 / v}));
    const LiminfReport r = gamma_liminf_probe(make_sequence(n, copies, sf), vec({0.0}), {}, {left});
    CHECK(r.verdict == Verdict::fail);
    CHECK(r.worst_margin == doctest::Approx(env[2] - 1.0));
}
