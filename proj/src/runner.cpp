#include "ommap/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "ommap/counterexamples.hpp"
#include "ommap/gamma.hpp"
#include "ommap/om.hpp"
#include "ommap/parallel.hpp"
#include "ommap/rng.hpp"

namespace fs = std::filesystem;

namespace ommap {

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"ball_ratio",   "classify_mode", "m_property",  "gamma_check",
                                            "map_solve",    "perturbation",  "small_noise", "counterexample"};
    return k;
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1a", "fig1b", "figB1", "figB3"};
    return ids;
}

namespace {

struct Context {
    fs::path out;
    std::uint64_t seed = 0;
    int threads = 0;
    std::vector<std::string> files;

    CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
        files.push_back(name);
        return CsvWriter(out / name, header);
    }
};

using Plan = std::function<json(Context&)>;

// ---------------------------------------------------------------- shared parsing

struct BallSettings {
    BallOptions opts;
    BallOptions at(const Context& ctx) const {
        BallOptions o = opts;
        o.seed = ctx.seed;
        o.threads = ctx.threads;
        return o;
    }
};

BallSettings ball_settings(const Fields& f) {
    BallSettings s;
    if (!f.has("ball")) return s;
    Fields b(f.raw("ball"), f.path("ball"));
    BallOptions& o = s.opts;
    o.samples = static_cast<std::size_t>(b.integer("samples", static_cast<long long>(o.samples)));
    o.batches = static_cast<int>(b.integer("batches", o.batches));
    o.closed = b.boolean("closed", o.closed);
    o.antithetic = b.boolean("antithetic", o.antithetic);
    o.fit_points = static_cast<int>(b.integer("fit_points", o.fit_points));
    o.fit_exponent = b.number("fit_exponent", o.fit_exponent);
    o.bootstrap = static_cast<int>(b.integer("bootstrap", o.bootstrap));
    o.max_rel_err = b.number("max_rel_err", o.max_rel_err);
    o.quad_tol = b.number("quad_tol", o.quad_tol);
    b.finish();
    if (o.samples < 2 || o.batches < 2) throw ConfigError(f.path("ball"), "need samples >= 2 and batches >= 2");
    if (o.fit_points < 1 || !(o.fit_exponent > 0.0)) throw ConfigError(f.path("ball"), "bad extrapolation settings");
    return s;
}

Vector point(const Fields& f, const std::string& key, int dim) {
    const Vector v = f.vector(key);
    if (v.size() != dim) throw ConfigError(f.path(key), "expected " + std::to_string(dim) + " coordinates");
    return v;
}

std::vector<Vector> points(const Fields& f, const std::string& key, int dim) {
    const json& j = f.raw(key);
    if (!j.is_array()) throw ConfigError(f.path(key), "expected an array of points");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = f.path(key) + "/" + std::to_string(i);
        Vector v = j[i].is_number() ? Vector::Constant(1, j[i].get<double>()) : vector_from_json(j[i], p);
        if (v.size() != dim) throw ConfigError(p, "expected " + std::to_string(dim) + " coordinates");
        out.push_back(v);
    }
    return out;
}

Vector radii_field(const Fields& f, const std::string& key) {
    return f.has(key) ? radii_from_json(f.raw(key), f.path(key)) : geometric_radii();
}

WeightedSeqSpace norm_field(const Fields& f, int dim) {
    return f.has("norm") ? norm_from_json(&f.raw("norm"), dim, f.path("norm")) : WeightedSeqSpace::uniform(dim, 2.0);
}

/// A list of indices, or an integer N meaning first..N.
std::vector<double> index_list(const Fields& f, const std::string& key, std::vector<double> fallback, int first = 1) {
    if (!f.has(key)) return fallback;
    const json& j = f.raw(key);
    std::vector<double> n;
    if (j.is_number_integer()) {
        const long long top = j.get<long long>();
        if (top < first) throw ConfigError(f.path(key), "N must be at least " + std::to_string(first));
        for (long long i = first; i <= top; ++i) n.push_back(static_cast<double>(i));
    } else {
        n = f.numbers(key);
    }
    if (n.empty()) throw ConfigError(f.path(key), "schedule must not be empty");
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0)) throw ConfigError(f.path(key), "indices must be positive");
        if (i > 0 && !(n[i] > n[i - 1])) throw ConfigError(f.path(key), "indices must increase");
    }
    return n;
}

SolverOptions solver_field(const Fields& f) {
    SolverOptions s;
    if (!f.has("solver")) return s;
    Fields g(f.raw("solver"), f.path("solver"));
    s.tol = g.number("tol", s.tol);
    s.max_iter = static_cast<int>(g.integer("max_iter", s.max_iter));
    s.power_iterations = static_cast<int>(g.integer("power_iterations", s.power_iterations));
    s.check_uniqueness = g.boolean("check_uniqueness", s.check_uniqueness);
    g.finish();
    if (!(s.tol > 0.0) || s.max_iter < 1) throw ConfigError(f.path("solver"), "need tol > 0 and max_iter >= 1");
    return s;
}

// ---------------------------------------------------------------- JSON views

json extrapolation_json(const Extrapolation& e) {
    return {{"limit", e.limit},
            {"stderr", e.stderr},
            {"ci", {e.ci_lo, std::isfinite(e.ci_hi) ? json(e.ci_hi) : json("inf")}},
            {"model_error", std::isfinite(e.model_error) ? json(e.model_error) : json("inf")}};
}

json ratio_json(const BallRatioEstimate& r) {
    return {{"radii", to_json(r.radii)},
            {"ratios", to_json(r.ratios)},
            {"stderr", to_json(r.stderr)},
            {"limit", r.limit.limit},
            {"extrapolation", extrapolation_json(r.limit)},
            {"method", to_string(r.method)},
            {"low_confidence", r.low_confidence},
            {"diagnostic", r.diagnostic},
            {"norm", r.norm}};
}

void ratio_csv(Context& ctx, const std::string& name, const BallRatioEstimate& r) {
    CsvWriter w = ctx.csv(name, {"radius", "ratio", "stderr"});
    for (int k = 0; k < r.radii.size(); ++k) w.row({r.radii[k], r.ratios[k], r.stderr[k]});
}

json map_json(const MapSolution& s) {
    return {{"map", to_json(s.point)},         {"objective", s.objective},     {"residual", s.optimality_residual},
            {"iterations", s.iterations},      {"solver", s.solver},           {"converged", s.converged},
            {"rank_deficient", s.rank_deficient}, {"non_unique", s.non_unique}, {"note", s.note}};
}

std::optional<OmFunctional> om_for(const Measure& mu, std::optional<double> anchor) {
    if (auto* g = std::get_if<GaussianMeasure>(&mu)) return gaussian_om(*g);
    if (auto* b = std::get_if<BesovMeasure>(&mu)) return besov_om(*b);
    if (auto* d = std::get_if<Density1D>(&mu); d && anchor) return density_om(*d, *anchor);
    return std::nullopt;
}

// ---------------------------------------------------------------- kinds

Plan plan_ball_ratio(const Fields& f) {
    Measure mu = measure_from_json(f.raw("measure"), "/measure");
    const int dim = measure_dim(mu);
    const Vector x1 = point(f, "x1", dim), x2 = point(f, "x2", dim);
    const Vector radii = radii_field(f, "radii");
    const WeightedSeqSpace norm = norm_field(f, dim);
    const BallSettings ball = ball_settings(f);
    const bool om_check = f.boolean("om_check", false);
    OmCheckOptions tol;
    if (f.has("tolerances")) {
        Fields t(f.raw("tolerances"), f.path("tolerances"));
        tol.abs_tol = t.number("abs_tol", tol.abs_tol);
        tol.sigmas = t.number("sigmas", tol.sigmas);
        tol.max_rel_stderr = t.number("max_rel_stderr", tol.max_rel_stderr);
        t.finish();
    }
    std::optional<OmFunctional> om;
    if (om_check) {
        om = om_for(mu, std::nullopt);
        if (!om) throw ConfigError("/om_check", "OM functional available only for gaussian and besov1 measures");
    }
    return [=](Context& ctx) {
        json r;
        if (om) {
            OmCheckOptions o = tol;
            o.ball = ball.at(ctx);
            const OmDifferenceReport rep = om_difference_check(mu, *om, x1, x2, radii, norm, o);
            r["ratio"] = ratio_json(rep.ratio);
            r["om_check"] = {{"expected", rep.expected},
                             {"deviation", rep.deviation},
                             {"tolerance", rep.tolerance},
                             {"verdict", to_string(rep.verdict)}};
            ratio_csv(ctx, "ratio.csv", rep.ratio);
        } else {
            const BallRatioEstimate est = ball_ratio_curve(mu, x1, x2, radii, norm, ball.at(ctx));
            r["ratio"] = ratio_json(est);
            ratio_csv(ctx, "ratio.csv", est);
        }
        return r;
    };
}

Plan plan_classify_mode(const Fields& f) {
    Measure mu = measure_from_json(f.raw("measure"), "/measure");
    const int dim = measure_dim(mu);
    const Vector candidate = point(f, "candidate", dim);
    const std::vector<Vector> competitors = points(f, "competitors", dim);
    const Vector radii = radii_field(f, "radii");
    const WeightedSeqSpace norm = norm_field(f, dim);
    const BallSettings ball = ball_settings(f);
    ModeOptions mo;
    if (f.has("weak_radii")) mo.weak_radii = radii_from_json(f.raw("weak_radii"), "/weak_radii");
    if (f.has("mode")) {
        Fields m(f.raw("mode"), f.path("mode"));
        mo.tol = m.number("tol", mo.tol);
        mo.stderr_sigmas = m.number("stderr_sigmas", mo.stderr_sigmas);
        mo.refine = m.boolean("refine", mo.refine);
        mo.nelder_mead_iterations = static_cast<int>(m.integer("nelder_mead_iterations", mo.nelder_mead_iterations));
        mo.refine_samples = static_cast<std::size_t>(m.integer("refine_samples", static_cast<long long>(mo.refine_samples)));
        mo.weak_window = static_cast<int>(m.integer("weak_window", mo.weak_window));
        m.finish();
    }
    return [=](Context& ctx) {
        ModeOptions o = mo;
        o.ball = ball.at(ctx);
        const ModeClassification c = classify_mode(mu, candidate, competitors, radii, norm, o);
        {
            CsvWriter w = ctx.csv("strong.csv", {"radius", "strong_ratio", "stderr", "sup_competitor_index"});
            for (int k = 0; k < c.radii.size(); ++k)
                w.row({c.radii[k], c.strong_ratio_curve[k], c.strong_stderr[k], c.sup_location_per_radius_index[k]});
        }
        {
            CsvWriter w = ctx.csv("weak.csv", {"competitor_index", "max_small_radius_ratio"});
            for (int i = 0; i < c.weak_ratio_per_competitor.size(); ++i) w.row({double(i), c.weak_ratio_per_competitor[i]});
        }
        return json{{"candidate", to_json(c.candidate)},
                    {"strong", to_string(c.strong)},
                    {"global_weak", to_string(c.global_weak)},
                    {"strong_limit", extrapolation_json(c.strong_limit)},
                    {"strong_ratio_min", c.strong_ratio_curve.minCoeff()},
                    {"weak_worst_ratio", c.weak_worst_ratio},
                    {"weak_worst_competitor", c.weak_worst_competitor},
                    {"norm", c.norm},
                    {"caveat", c.caveat}};
    };
}

Plan plan_m_property(const Fields& f) {
    Measure mu = measure_from_json(f.raw("measure"), "/measure");
    const int dim = measure_dim(mu);
    std::optional<double> anchor;
    if (f.has("anchor")) anchor = f.number("anchor");
    const std::optional<OmFunctional> om = om_for(mu, anchor);
    if (!om) throw ConfigError("/measure", "OM functional unavailable (density1d needs \"anchor\")");
    const std::vector<Vector> outside = points(f, "outside_points", dim);
    for (std::size_t i = 0; i < outside.size(); ++i)
        if (om->in_domain(outside[i]))
            throw ConfigError("/outside_points/" + std::to_string(i), "point lies in the OM domain E");
    const Vector radii = radii_field(f, "radii");
    const WeightedSeqSpace norm = norm_field(f, dim);
    const BallSettings ball = ball_settings(f);
    return [=](Context& ctx) {
        const MPropertyReport rep = m_property_probe(mu, *om, outside, radii, norm, ball.at(ctx));
        json entries = json::array();
        CsvWriter w = ctx.csv("m_property.csv", {"point_index", "radius", "ratio_to_anchor", "stderr"});
        for (std::size_t i = 0; i < rep.entries.size(); ++i) {
            const MPropertyEntry& e = rep.entries[i];
            for (int k = 0; k < e.ratio.radii.size(); ++k)
                w.row({double(i), e.ratio.radii[k], e.ratio.ratios[k], e.ratio.stderr[k]});
            entries.push_back({{"point", to_json(e.point)},
                               {"min_ratio", e.trend.min_ratio},
                               {"last_ratio", e.trend.last_ratio},
                               {"decreasing_fraction", e.trend.decreasing_fraction},
                               {"loglog_slope", e.trend.loglog_slope},
                               {"decays", e.trend.decays}});
        }
        return json{{"anchor", to_json(rep.anchor)}, {"entries", entries}, {"verdict", to_string(rep.verdict)}};
    };
}

Plan plan_gamma_check(const Fields& f) {
    Fields fam(f.raw("family"), "/family");
    const std::string type = fam.string("type");
    const int n_points = static_cast<int>(f.integer("points", 100));
    const std::vector<double> ts = f.has("t") ? f.numbers("t") : std::vector<double>{0.5, 2.0};
    const int samples = static_cast<int>(f.integer("samples", 10000));
    const int paths = static_cast<int>(f.integer("paths", 64));
    if (n_points < 1 || samples < 1 || paths < 0) throw ConfigError("/", "points and samples must be positive");

    std::vector<double> n;
    std::function<FunctionalSequence()> make;
    std::function<std::vector<Vector>(const Vector&)> recover;
    std::function<CompactBound()> bound;
    std::string bound_note;
    int dim = 0;
    if (type == "gaussian") {
        const Vector mean = fam.vector("mean");
        dim = static_cast<int>(mean.size());
        const Vector ev = fam.vector("eigenvalues");
        if (ev.size() != dim) throw ConfigError("/family/eigenvalues", "length must match the mean");
        const Vector dv = fam.has("perturbation_eigenvalues") ? fam.vector("perturbation_eigenvalues") : ev;
        if (dv.size() != dim || (dv.array() < 0.0).any())
            throw ConfigError("/family/perturbation_eigenvalues", "need dim non-negative values");
        Vector shift = Vector::Zero(dim);
        shift[0] = 1.0;
        if (fam.has("mean_shift")) shift = point(fam, "mean_shift", dim);
        std::optional<Matrix> basis;
        if (fam.has("basis")) basis = fam.matrix("basis");
        n = index_list(f, "n", [] {
            std::vector<double> v;
            for (int i = 1; i <= 64; ++i) v.push_back(i);
            return v;
        }());
        auto op = [basis](const Vector& e) {
            return basis ? SpectralOperator::from_eigenpairs(e, *basis) : SpectralOperator::diagonal(e);
        };
        const GaussianMeasure limit(mean, op(ev));
        std::vector<GaussianMeasure> members;
        for (double v : n) members.emplace_back(mean + shift / v, op(ev + dv / v));
        make = [=] { return gaussian_om_sequence(n, members, limit); };
        recover = [=](const Vector& u) { return gaussian_recovery_sequence(members, limit, u); };
        bound = [=] { return gaussian_compact_bound(members); };
        bound_note = "|A_n^dagger (u - m_n)| <= sqrt(2t)";
    } else if (type == "besov1") {
        const double s = fam.number("s");
        const int d = static_cast<int>(fam.integer("d"));
        const double eta = fam.number("eta");
        dim = static_cast<int>(fam.integer("dim"));
        const std::string sign = fam.string("sign", "alternating");
        if (sign != "alternating" && sign != "plus" && sign != "minus")
            throw ConfigError("/family/sign", "expected alternating, plus or minus");
        n = index_list(f, "n", [] {
            std::vector<double> v;
            for (int i = 2; i <= 64; ++i) v.push_back(i);
            return v;
        }(), 2);
        const BesovMeasure limit(s, d, eta, dim);
        std::vector<BesovMeasure> members;
        for (double v : n) {
            const double sg = sign == "plus" ? 1.0 : sign == "minus" ? -1.0 : (std::lround(v) % 2 == 0 ? 1.0 : -1.0);
            members.emplace_back(s + sg / v, d, eta, dim);
        }
        const double sbar = s - d * eta / 2.0;
        for (std::size_t i = 0; i < members.size(); ++i)
            if (members[i].s < sbar) throw ConfigError("/n", "member smoothness falls below sbar = s - d eta / 2");
        make = [=] { return besov_om_sequence(n, members, limit); };
        recover = [=](const Vector& u) { return besov_recovery_sequence(members, limit, u); };
        bound = [=] { return besov_compact_bound(sbar, d); };
        bound_note = "|u_k| <= k^{1/2 - sbar/d} t";
    } else {
        throw ConfigError("/family/type", "expected gaussian or besov1");
    }
    fam.finish();

    return [=](Context& ctx) {
        const FunctionalSequence seq = make();
        Rng rng = make_rng(ctx.seed, 0x6a11);
        std::normal_distribution<double> normal;
        std::vector<Vector> pts;
        for (int i = 0; i < n_points; ++i) {
            Vector u = seq.limit.anchor;
            for (int k = 0; k < dim; ++k) u[k] += normal(rng);
            pts.push_back(u);
        }
        CsvWriter summary = ctx.csv("summary.csv", {"probe", "verdict", "margin", "witnesses"});

        std::vector<RecoveryReport> rec(pts.size());
        parallel_for(pts.size(), [&](std::size_t i) { rec[i] = recovery_check(seq, pts[i], recover(pts[i])); },
                     ctx.threads);
        double worst_gap = -kInf, worst_pointwise = -kInf;
        int rec_fail = 0;
        for (const RecoveryReport& r : rec) {
            worst_gap = std::max(worst_gap, r.gap);
            worst_pointwise = std::max(worst_pointwise, r.worst_pointwise_gap);
            if (r.verdict != Verdict::pass) ++rec_fail;
        }
        summary.row_text({"recovery", rec_fail == 0 ? "pass" : "fail", format_double(worst_pointwise),
                          std::to_string(rec_fail)});

        json liminf = json::array();
        PathOptions po;
        po.paths = paths;
        po.seed = ctx.seed;
        for (int i = 0; i < std::min<int>(4, static_cast<int>(pts.size())); ++i) {
            const LiminfReport lr = gamma_liminf_probe(seq, pts[i], po);
            summary.row_text({"liminf#" + std::to_string(i), to_string(lr.verdict), format_double(lr.worst_margin),
                              std::to_string(lr.violations.size())});
            liminf.push_back({{"point", to_json(pts[i])},
                              {"paths", lr.paths_tested},
                              {"worst_margin", lr.worst_margin},
                              {"violations", lr.violations.size()},
                              {"verdict", to_string(lr.verdict)}});
        }

        json equi = json::array();
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const EquicoercivityReport er = equicoercivity_probe(seq, ts[j], samples, bound(), derive_seed(ctx.seed, j));
            summary.row_text({"equicoercivity t=" + format_double(ts[j]), to_string(er.verdict), "",
                              std::to_string(er.violations)});
            equi.push_back({{"t", ts[j]},
                            {"samples", er.samples},
                            {"violations", er.violations},
                            {"vacuous", er.vacuous},
                            {"bound", bound_note},
                            {"verdict", to_string(er.verdict)}});
        }

        std::vector<Vector> minimizers;
        for (const OmFunctional& m : seq.members) minimizers.push_back(m.anchor);
        const ModeConvergenceReport mc = mode_convergence_check(seq, minimizers, {seq.limit.anchor});
        double dist = 0.0;
        for (double d : mc.distance_to_limit_argmin) dist = std::max(dist, d);
        summary.row_text({"mode_convergence", to_string(mc.verdict), format_double(dist),
                          std::to_string(mc.cluster_points.size())});

        return json{{"family", type},
                    {"n", n},
                    {"recovery", {{"points", pts.size()},
                                  {"worst_limsup_gap", worst_gap},
                                  {"worst_pointwise_gap", worst_pointwise},
                                  {"failures", rec_fail}}},
                    {"liminf", liminf},
                    {"equicoercivity", equi},
                    {"mode_convergence", {{"clusters", mc.cluster_points.size()},
                                          {"max_distance_to_limit_argmin", dist},
                                          {"min_value_gap", mc.min_value_gap},
                                          {"diagnostic", mc.diagnostic},
                                          {"verdict", to_string(mc.verdict)}}}};
    };
}

Plan plan_map_solve(const Fields& f) {
    const InverseProblem p = problem_from_json(f.raw("problem"), "/problem");
    const SolverOptions so = solver_field(f);
    return [=](Context& ctx) {
        const MapSolution s = map_solve(p, so);
        CsvWriter w = ctx.csv("map.csv", {"coordinate", "value"});
        for (int k = 0; k < s.point.size(); ++k) w.row({double(k + 1), s.point[k]});
        return map_json(s);
    };
}

std::vector<std::string> map_header(int k_dim, const std::vector<std::string>& tail) {
    std::vector<std::string> h{"n"};
    for (int k = 1; k <= k_dim; ++k) h.push_back("map_" + std::to_string(k));
    h.insert(h.end(), tail.begin(), tail.end());
    return h;
}

Plan plan_perturbation(const Fields& f) {
    const InverseProblem p = problem_from_json(f.raw("problem"), "/problem");
    const SolverOptions so = solver_field(f);
    Fields pf(f.raw("perturbation"), "/perturbation");
    PerturbationKind kind;
    try {
        kind = perturbation_kind_from_string(pf.string("kind"));
    } catch (const InputError& e) {
        throw ConfigError("/perturbation/kind", e.what());
    }
    const int k_dim = p.obs.K();
    PerturbationSchedule sched;
    std::vector<double> n;
    if (kind == PerturbationKind::data) {
        Vector dir = Vector::Zero(p.obs.J());
        dir[0] = 1.0;
        if (pf.has("direction")) dir = point(pf, "direction", p.obs.J());
        const double mag = pf.number("magnitude", 1.0);
        const Vector y = p.obs.data;
        sched.data = [y, dir, mag](double v) { return Vector(y + mag * dir / v); };
        n = index_list(pf, "n", {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000});
    } else if (kind == PerturbationKind::potential_projection) {
        std::vector<double> dflt;
        for (int i = 1; i <= k_dim; ++i) dflt.push_back(i);
        n = index_list(pf, "n", dflt);
    } else {
        n = index_list(pf, "n", {2, 3, 4, 5, 10, 20, 50, 100, 200, 500, 1000}, 1);
        if (const auto* g = std::get_if<GaussianMeasure>(&p.prior)) {
            const Vector ev = g->covariance.eigenvalues();
            const Vector dv = pf.has("covariance_shift") ? point(pf, "covariance_shift", k_dim) : ev;
            Vector shift = Vector::Zero(k_dim);
            if (pf.has("mean_shift")) shift = point(pf, "mean_shift", k_dim);
            const GaussianMeasure base = *g;
            sched.prior = [base, ev, dv, shift](double v) -> Prior {
                const Vector e = ev + dv / v;
                SpectralOperator c = base.covariance.has_basis()
                                         ? SpectralOperator::from_eigenpairs(e, base.covariance.basis())
                                         : SpectralOperator::diagonal(e);
                return GaussianMeasure(base.mean + shift / v, c);
            };
        } else {
            const BesovMeasure b = std::get<BesovMeasure>(p.prior);
            const std::string sign = pf.string("sign", "alternating");
            if (sign != "alternating" && sign != "plus" && sign != "minus")
                throw ConfigError("/perturbation/sign", "expected alternating, plus or minus");
            sched.prior = [b, sign](double v) -> Prior {
                const double sg = sign == "plus" ? 1.0 : sign == "minus" ? -1.0 : (std::lround(v) % 2 == 0 ? 1.0 : -1.0);
                return BesovMeasure(b.s + sg / v, b.d, b.eta, b.truncation);
            };
        }
    }
    pf.finish();
    return [=](Context& ctx) {
        ExperimentOptions eo;
        eo.solver = so;
        eo.seed = ctx.seed;
        eo.threads = ctx.threads;
        const PerturbationReport rep = perturbation_experiment(kind, p, n, sched, eo);
        CsvWriter w = ctx.csv("perturbation.csv", map_header(k_dim, {"objective", "residual", "distance_to_limit"}));
        json rows = json::array();
        for (const ExperimentRow& r : rep.rows) {
            std::vector<double> vals{r.n};
            for (int k = 0; k < r.map.size(); ++k) vals.push_back(r.map[k]);
            vals.insert(vals.end(), {r.objective, r.residual, r.distance_to_limit});
            w.row(vals);
        }
        json j{{"perturbation", to_string(kind)},
               {"limit_map", to_json(rep.limit_map)},
               {"final_distance", rep.final_distance},
               {"burn_in_index", rep.burn_in},
               {"monotone_after_burn_in", rep.monotone_after_burn_in},
               {"mode_convergence", to_string(rep.modes.verdict)},
               {"notes", rep.notes}};
        if (rep.potential_continuity) j["potential_continuity"] = to_string(rep.potential_continuity->verdict);
        if (rep.prior_equicoercivity) j["prior_equicoercivity_violations"] = rep.prior_equicoercivity->violations;
        if (!rep.prior_recovery.empty()) {
            double gap = -kInf;
            for (const RecoveryReport& r : rep.prior_recovery) gap = std::max(gap, r.gap);
            j["prior_recovery_worst_gap"] = gap;
        }
        return j;
    };
}

Plan plan_small_noise(const Fields& f) {
    const InverseProblem p = problem_from_json(f.raw("problem"), "/problem");
    const SolverOptions so = solver_field(f);
    const std::vector<double> n = index_list(f, "n", {1, 10, 100, 1000, 10000});
    std::vector<Vector> table;
    if (f.has("table_points")) table = points(f, "table_points", p.obs.K());
    return [=](Context& ctx) {
        ExperimentOptions eo;
        eo.solver = so;
        eo.seed = ctx.seed;
        eo.threads = ctx.threads;
        const SmallNoiseReport rep = small_noise_experiment(p, n, table, eo);
        const int k_dim = p.obs.K();
        {
            CsvWriter w = ctx.csv("small_noise.csv", map_header(k_dim, {"distance_to_limit", "potential", "prior_om"}));
            for (const SmallNoiseRow& r : rep.rows) {
                std::vector<double> vals{r.n};
                for (int k = 0; k < r.map.size(); ++k) vals.push_back(r.map[k]);
                vals.insert(vals.end(), {r.distance_to_limit, r.potential, r.prior_om});
                w.row(vals);
            }
        }
        {
            std::vector<std::string> h{"point_index", "potential", "prior_om"};
            for (double v : n) h.push_back("value_n=" + format_double(v));
            h.push_back("pointwise_limit");
            CsvWriter w = ctx.csv("pointwise_limit.csv", h);
            for (std::size_t i = 0; i < rep.pointwise.size(); ++i) {
                const PointwiseLimitRow& r = rep.pointwise[i];
                std::vector<double> vals{double(i), r.potential, r.prior_om};
                for (int k = 0; k < r.values.size(); ++k) vals.push_back(r.values[k]);
                vals.push_back(r.limit_value);
                w.row(vals);
            }
        }
        return json{{"limit_point", to_json(rep.limit.point)},
                    {"limit_value", rep.limit.value},
                    {"limit_unique", rep.limit.unique},
                    {"final_distance", rep.rows.back().distance_to_limit},
                    {"decay_exponent", rep.decay_exponent},
                    {"note", rep.note}};
    };
}

Plan plan_counterexample(const Fields& f) {
    const std::string name = f.string("name");
    const json empty = json::object();
    Fields p(f.has("params") ? f.raw("params") : empty, "/params");
    Plan plan;
    if (name == "gaussian_pair") {
        const std::vector<double> sig = p.has("sigma") ? p.numbers("sigma") : std::vector<double>{0.1, 0.5, 2.0, 10.0};
        for (double s : sig)
            if (!(s > 0.0)) throw ConfigError("/params/sigma", "sigma must be positive");
        plan = [=](Context& ctx) {
            CsvWriter w = ctx.csv("kl.csv", {"sigma", "kl_closed_form", "kl_quadrature"});
            json rows = json::array();
            for (double s : sig) {
                const double a = kl_gaussians(s), b = kl_gaussians_quadrature(s);
                w.row({s, a, b});
                rows.push_back({{"sigma", s}, {"closed_form", a}, {"quadrature", b}});
            }
            return json{{"rows", rows}};
        };
    } else if (name == "mixture") {
        const double r = p.number("r", 5.0);
        const std::vector<double> ts = p.has("t") ? p.numbers("t") : std::vector<double>{-0.1, -0.05, 0.05, 0.1};
        for (double t : ts)
            if (!(std::abs(t) < 1.0)) throw ConfigError("/params/t", "|t| must be below 1");
        plan = [=](Context& ctx) {
            CsvWriter w = ctx.csv("mixture.csv", {"t", "mode", "local_maximisers", "kl_t_vs_minus_t"});
            json rows = json::array();
            for (double t : ts) {
                const MixtureModes m = mixture_modes(t, r);
                const double kl = kl_mixture(t, r);
                w.row({t, m.mode, double(m.maximisers.size()), kl});
                rows.push_back({{"t", t}, {"mode", m.mode}, {"maximisers", m.maximisers}, {"kl", kl}});
            }
            return json{{"r", r}, {"rows", rows}};
        };
    } else if (name == "spike") {
        const std::vector<double> ns = p.has("n") ? p.numbers("n") : std::vector<double>{10, 20, 50, 100};
        for (double v : ns)
            if (!(v >= 1.0)) throw ConfigError("/params/n", "n must be at least 1");
        plan = [=](Context& ctx) {
            CsvWriter w = ctx.csv("spike.csv", {"n", "mode", "n_times_mode", "kl_limit_vs_n", "kl_n_vs_limit"});
            json rows = json::array();
            for (double v : ns) {
                const double m = spike_mode(v), a = kl_spike(v), b = kl_spike_reverse(v);
                w.row({v, m, v * m, a, b});
                rows.push_back({{"n", v}, {"mode", m}, {"kl_limit_vs_n", a}, {"kl_n_vs_limit", b}});
            }
            return json{{"limit_mode", spike_mode(kInf)}, {"rows", rows}};
        };
    } else if (name == "liminf_only") {
        const int depth = static_cast<int>(p.integer("depth", 40));
        const int n_max = static_cast<int>(p.integer("n_max", 30));
        if (n_max < 1 || n_max > depth - 2) throw ConfigError("/params/n_max", "need 1 <= n_max <= depth - 2");
        plan = [=](Context& ctx) {
            const LiminfOnlyMeasure mu(depth);
            const LiminfOnlyRatios r = liminf_only_ratios(mu, n_max);
            CsvWriter w = ctx.csv("liminf_only.csv", {"n", "epsilon_ratio", "delta_ratio", "log2_delta_ratio"});
            for (std::size_t i = 0; i < r.n.size(); ++i)
                w.row({double(r.n[i]), r.epsilon_ratios[i].convert_to<double>(), r.delta_ratios[i].convert_to<double>(),
                       r.log2_delta_ratios[i]});
            return json{{"epsilon_all_two", r.epsilon_all_two},
                        {"delta_all_match", r.delta_all_match},
                        {"intervals_disjoint", mu.intervals_disjoint()},
                        {"telescoping_exact", mu.left_telescoped() == mu.a(1)}};
        };
    } else if (name == "om_not_strong") {
        const int levels = static_cast<int>(p.integer("levels", 30));
        std::vector<int> ks{2, 3, 5}, ns{2, 5, 10, 20};
        if (p.has("k")) {
            ks.clear();
            for (double v : p.numbers("k")) ks.push_back(static_cast<int>(v));
        }
        if (p.has("n")) {
            ns.clear();
            for (double v : p.numbers("n")) ns.push_back(static_cast<int>(v));
        }
        for (int k : ks)
            if (k < 2 || k > levels) throw ConfigError("/params/k", "k must lie in [2, levels]");
        plan = [=](Context& ctx) {
            const OmNotStrongMeasure mu(levels);
            const OmNotStrongSuite s = om_not_strong_suite(mu, ks, ns);
            {
                CsvWriter w = ctx.csv("ratio_limits.csv", {"k", "ratio_limit", "stderr", "k_squared", "om_value"});
                for (std::size_t i = 0; i < s.k.size(); ++i)
                    w.row({double(s.k[i]), s.ratio_to_k[i].limit.limit, s.ratio_to_k[i].limit.stderr,
                           double(s.k[i]) * s.k[i], s.om_values[i]});
            }
            {
                CsvWriter w = ctx.csv("strong_criterion.csv", {"n", "r_n", "ratio_at_r_n", "bound"});
                for (std::size_t i = 0; i < s.n.size(); ++i)
                    w.row({double(s.n[i]), 0.5 / std::pow(s.n[i], 4), s.strong_ratio_at_rn[i], s.bound_at_rn[i]});
            }
            return json{{"off_integer_points", s.off_integer_points}, {"off_integer_decay_slopes", s.off_integer_decay_slopes}};
        };
    } else if (name == "crosses") {
        const std::vector<double> rs = p.has("r") ? p.numbers("r") : std::vector<double>{0.1, 0.2, 0.4};
        for (double r : rs)
            if (!(r > 0.0 && r <= 0.5)) throw ConfigError("/params/r", "radii must lie in (0, 0.5]");
        plan = [=](Context& ctx) {
            CsvWriter w = ctx.csv("crosses.csv", {"r", "l1_mass_minus_e1", "l1_mass_e1", "linf_mass_minus_e1", "linf_mass_e1"});
            for (double r : rs)
                w.row({r, crosses_ball_mass(CrossNorm::one, -1, r), crosses_ball_mass(CrossNorm::one, 1, r),
                       crosses_ball_mass(CrossNorm::sup, -1, r), crosses_ball_mass(CrossNorm::sup, 1, r)});
            return json{{"om_difference_l1", crosses_om_difference(CrossNorm::one)},
                        {"om_difference_linf", crosses_om_difference(CrossNorm::sup)},
                        {"mode_l1", crosses_mode(CrossNorm::one) > 0 ? "e1" : "-e1"},
                        {"mode_linf", crosses_mode(CrossNorm::sup) > 0 ? "e1" : "-e1"}};
        };
    } else {
        throw ConfigError("/name", "unknown counterexample '" + name + "'");
    }
    p.finish();
    return plan;
}

struct Parsed {
    std::string kind;
    std::uint64_t seed;
    fs::path out;
    Plan plan;
};

Parsed parse_config(const json& cfg) {
    Fields f(cfg, "");
    Parsed p;
    p.kind = f.string("kind");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end())
        throw ConfigError("/kind", "unknown kind '" + p.kind + "'");
    const long long seed = f.integer("seed", 0);
    if (seed < 0) throw ConfigError("/seed", "seed must be non-negative");
    p.seed = static_cast<std::uint64_t>(seed);
    p.out = f.string("output", "ommap_out");
    static const std::map<std::string, Plan (*)(const Fields&)> builders{
        {"ball_ratio", plan_ball_ratio},   {"classify_mode", plan_classify_mode}, {"m_property", plan_m_property},
        {"gamma_check", plan_gamma_check}, {"map_solve", plan_map_solve},         {"perturbation", plan_perturbation},
        {"small_noise", plan_small_noise}, {"counterexample", plan_counterexample}};
    p.plan = builders.at(p.kind)(f);
    f.finish();
    return p;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void validate_config(const json& cfg) { parse_config(cfg); }

RunSummary run_config(const json& cfg, const RunOptions& opts) {
    Parsed p = parse_config(cfg);
    Context ctx;
    ctx.seed = opts.seed.value_or(p.seed);
    ctx.out = opts.out.value_or(p.out);
    ctx.threads = resolve_threads(opts.threads);
    fs::create_directories(ctx.out);
    json results = p.plan(ctx);
    RunSummary s;
    s.kind = p.kind;
    s.out_dir = ctx.out;
    s.results = json{{"kind", p.kind}, {"seed", ctx.seed}, {"config", cfg}, {"results", results}};
    ctx.files.push_back("results.json");
    write_json(ctx.out / "results.json", s.results);
    s.files = ctx.files;
    return s;
}

// ---------------------------------------------------------------- figures

std::vector<std::string> reproduce_figure(const std::string& id, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> files;
    auto grid = [](double lo, double hi, int n) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
        return x;
    };
    if (id == "fig1a") {
        const std::vector<double> ts{-0.1, 0.0, 0.1};
        std::vector<std::string> h{"x"};
        for (double t : ts) h.push_back("density_t=" + format_double(t));
        {
            CsvWriter w(out_dir / "fig1a.csv", h);
            for (double x : grid(-5.0, 5.0, 2001)) {
                std::vector<double> row{x};
                for (double t : ts) row.push_back(MixtureFamily(t, 2.0).density(x));
                w.row(row);
            }
        }
        CsvWriter m(out_dir / "fig1a_modes.csv", {"t", "mode"});
        for (double t : ts) m.row({t, mixture_modes(t, 2.0).mode});
        files = {"fig1a.csv", "fig1a_modes.csv"};
    } else if (id == "fig1b") {
        const std::vector<double> ns{1, 2, 10, 100, kInf};
        std::vector<std::string> h{"x"};
        for (double n : ns) h.push_back("density_n=" + format_double(n));
        {
            CsvWriter w(out_dir / "fig1b.csv", h);
            for (double x : grid(-1.0, 4.0, 2001)) {
                std::vector<double> row{x};
                for (double n : ns) row.push_back(SpikeFamily(n).density(x));
                w.row(row);
            }
        }
        CsvWriter m(out_dir / "fig1b_modes.csv", {"n", "mode"});
        for (double n : ns) m.row({n, spike_mode(n)});
        files = {"fig1b.csv", "fig1b_modes.csv"};
    } else if (id == "figB1") {
        const LiminfOnlyMeasure mu(40);
        const Density1D d = mu.density1d();
        const double total = mu.total_mass().convert_to<double>();
        {
            CsvWriter w(out_dir / "figB1.csv", {"x", "unnormalised_density"});
            for (double x : grid(-1.05, 1.05, 4201)) w.row({x, total * d(x)});
        }
        CsvWriter m(out_dir / "figB1_markers.csv", {"n", "left_marker", "right_marker"});
        for (int n = 1; n <= 10; ++n) {
            const double a = mu.alpha(n).convert_to<double>();
            m.row({double(n), -1.0 + a, 1.0 - a});
        }
        files = {"figB1.csv", "figB1_markers.csv"};
    } else if (id == "figB3") {
        const OmNotStrongMeasure mu(30);
        {
            CsvWriter w(out_dir / "figB3.csv", {"x", "density"});
            const int n = 5000;
            for (int i = 0; i < n; ++i) {
                const double x = 0.5 + 5.0 * (i + 0.5) / n;
                w.row({x, mu.density(x)});
            }
        }
        CsvWriter m(out_dir / "figB3_markers.csv", {"k", "spike", "plateau_lo", "plateau_hi", "plateau_height"});
        for (int k = 1; k <= 5; ++k) {
            const double w = 0.5 / std::pow(k, 4);
            m.row({double(k), double(k), k - w, k + w, OmNotStrongMeasure::normalisation() * k * k});
        }
        files = {"figB3.csv", "figB3_markers.csv"};
    } else {
        throw InputError("unknown figure id '" + id + "' (expected fig1a, fig1b, figB1 or figB3)");
    }
    return files;
}

}  // namespace ommap
