#include "ommap/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "ommap/errors.hpp"
#include "ommap/parallel.hpp"
#include "ommap/rng.hpp"

namespace ommap {

std::vector<int> FunctionalSequence::trailing_window() const {
    std::vector<int> idx;
    if (n.empty()) return idx;
    const double top = n.back();
    for (int i = 0; i < size(); ++i)
        if (n[i] >= 0.5 * top) idx.push_back(i);
    return idx;
}

FunctionalSequence make_sequence(std::vector<double> n, std::vector<OmFunctional> members, OmFunctional limit) {
    if (n.size() != members.size() || n.empty()) throw InputError("make_sequence: need one index per member");
    for (std::size_t i = 1; i < n.size(); ++i)
        if (!(n[i] > n[i - 1])) throw InputError("make_sequence: indices must increase");
    for (const OmFunctional& f : members)
        if (f.dim != limit.dim) throw InputError("make_sequence: members must share the limit's dimension");
    return FunctionalSequence{std::move(n), std::move(members), std::move(limit)};
}

FunctionalSequence gaussian_om_sequence(const std::vector<double>& n, const std::vector<GaussianMeasure>& members,
                                        const GaussianMeasure& limit) {
    std::vector<OmFunctional> f;
    for (const GaussianMeasure& mu : members) f.push_back(gaussian_om(mu));
    return make_sequence(n, std::move(f), gaussian_om(limit));
}

FunctionalSequence besov_om_sequence(const std::vector<double>& n, const std::vector<BesovMeasure>& members,
                                     const BesovMeasure& limit) {
    std::vector<OmFunctional> f;
    for (const BesovMeasure& mu : members) f.push_back(besov_om(mu));
    return make_sequence(n, std::move(f), besov_om(limit));
}

namespace {

Vector random_unit(Rng& rng, int dim) {
    std::normal_distribution<double> normal;
    Vector d(dim);
    double nrm = 0.0;
    while (nrm == 0.0) {
        for (int k = 0; k < dim; ++k) d[k] = normal(rng);
        nrm = d.norm();
    }
    return d / nrm;
}

struct Path {
    std::string label;
    std::vector<Vector> points;
    std::function<Vector(double)> at;  // continuation to real n, when the path has a formula
};

}  // namespace

// ---------------------------------------------------------------- liminf

LiminfReport gamma_liminf_probe(const FunctionalSequence& seq, const Vector& x, const PathOptions& opts,
                                const std::vector<std::vector<Vector>>& extra_paths) {
    if (x.size() != seq.dim()) throw InputError("gamma_liminf_probe: point dimension mismatch");
    const int nm = seq.size();
    const int dim = seq.dim();
    std::vector<Path> paths;
    paths.push_back({"constant", std::vector<Vector>(nm, x)});
    for (int p = 0; p < opts.paths; ++p) {
        const double alpha = opts.alphas.empty() ? 1.0 : opts.alphas[p % opts.alphas.size()];
        Rng rng = make_rng(opts.seed, 0x11f, p);
        const Vector d = random_unit(rng, dim);
        Path path{"random#" + std::to_string(p) + " alpha=" + std::to_string(alpha), {},
                  [x, d, alpha, s = opts.scale](double n) -> Vector { return x + s * std::pow(n, -alpha) * d; }};
        for (int i = 0; i < nm; ++i) path.points.push_back(path.at(seq.n[i]));
        paths.push_back(std::move(path));
    }
    if (opts.coordinate_paths)
        for (int k = 0; k < dim; ++k)
            for (double sign : {1.0, -1.0}) {
                Path path{"coordinate " + std::string(sign > 0 ? "+" : "-") + "e" + std::to_string(k + 1), {},
                          [x, k, step = sign * opts.scale](double n) -> Vector {
                              Vector p = x;
                              p[k] += step / n;
                              return p;
                          }};
                for (int i = 0; i < nm; ++i) path.points.push_back(path.at(seq.n[i]));
                paths.push_back(std::move(path));
            }
    for (std::size_t e = 0; e < extra_paths.size(); ++e) {
        if (static_cast<int>(extra_paths[e].size()) != nm)
            throw InputError("gamma_liminf_probe: extra paths need one point per member");
        paths.push_back({"supplied#" + std::to_string(e), extra_paths[e], {}});
    }

    const double fx = seq.limit.eval(x);
    const std::vector<int> window = seq.trailing_window();
    std::vector<int> early;
    const double n_max = seq.n.back();
    for (int i = 0; i < nm; ++i)
        if (seq.n[i] >= n_max / 4.0 && seq.n[i] < n_max / 2.0) early.push_back(i);
    // A deficit below -tol is kept only when it does not shrink from the early to the late range.
    const auto persistent = [&](double late, double early) {
        return late < -opts.tol && (!(early < -opts.tol) || late / early > opts.persist_ratio);
    };
    std::vector<double> margin(paths.size());
    std::vector<double> wmin(paths.size());
    std::vector<char> bad(paths.size(), 0);
    parallel_for(paths.size(), [&](std::size_t p) {
        const Path& path = paths[p];
        double lo = kInf;
        for (int i : window) lo = std::min(lo, seq.members[i].eval(path.points[i]));
        wmin[p] = lo;
        if (!std::isfinite(fx)) {
            const double first = seq.members[window.front()].eval(path.points[window.front()]);
            const double last = seq.members[window.back()].eval(path.points[window.back()]);
            margin[p] = std::isfinite(lo) ? last - first : kInf;
            bad[p] = std::isfinite(lo) && window.size() > 1 && !(last > first);
            return;
        }
        margin[p] = lo - fx;
        if (!(margin[p] < -opts.tol)) return;
        // F_n(x_n) - F(x) = [F_n(x_n) - F(x_n)] + [F(x_n) - F(x)]
        double gap_late = kInf, gap_early = kInf, lim_late = kInf, lim_early = kInf;
        bool split = true;
        for (int i : window) {
            if (seq.n[i] < 0.75 * n_max) continue;
            const double fl = seq.limit.eval(path.points[i]);
            split = split && std::isfinite(fl);
            gap_late = std::min(gap_late, seq.members[i].eval(path.points[i]) - fl);
            lim_late = std::min(lim_late, fl - fx);
        }
        for (int i : early) {
            const double fl = seq.limit.eval(path.points[i]);
            split = split && std::isfinite(fl);
            gap_early = std::min(gap_early, seq.members[i].eval(path.points[i]) - fl);
            lim_early = std::min(lim_early, fl - fx);
        }
        if (!split || early.empty()) {
            bad[p] = early.empty() || persistent(margin[p], std::min(gap_early, kInf) + std::min(lim_early, kInf));
            return;
        }
        if (path.at) {
            // the limit term needs no member, so follow the path much further
            lim_early = seq.limit.eval(path.at(n_max * 1e4)) - fx;
            lim_late = seq.limit.eval(path.at(n_max * 1e8)) - fx;
        }
        bad[p] = persistent(gap_late, gap_early) || persistent(lim_late, lim_early);
    });

    LiminfReport rep;
    rep.paths_tested = static_cast<int>(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
        rep.worst_margin = std::min(rep.worst_margin, margin[p]);
        if (bad[p]) rep.violations.push_back({x, paths[p].label, fx, wmin[p], margin[p], paths[p].points});
    }
    rep.verdict = rep.violations.empty() ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- recovery

std::vector<Vector> gaussian_recovery_sequence(const std::vector<GaussianMeasure>& members,
                                               const GaussianMeasure& limit, const Vector& u) {
    if (u.size() != limit.dim()) throw InputError("gaussian_recovery_sequence: dimension mismatch");
    const Vector h = u - limit.mean;
    if (!in_sqrt_range(limit.covariance, h)) return std::vector<Vector>(members.size(), u);
    const Vector v = sqrt_pinv_apply(limit.covariance, h);
    std::vector<Vector> out;
    out.reserve(members.size());
    for (const GaussianMeasure& mu : members) {
        if (mu.dim() != limit.dim()) throw InputError("gaussian_recovery_sequence: member dimension mismatch");
        out.push_back(mu.mean + mu.covariance.sqrt_apply(v));
    }
    return out;
}

std::vector<Vector> besov_recovery_sequence(const std::vector<BesovMeasure>& members, const BesovMeasure& limit,
                                            const Vector& u) {
    if (u.size() != limit.dim()) throw InputError("besov_recovery_sequence: dimension mismatch");
    std::vector<Vector> out;
    out.reserve(members.size());
    for (const BesovMeasure& mu : members) {
        if (mu.dim() != limit.dim()) throw InputError("besov_recovery_sequence: member dimension mismatch");
        out.push_back((mu.gamma.array() * u.array() / limit.gamma.array()).matrix());
    }
    return out;
}

RecoveryReport recovery_check(const FunctionalSequence& seq, const Vector& x, const std::vector<Vector>& sequence,
                              double tol, double persist_ratio) {
    if (static_cast<int>(sequence.size()) != seq.size())
        throw InputError("recovery_check: need one point per member");
    RecoveryReport rep;
    rep.x = x;
    rep.limit_value = seq.limit.eval(x);
    rep.member_values = Vector(seq.size());
    for (int i = 0; i < seq.size(); ++i) rep.member_values[i] = seq.members[i].eval(sequence[i]);
    rep.limsup_estimate = -kInf;
    for (int i : seq.trailing_window()) rep.limsup_estimate = std::max(rep.limsup_estimate, rep.member_values[i]);
    if (std::isfinite(rep.limit_value)) {
        rep.gap = rep.limsup_estimate - rep.limit_value;
        rep.worst_pointwise_gap = rep.member_values.maxCoeff() - rep.limit_value;
    } else {
        rep.gap = rep.worst_pointwise_gap = -kInf;
    }
    rep.final_distance = (sequence.back() - x).norm();
    const double allowed = tol * std::max(1.0, std::abs(rep.limit_value));
    bool bad = std::isfinite(rep.limit_value) && rep.gap > allowed;
    if (bad) {
        const double n_max = seq.n.back();
        double early = -kInf;
        for (int i = 0; i < seq.size(); ++i)
            if (seq.n[i] >= n_max / 4.0 && seq.n[i] < n_max / 2.0) early = std::max(early, rep.member_values[i]);
        const double early_gap = early - rep.limit_value;
        bad = !(early_gap > allowed) || rep.gap / early_gap > persist_ratio;
    }
    rep.verdict = bad ? Verdict::fail : Verdict::pass;
    return rep;
}

// ---------------------------------------------------------------- equicoercivity

CompactBound gaussian_compact_bound(const std::vector<GaussianMeasure>& members, double rel_tol) {
    return [members, rel_tol](int i, const Vector& u, double t) {
        if (t < 0.0) return false;
        const GaussianMeasure& mu = members.at(i);
        const Vector h = u - mu.mean;
        if (!in_sqrt_range(mu.covariance, h)) return false;
        return sqrt_pinv_apply(mu.covariance, h).norm() <= std::sqrt(2.0 * t) * (1.0 + rel_tol);
    };
}

CompactBound besov_compact_bound(double sbar, int d, double rel_tol) {
    return [sbar, d, rel_tol](int, const Vector& u, double t) {
        for (int k = 0; k < u.size(); ++k) {
            const double gbar = std::pow(static_cast<double>(k + 1), 0.5 - sbar / d);
            if (std::abs(u[k]) > gbar * t * (1.0 + rel_tol)) return false;
        }
        return true;
    };
}

EquicoercivityReport equicoercivity_probe(const FunctionalSequence& seq, double t, int samples,
                                          const CompactBound& bound, std::uint64_t seed) {
    EquicoercivityReport rep;
    rep.t = t;
    const int nm = seq.size();
    const int dim = seq.dim();
    bool any_nonempty = false;
    for (int i = 0; i < nm; ++i)
        if (seq.members[i].eval(seq.members[i].anchor) <= t) any_nonempty = true;
    if (!any_nonempty) {
        rep.vacuous = true;
        return rep;
    }

    std::vector<Vector> pts(samples);
    std::vector<char> ok(samples, 1);
    std::vector<char> used(samples, 0);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
        const int i = static_cast<int>(s % nm);
        const OmFunctional& f = seq.members[i];
        if (!(f.eval(f.anchor) <= t)) return;
        Rng rng = make_rng(seed, 0xe9c0, s);
        const Vector d = random_unit(rng, dim);
        auto inside = [&](double rho) { return f.eval(f.anchor + rho * d) <= t; };
        double lo = 0.0, hi = 1.0;
        int grow = 0;
        while (inside(hi) && grow < 200) {
            lo = hi;
            hi *= 2.0;
            ++grow;
        }
        if (grow < 200)
            for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (inside(mid) ? lo : hi) = mid;
            }
        double rho = lo;
        if (s % 2 == 0) {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            rho = lo * std::pow(unif(rng), 1.0 / dim);
        }
        pts[s] = f.anchor + rho * d;
        used[s] = 1;
        ok[s] = bound(i, pts[s], t);
    });
    for (int s = 0; s < samples; ++s) {
        if (!used[s]) continue;
        ++rep.samples;
        if (!ok[s]) {
            if (rep.violations == 0) {
                rep.witness = pts[s];
                rep.witness_member = s % nm;
            }
            ++rep.violations;
        }
    }
    rep.vacuous = rep.samples == 0;
    rep.verdict = rep.violations == 0 ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- minimisers

std::vector<std::vector<int>> trailing_clusters(const std::vector<Vector>& xs, double fraction, double radius) {
    const int n = static_cast<int>(xs.size());
    if (n == 0) return {};
    const int m = std::clamp(static_cast<int>(std::ceil(fraction * n)), std::min(n, 2), n);
    const int start = n - m;
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            if ((xs[start + a] - xs[start + b]).norm() <= radius) parent[find(a)] = find(b);
    std::vector<std::vector<int>> groups;
    std::vector<int> slot(m, -1);
    for (int a = 0; a < m; ++a) {
        const int r = find(a);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[slot[r]].push_back(start + a);
    }
    return groups;
}

ModeConvergenceReport mode_convergence_check(const FunctionalSequence& seq, const std::vector<Vector>& minimizers,
                                             const std::vector<Vector>& limit_argmins,
                                             const ModeConvergenceOptions& opts) {
    if (static_cast<int>(minimizers.size()) != seq.size())
        throw InputError("mode_convergence_check: need one minimiser per member");
    if (limit_argmins.empty()) throw InputError("mode_convergence_check: limit argmins required");
    ModeConvergenceReport rep;
    const auto groups = trailing_clusters(minimizers, opts.trailing_fraction, opts.cluster_tol);
    bool structured = false;
    rep.clusters_are_argmins = true;
    for (const auto& g : groups) {
        if (g.size() < 2) continue;
        structured = true;
        const Vector& c = minimizers[g.back()];
        double dist = kInf;
        for (const Vector& a : limit_argmins) dist = std::min(dist, (c - a).norm());
        rep.cluster_points.push_back(c);
        rep.cluster_sizes.push_back(static_cast<int>(g.size()));
        rep.distance_to_limit_argmin.push_back(dist);
        if (!(dist <= opts.tol)) rep.clusters_are_argmins = false;
    }
    rep.limit_min = kInf;
    for (const Vector& a : limit_argmins) rep.limit_min = std::min(rep.limit_min, seq.limit.eval(a));
    rep.member_min = Vector(seq.size());
    for (int i = 0; i < seq.size(); ++i) rep.member_min[i] = seq.members[i].eval(minimizers[i]);
    rep.min_value_gap = std::abs(rep.member_min[seq.size() - 1] - rep.limit_min);
    rep.minima_converge = !std::isfinite(opts.value_tol) || rep.min_value_gap <= opts.value_tol;
    if (!structured) {
        rep.clusters_are_argmins = false;
        rep.diagnostic = "no convergent subsequence found at this N";
    }
    rep.verdict = structured && rep.clusters_are_argmins && rep.minima_converge ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- continuous convergence

std::vector<Potential> projected_potentials(const Potential& phi, const std::vector<double>& n) {
    std::vector<Potential> out;
    for (double v : n) out.push_back(projected_potential(phi, static_cast<int>(std::lround(v))));
    return out;
}

ContinuityReport continuous_convergence_probe(const std::vector<double>& n, const std::vector<Potential>& members,
                                              const Potential& limit, const std::vector<Vector>& points,
                                              const ContinuityOptions& opts) {
    if (n.size() != members.size() || n.empty())
        throw InputError("continuous_convergence_probe: need one index per member");
    ContinuityReport rep;
    rep.n = n;
    const int nm = static_cast<int>(n.size());
    bool all = true;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const Vector& x = points[p];
        const int dim = static_cast<int>(x.size());
        const double fx = limit.eval(x);
        ContinuityEntry e;
        e.x = x;
        e.sup_deviation = Vector(nm);
        e.sup_location = Vector(nm);
        parallel_for(static_cast<std::size_t>(nm), [&](std::size_t i) {
            const double rho = opts.rho0 / std::sqrt(n[i]);
            Rng rng = make_rng(opts.seed, 0xc0c0 + p, i);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            double worst = std::abs(members[i].eval(x) - fx);
            double where = 0.0;
            const Vector e1 = random_unit(rng, dim);
            for (int s = -2; s < opts.samples; ++s) {
                Vector y;
                if (s < 0) {
                    y = x + (s == -2 ? rho : -rho) * e1;
                } else {
                    y = x + rho * std::pow(unif(rng), 1.0 / dim) * random_unit(rng, dim);
                }
                const double dev = std::abs(members[i].eval(y) - fx);
                if (dev > worst) {
                    worst = dev;
                    where = (y - x).norm();
                }
            }
            e.sup_deviation[i] = worst;
            e.sup_location[i] = where;
        });
        std::vector<double> lx, ly;
        for (int i = nm / 2; i < nm; ++i)
            if (e.sup_deviation[i] > 0.0) {
                lx.push_back(std::log(n[i]));
                ly.push_back(std::log(e.sup_deviation[i]));
            }
        e.decay_slope = 0.0;
        if (lx.size() >= 2) {
            const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
            const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                sxy += (lx[i] - mx) * (ly[i] - my);
                sxx += (lx[i] - mx) * (lx[i] - mx);
            }
            e.decay_slope = sxx > 0.0 ? -sxy / sxx : 0.0;
        }
        e.converges = e.sup_deviation[nm - 1] <= opts.tol || e.decay_slope >= opts.min_decay_slope;
        all = all && e.converges;
        rep.entries.push_back(std::move(e));
    }
    rep.verdict = all ? Verdict::pass : Verdict::fail;
    return rep;
}

// ---------------------------------------------------------------- sum rule

SumRuleReport sum_rule_check(const FunctionalSequence& f, const std::vector<Potential>& g, const Potential& g_limit,
                             const std::vector<Vector>& points,
                             const std::function<std::vector<Vector>(const Vector&)>& recovery,
                             const PathOptions& opts) {
    if (static_cast<int>(g.size()) != f.size()) throw InputError("sum_rule_check: need one potential per member");
    std::vector<OmFunctional> members;
    for (int i = 0; i < f.size(); ++i) members.push_back(posterior_om(f.members[i], g[i]));
    const FunctionalSequence sum = make_sequence(f.n, std::move(members), posterior_om(f.limit, g_limit));
    SumRuleReport rep;
    bool ok = true;
    for (const Vector& x : points) {
        rep.liminf.push_back(gamma_liminf_probe(sum, x, opts));
        ok = ok && rep.liminf.back().verdict == Verdict::pass;
        if (recovery) {
            rep.recovery.push_back(recovery_check(sum, x, recovery(x), opts.tol, opts.persist_ratio));
            ok = ok && rep.recovery.back().verdict == Verdict::pass;
        }
    }
    rep.verdict = ok ? Verdict::pass : Verdict::fail;
    return rep;
}

Vector lsc_envelope_1d(const std::function<double(double)>& f, double x, const Vector& deltas, int grid) {
    Vector out(deltas.size());
    for (int j = 0; j < deltas.size(); ++j) {
        double lo = f(x);
        for (int g = 0; g < grid; ++g) {
            const double y = x - deltas[j] + 2.0 * deltas[j] * g / (grid - 1);
            lo = std::min(lo, f(y));
        }
        out[j] = lo;
    }
    return out;
}

}  // namespace ommap
