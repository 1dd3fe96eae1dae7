#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <functional>
#include <string>
#include <vector>

#include "ommap/measures.hpp"

namespace ommap {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------- 1D helpers

/// All local maximisers of f on [lo, hi] found on a uniform grid and polished
/// by bisection on the sign of a central-difference derivative of log f.
/// Sorted by decreasing f value.
std::vector<double> local_maximisers(const std::function<double(double)>& f, double lo, double hi,
                                     int grid = 20001);

// ---------------------------------------------------------------- Gaussian pair

/// KL(N(0,1) || N(0,sigma)), sigma a variance: (sigma^{-1} - 1 + log sigma) / 2.
double kl_gaussians(double sigma);
double kl_gaussians_quadrature(double sigma);

// ---------------------------------------------------------------- mixture

struct MixtureFamily {
    double t;
    double r = 5.0;

    MixtureFamily(double t, double r = 5.0);
    double density(double x) const;
    double log_density(double x) const;
};

struct MixtureModes {
    double mode;
    std::vector<double> maximisers;
    bool warning_small_r;
};

MixtureModes mixture_modes(double t, double r = 5.0);
/// KL(mu^{(t)} || mu^{(-t)}) by quadrature.
double kl_mixture(double t, double r = 5.0);
Density1D mixture_density1d(double t, double r = 5.0);

// ---------------------------------------------------------------- spike

/// n = kInf gives the Gaussian N(1, 1) limit.
struct SpikeFamily {
    double n;

    explicit SpikeFamily(double n);
    double density(double x) const;
    double log_density(double x) const;
};

double spike_mode(double n);
/// KL(mu^{(inf)} || mu^{(n)}) by quadrature.
double kl_spike(double n);
/// KL(mu^{(n)} || mu^{(inf)}) by quadrature.
double kl_spike_reverse(double n);
Density1D spike_density1d(double n);

// ---------------------------------------------------------------- liminf-only measure

/// Dyadic construction with exact rational interval geometry. Mass of levels
/// beyond `depth` is kept as one lump next to each of -1 and 1.
class LiminfOnlyMeasure {
public:
    explicit LiminfOnlyMeasure(int depth = 40);

    int depth() const { return depth_; }
    Rational a(int n) const;
    Rational b(int n) const;
    Rational alpha(int n) const;
    Rational beta(int n) const;
    Rational epsilon(int n) const;
    Rational delta(int n) const;

    /// Unnormalised mass of the open (or closed) ball, exact.
    Rational ball_mass(const Rational& center, const Rational& radius, bool closed = false) const;
    /// Total unnormalised mass (3/2).
    Rational total_mass() const;
    /// Sum_{k <= depth} 2^k alpha_k + lump, which must equal a_1 exactly.
    Rational left_telescoped() const;
    bool intervals_disjoint() const;

    Density1D density1d() const;

private:
    using Int = boost::multiprecision::cpp_int;

    /// Every quantity is held as an integer multiple of 2^{-scale_}.
    Int scaled(const Rational& q) const;
    Int pow2_scaled(long e) const;

    int depth_;
    long scale_;
    std::vector<Int> alpha_;
};

struct LiminfOnlyRatios {
    std::vector<int> n;
    std::vector<Rational> epsilon_ratios;
    std::vector<Rational> delta_ratios;
    std::vector<double> log2_delta_ratios;
    bool epsilon_all_two;
    bool delta_all_match;   // against a_{n+1} / b_n
};

LiminfOnlyRatios liminf_only_ratios(const LiminfOnlyMeasure& mu, int n_max);

/// Exact log2 of a positive rational (integer part exact, fraction from doubles).
double log2_rational(const Rational& q);

// ---------------------------------------------------------------- OM minimiser not strong

class OmNotStrongMeasure {
public:
    explicit OmNotStrongMeasure(int levels = 30);

    int levels() const { return levels_; }
    static double normalisation();
    /// Unnormalised rho_k.
    static double component_density(int k, double x);
    /// Unnormalised rho_k mass of the interval k + [lo, hi].
    static double component_mass(int k, double lo, double hi);
    static double component_total(int k) { return 1.25 / (static_cast<double>(k) * k); }
    /// Unnormalised rho_0 primitive on [-1/4, 1/4].
    static double spike_primitive(double y);

    double density(double x) const;
    /// Normalised mass of B_r(center), exact.
    double ball_mass(double center, double radius) const;
    double retained_mass() const;
    Density1D density1d() const;

private:
    int levels_;
};

struct OmNotStrongSuite {
    std::vector<int> k;
    std::vector<BallRatioEstimate> ratio_to_k;         // mu(B_r(1)) / mu(B_r(k))
    std::vector<double> om_values;                     // 2 log k
    std::vector<double> off_integer_points;
    std::vector<double> off_integer_decay_slopes;      // log-log slope of mu(B_r(x)) / mu(B_r(m))
    std::vector<int> n;
    std::vector<double> strong_ratio_at_rn;            // mu(B(1, r_n)) / mu(B(n, r_n))
    std::vector<double> bound_at_rn;             // (1/(sqrt2 n^2) + 1/n^4) n^2
};

OmNotStrongSuite om_not_strong_suite(const OmNotStrongMeasure& mu, const std::vector<int>& ks = {2, 3, 5},
                                     const std::vector<int>& ns = {2, 5, 10, 20});

// ---------------------------------------------------------------- crosses

/// Unit-arm crosses: E+ axis aligned at e1, E- rotated by pi/4 at -e1.
LengthMeasure2D crosses_measure();

enum class CrossNorm { one, sup };

/// Closed forms; `center_sign` is +1 for e1, -1 for -e1. Needs 0 < r <= 0.5.
double crosses_ball_mass(CrossNorm norm, int center_sign, double r);
/// I(-e1) - I(e1) = log(mu(B_r(e1)) / mu(B_r(-e1))).
double crosses_om_difference(CrossNorm norm);
/// +1 or -1: the centre carrying more mass.
int crosses_mode(CrossNorm norm);

}  // namespace ommap
