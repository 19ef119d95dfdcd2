#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flipchain {

/// Conjugate thermodynamic parameters of the product Gaussian equilibrium:
/// inverse temperature and the tension coupled to the deformation field.
struct GibbsParams {
    double beta;
    double lambda;
};

/// Per-site equilibrium means of the two conserved fields.
struct StateAverages {
    double e; // mean energy
    double r; // mean deformation
};

inline void require_positive_beta(double beta, const char* where) {
    if (!(beta > 0.0)) throw std::domain_error(std::string(where) + ": beta must be positive");
}

/// Temperature as a function of the averages; the admissible region is
/// e - r^2/2 > 0.
inline double temperature_of(const StateAverages& a) { return a.e - 0.5 * a.r * a.r; }

inline void require_admissible(const StateAverages& a, const char* where) {
    if (!(temperature_of(a) > 0.0))
        throw std::domain_error(std::string(where) + ": averages must satisfy e - r^2/2 > 0");
}

/// Single-site log partition function of the tilted Gaussian measure.
inline double log_partition(const GibbsParams& g) {
    require_positive_beta(g.beta, "log_partition");
    return std::log(2.0 * std::numbers::pi) - std::log(g.beta) + g.lambda * g.lambda / (2.0 * g.beta);
}

inline StateAverages averages_from_potentials(const GibbsParams& g) {
    require_positive_beta(g.beta, "averages_from_potentials");
    const double b = g.beta, l = g.lambda;
    return StateAverages{1.0 / b + l * l / (2.0 * b * b), -l / b};
}

inline GibbsParams potentials_from_averages(const StateAverages& a) {
    require_admissible(a, "potentials_from_averages");
    const double t = temperature_of(a);
    return GibbsParams{1.0 / t, -a.r / t};
}

/// Thermodynamic entropy per site.
inline double entropy(const StateAverages& a) {
    require_admissible(a, "entropy");
    return 1.0 + std::log(2.0 * std::numbers::pi) + std::log(temperature_of(a));
}

/// Gradient of the entropy: dS/de = beta, dS/dr = lambda. Coincides with
/// potentials_from_averages.
inline GibbsParams entropy_gradient(const StateAverages& a) { return potentials_from_averages(a); }

/// Legendre duality gap -S(a) + log Z(grad S(a)) + (beta e + lambda r);
/// identically zero on the admissible region.
inline double duality_gap(const StateAverages& a) {
    const GibbsParams g = entropy_gradient(a);
    return -entropy(a) + log_partition(g) + (g.beta * a.e + g.lambda * a.r);
}

/// Large-deviation rate of observing block averages z under the equilibrium
/// tilted at eta. +infinity outside the admissible half-space of z.
inline double rate_function(const StateAverages& z, const StateAverages& eta) {
    require_admissible(eta, "rate_function (reference state)");
    const double tz = z.e - 0.5 * z.r * z.r;
    if (!(tz > 0.0)) return std::numeric_limits<double>::infinity();
    const double te = temperature_of(eta);
    return (0.5 * eta.r * eta.r - z.r * eta.r + z.e) / te - std::log(tz / te) - 1.0;
}

/// Quadratic minorant of the rate function in the deformation coordinate.
inline double rate_function_lower_bound(const StateAverages& z, const StateAverages& eta) {
    require_admissible(eta, "rate_function_lower_bound");
    const double d = eta.r - z.r;
    return d * d / (2.0 * temperature_of(eta));
}

// ---------------------------------------------------------------------------
// Equilibrium expectations of the five microscopic flux observables and the
// matching macroscopic functions of (e, r), with analytic gradients.
// ---------------------------------------------------------------------------

struct CurrentValue {
    double value;
    double de; // partial derivative in e
    double dr; // partial derivative in r
};

inline CurrentValue current_expectation(int k, const StateAverages& a) {
    const double e = a.e, r = a.r;
    switch (k) {
        case 1: return {e + 0.5 * r * r, 1.0, r};
        case 2: return {r, 0.0, 1.0};
        case 3: return {(2.0 * e - r * r) * (e + 1.5 * r * r),
                        4.0 * e + 2.0 * r * r, 4.0 * e * r - 6.0 * r * r * r};
        case 4: return {r * (2.0 * e - r * r), 2.0 * r, 2.0 * e - 3.0 * r * r};
        case 5: return {e - 0.5 * r * r, 1.0, -r};
        default: throw std::invalid_argument("current_expectation: k must be in 1..5");
    }
}

/// Microscopic flux observable at a site, as a function of the local window
/// (p_x, r_x, r_{x-1}). The flip rate enters two of the five.
inline double current_observable(int k, double px, double rx, double rxm1, double gamma) {
    switch (k) {
        case 1: return px * px + rx * rxm1 + 2.0 * gamma * px * rxm1;
        case 2: return rx + gamma * px;
        case 3: { const double s = rx + rxm1; return px * px * s * s; }
        case 4: return px * px * (rx + rxm1);
        case 5: return px * px;
        default: throw std::invalid_argument("current_observable: k must be in 1..5");
    }
}

/// Second-order Taylor remainder of the k-th macroscopic flux function
/// around u, evaluated at w.
inline double taylor_remainder(int k, const StateAverages& w, const StateAverages& u) {
    const CurrentValue hw = current_expectation(k, w);
    const CurrentValue hu = current_expectation(k, u);
    return hw.value - hu.value - hu.de * (w.e - u.e) - hu.dr * (w.r - u.r);
}

} // namespace flipchain
