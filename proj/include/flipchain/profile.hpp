#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "flipchain/errors.hpp"
#include "flipchain/linalg.hpp"

namespace flipchain {

/// Periodic scalar field on [0,1), evaluable at arbitrary points.
using ScalarProfile = std::function<double(double)>;

/// Trigonometric polynomial c0 + sum_j (c_j cos(2 pi j q) + s_j sin(2 pi j q)).
/// With reciprocal=true the series describes 1/f instead of f.
inline ScalarProfile series_profile(double c0, std::vector<double> cosc,
                                    std::vector<double> sinc, bool reciprocal = false) {
    return [c0, cosc = std::move(cosc), sinc = std::move(sinc), reciprocal](double q) {
        double v = c0;
        for (std::size_t j = 0; j < cosc.size(); ++j)
            v += cosc[j] * std::cos(2.0 * std::numbers::pi * double(j + 1) * q);
        for (std::size_t j = 0; j < sinc.size(); ++j)
            v += sinc[j] * std::sin(2.0 * std::numbers::pi * double(j + 1) * q);
        return reciprocal ? 1.0 / v : v;
    };
}

/// Periodic cubic (Catmull-Rom) interpolation of tabulated values at q = i/n.
inline ScalarProfile table_profile(std::vector<double> values) {
    if (values.size() < 4) throw ConfigError("profile table: need at least 4 values");
    return [values = std::move(values)](double q) {
        const int n = static_cast<int>(values.size());
        double u = (q - std::floor(q)) * n;
        int i = static_cast<int>(std::floor(u));
        if (i >= n) i = n - 1;
        const double t = u - i;
        auto at = [&](int j) { return values[((j % n) + n) % n]; };
        const double pm1 = at(i - 1), p0 = at(i), p1 = at(i + 1), p2 = at(i + 2);
        return p0 + 0.5 * t * (p1 - pm1 + t * (2 * pm1 - 5 * p0 + 4 * p1 - p2 + t * (3 * (p0 - p1) + p2 - pm1)));
    };
}

/// Potential pair defining a slowly varying Gibbs state.
struct PotentialProfile {
    ScalarProfile beta;
    ScalarProfile lambda;
};

/// Default smooth benchmark profile: gentle temperature bump plus a shear.
inline PotentialProfile default_profile() {
    return PotentialProfile{
        series_profile(1.0, {0.2}, {}, /*reciprocal=*/true),
        series_profile(0.0, {}, {0.2}),
    };
}

inline Vec sample_profile(const ScalarProfile& f, int n) {
    Vec out(n);
    for (int x = 0; x < n; ++x) out[x] = f(static_cast<double>(x) / n);
    return out;
}

/// Centered first difference at lattice resolution: approximates f'(x/n).
inline double profile_diff1(const ScalarProfile& f, int n, int x) {
    const double h = 1.0 / n;
    return (f((x + 1.0) * h) - f((x - 1.0) * h)) / (2.0 * h);
}

/// Centered second difference at lattice resolution: approximates f''(x/n).
inline double profile_diff2(const ScalarProfile& f, int n, int x) {
    const double h = 1.0 / n;
    return (f((x + 1.0) * h) - 2.0 * f(x * h) + f((x - 1.0) * h)) / (h * h);
}

/// Positivity probe used by temperature-like profiles.
inline void require_positive_profile(const ScalarProfile& f, int n, const char* name) {
    for (int x = 0; x < n; ++x) {
        if (!(f(static_cast<double>(x) / n) > 0.0))
            throw PhysicsError(std::string(name) + ": profile must be strictly positive");
    }
}

} // namespace flipchain
