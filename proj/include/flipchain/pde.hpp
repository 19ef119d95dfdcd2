#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "flipchain/errors.hpp"
#include "flipchain/fft.hpp"
#include "flipchain/linalg.hpp"
#include "flipchain/profile.hpp"

namespace flipchain {

// ---------------------------------------------------------------------------
// Macroscopic fields on the periodic unit interval, cell centers q_i = i/M.
// The deformation field obeys a plain heat equation with diffusivity 1/gamma;
// the energy field diffuses at half that rate but is driven by the square of
// the deformation, so temperature rather than energy is the honest diffusive
// quantity.
// ---------------------------------------------------------------------------

struct HydroFields {
    Vec deformation;
    Vec energy;

    int cells() const { return static_cast<int>(deformation.size()); }
    void validate() const {
        if (deformation.size() != energy.size() || deformation.size() < 4)
            throw std::invalid_argument("hydro fields: matching field sizes of at least 4 required");
        if (!deformation.allFinite() || !energy.allFinite())
            throw std::invalid_argument("hydro fields: entries must be finite");
    }
};

/// Local-equilibrium initial data induced by site potentials: the mean
/// stretch is -lambda/beta and the mean energy is the temperature plus the
/// mechanical part of the stretch.
inline HydroFields fields_from_profile(const PotentialProfile& prof, int grid) {
    if (grid < 4) throw ConfigError("fields_from_profile: at least 4 cells required");
    HydroFields f;
    f.deformation = Vec(grid);
    f.energy = Vec(grid);
    for (int i = 0; i < grid; ++i) {
        const double q = static_cast<double>(i) / grid;
        const double b = prof.beta(q);
        const double l = prof.lambda(q);
        if (!(b > 0.0)) throw PhysicsError("fields_from_profile: beta profile must be positive");
        const double r = -l / b;
        f.deformation[i] = r;
        f.energy[i] = 1.0 / b + 0.5 * r * r;
    }
    return f;
}

inline Vec temperature_field(const HydroFields& f) {
    return f.energy - 0.5 * f.deformation.cwiseProduct(f.deformation);
}

inline double min_temperature(const HydroFields& f) { return temperature_field(f).minCoeff(); }

inline double mean_deformation(const HydroFields& f) { return f.deformation.mean(); }
inline double mean_energy(const HydroFields& f) { return f.energy.mean(); }

enum class PdeScheme { SemiImplicitSpectral, ExplicitFlux };

// ---------------------------------------------------------------------------
// Time steppers.
// ---------------------------------------------------------------------------

class HydroSolver {
public:
    HydroSolver(int cells, double gamma, PdeScheme scheme = PdeScheme::SemiImplicitSpectral)
        : m_(cells), gamma_(gamma), scheme_(scheme), fft_(cells),
          ra_(cells), ea_(cells), wa_(cells) {
        if (cells < 4) throw ConfigError("hydro solver: at least 4 cells required");
        if (!(gamma > 0.0)) throw ConfigError("hydro solver: gamma must be positive");
        mu_.resize(cells);
        const double dq = 1.0 / cells;
        for (int k = 0; k < cells; ++k) {
            const double s = std::sin(std::numbers::pi * k / cells);
            mu_[k] = 4.0 / (dq * dq) * s * s;
        }
    }

    int cells() const { return m_; }
    double gamma() const { return gamma_; }

    /// Largest stable step of the explicit scheme; the spectral scheme is
    /// unconditionally stable.
    double explicit_step_limit() const {
        const double dq = 1.0 / m_;
        return gamma_ * dq * dq / 2.0;
    }

    void step(HydroFields& f, double dt) {
        f.validate();
        if (f.cells() != m_) throw std::invalid_argument("hydro solver: field size mismatch");
        if (!(dt > 0.0)) throw std::invalid_argument("hydro solver: dt must be positive");
        if (scheme_ == PdeScheme::ExplicitFlux) {
            if (dt > explicit_step_limit() * (1.0 + 1e-12))
                throw ConfigError("hydro solver: explicit step exceeds the stability limit");
            step_explicit(f, dt);
        } else {
            step_spectral(f, dt);
        }
        if (min_temperature(f) <= 0.0)
            throw PhysicsError("hydro solver: temperature lost positivity");
    }

    /// Advances to exactly t ahead using uniform steps no larger than dt.
    void evolve(HydroFields& f, double t, double dt) {
        if (!(t >= 0.0)) throw std::invalid_argument("hydro solver: time must be nonnegative");
        if (t == 0.0) return;
        const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-12)));
        const double h = t / steps;
        for (int i = 0; i < steps; ++i) step(f, h);
    }

private:
    /// Deformation implicit in its own mode, energy implicit with the
    /// deformation-square drive taken explicitly from the fresh deformation.
    /// Mode zero is divided by exactly one in both updates, so both means are
    /// conserved to roundoff.
    void step_spectral(HydroFields& f, double dt) {
        for (int i = 0; i < m_; ++i) ra_[i] = f.deformation[i];
        fft_.forward(ra_.data());
        for (int k = 0; k < m_; ++k) ra_[k] /= 1.0 + dt / gamma_ * mu_[k];
        fft_.backward(ra_.data());
        for (int i = 0; i < m_; ++i) f.deformation[i] = ra_[i].real() / m_;

        for (int i = 0; i < m_; ++i) {
            ea_[i] = f.energy[i];
            wa_[i] = 0.5 * f.deformation[i] * f.deformation[i];
        }
        fft_.forward(ea_.data());
        fft_.forward(wa_.data());
        const double c = dt / (2.0 * gamma_);
        for (int k = 0; k < m_; ++k) ea_[k] = (ea_[k] - c * mu_[k] * wa_[k]) / (1.0 + c * mu_[k]);
        fft_.backward(ea_.data());
        for (int i = 0; i < m_; ++i) f.energy[i] = ea_[i].real() / m_;
    }

    /// Conservative update: one flux value per interface, reused with
    /// opposite signs by its two neighbours, so the sums telescope.
    void step_explicit(HydroFields& f, double dt) {
        const double dq = 1.0 / m_;
        flux_r_.resize(m_);
        flux_e_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const int j = (i + 1) % m_;
            flux_r_[i] = (f.deformation[j] - f.deformation[i]) / dq;
            const double ui = f.energy[i] + 0.5 * f.deformation[i] * f.deformation[i];
            const double uj = f.energy[j] + 0.5 * f.deformation[j] * f.deformation[j];
            flux_e_[i] = (uj - ui) / dq;
        }
        for (int i = 0; i < m_; ++i) {
            const int im = (i + m_ - 1) % m_;
            f.deformation[i] += dt / (gamma_ * dq) * (flux_r_[i] - flux_r_[im]);
            f.energy[i] += dt / (2.0 * gamma_ * dq) * (flux_e_[i] - flux_e_[im]);
        }
    }

    int m_;
    double gamma_;
    PdeScheme scheme_;
    Fft fft_;
    std::vector<double> mu_;
    std::vector<std::complex<double>> ra_, ea_, wa_;
    std::vector<double> flux_r_, flux_e_;
};

// ---------------------------------------------------------------------------
// Diagnostics.
// ---------------------------------------------------------------------------

namespace detail {
inline double centered_diff1(const Vec& u, int i, double dq) {
    const int m = static_cast<int>(u.size());
    return (u[(i + 1) % m] - u[(i + m - 1) % m]) / (2.0 * dq);
}
inline double centered_diff2(const Vec& u, int i, double dq) {
    const int m = static_cast<int>(u.size());
    return (u[(i + 1) % m] - 2.0 * u[i] + u[(i + m - 1) % m]) / (dq * dq);
}
} // namespace detail

/// Residual of the temperature equation
///   dT/dt = (1/2 gamma) T'' + (1/gamma) (r')^2
/// measured between two snapshots dt apart with centred space differences.
/// First order in dt, second order in the cell width.
inline double temperature_equation_residual(const HydroFields& before, const HydroFields& after,
                                            double dt, double gamma) {
    before.validate();
    after.validate();
    const int m = before.cells();
    if (after.cells() != m) throw std::invalid_argument("temperature residual: size mismatch");
    const double dq = 1.0 / m;
    const Vec t0 = temperature_field(before);
    const Vec t1 = temperature_field(after);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        const double dr = detail::centered_diff1(before.deformation, i, dq);
        const double res = (t1[i] - t0[i]) / dt - detail::centered_diff2(t0, i, dq) / (2.0 * gamma) -
                           dr * dr / gamma;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

/// Integrated thermodynamic entropy, up to the constant 1 + log 2 pi per
/// unit length.
inline double entropy_total(const HydroFields& f) {
    const Vec t = temperature_field(f);
    if (t.minCoeff() <= 0.0) throw PhysicsError("entropy_total: temperature must be positive");
    return t.array().log().sum() / f.cells();
}

/// Instantaneous entropy production rate
///   (1/2 gamma) integral of (beta'/beta)^2 + 2 beta (r')^2,
/// with beta the inverse temperature. Nonnegative by inspection.
inline double entropy_production_rate(const HydroFields& f, double gamma) {
    const int m = f.cells();
    const double dq = 1.0 / m;
    const Vec t = temperature_field(f);
    if (t.minCoeff() <= 0.0) throw PhysicsError("entropy production: temperature must be positive");
    Vec beta(m);
    for (int i = 0; i < m; ++i) beta[i] = 1.0 / t[i];
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double db = detail::centered_diff1(beta, i, dq);
        const double dr = detail::centered_diff1(f.deformation, i, dq);
        acc += (db / beta[i]) * (db / beta[i]) + 2.0 * beta[i] * dr * dr;
    }
    return acc * dq / (2.0 * gamma);
}

// ---------------------------------------------------------------------------
// Closed-form references.
// ---------------------------------------------------------------------------

/// Thermal diffusivity of the pinned chain as a function of the pinning
/// strength; at zero pinning it reduces to 1/(2 gamma), matching the energy
/// mode of the unpinned system.
inline double pinned_diffusivity(double nu, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("pinned_diffusivity: gamma must be positive");
    const double n2 = nu * nu;
    return 1.0 / (gamma * (2.0 + n2 + std::sqrt(n2 * (n2 + 4.0))));
}

/// Exact heat semigroup on the torus applied to a sampled field: every
/// Fourier mode decays with its continuum rate (2 pi k)^2 D.
inline Vec heat_exact_fourier(const Vec& field, double diffusivity, double t) {
    const int m = static_cast<int>(field.size());
    if (m < 2) throw std::invalid_argument("heat_exact_fourier: at least two samples required");
    Fft fft(m);
    std::vector<std::complex<double>> a(m);
    for (int i = 0; i < m; ++i) a[i] = field[i];
    fft.forward(a.data());
    for (int k = 0; k < m; ++k) {
        const int signed_k = k <= m / 2 ? k : k - m;
        const double w = 2.0 * std::numbers::pi * signed_k;
        a[k] *= std::exp(-diffusivity * w * w * t);
    }
    fft.backward(a.data());
    Vec out(m);
    for (int i = 0; i < m; ++i) out[i] = a[i].real() / m;
    return out;
}

} // namespace flipchain
