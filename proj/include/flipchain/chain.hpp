#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "flipchain/fft.hpp"
#include "flipchain/linalg.hpp"

namespace flipchain {

enum class ChainModel { Unpinned, Pinned };

/// Phase-space configuration on the discrete circle of N sites.
/// pos holds the deformation field r (unpinned) or the displacement
/// field q (pinned); mom holds the momenta.
struct ChainState {
    ChainModel model = ChainModel::Unpinned;
    double nu = 0.0; // on-site pinning strength, pinned model only
    Vec pos;
    Vec mom;

    int size() const { return static_cast<int>(pos.size()); }

    void validate() const {
        if (pos.size() != mom.size()) throw std::invalid_argument("ChainState: field size mismatch");
        if (pos.size() < 4) throw std::invalid_argument("ChainState: need at least 4 sites");
        if (model == ChainModel::Pinned && !(nu > 0.0))
            throw std::invalid_argument("ChainState: pinned model requires nu > 0");
        if (!pos.allFinite() || !mom.allFinite())
            throw std::invalid_argument("ChainState: fields must be finite");
    }
};

inline int mod_index(int x, int n) { return ((x % n) + n) % n; }

/// Energy attached to site x. Unpinned: (p^2 + r^2)/2. Pinned: kinetic plus
/// on-site plus half of each incident bond.
inline double site_energy(const ChainState& s, int x) {
    const int n = s.size();
    const int i = mod_index(x, n);
    const double p = s.mom[i];
    if (s.model == ChainModel::Unpinned) {
        const double r = s.pos[i];
        return 0.5 * (p * p + r * r);
    }
    const double q = s.pos[i];
    const double qp = s.pos[mod_index(i + 1, n)];
    const double qm = s.pos[mod_index(i - 1, n)];
    return 0.5 * p * p + 0.5 * s.nu * s.nu * q * q
         + 0.25 * ((q - qp) * (q - qp) + (q - qm) * (q - qm));
}

inline double total_energy(const ChainState& s) {
    double e = 0.0;
    for (int x = 0; x < s.size(); ++x) e += site_energy(s, x);
    return e;
}

struct ConservedTotals {
    std::optional<double> deformation; // unpinned only
    double energy = 0.0;
};

inline ConservedTotals conserved_totals(const ChainState& s) {
    ConservedTotals t;
    t.energy = total_energy(s);
    if (s.model == ChainModel::Unpinned) t.deformation = s.pos.sum();
    return t;
}

/// Hamiltonian vector field of the free dynamics.
inline void drift(const ChainState& s, Vec& dpos, Vec& dmom) {
    const int n = s.size();
    dpos.resize(n);
    dmom.resize(n);
    if (s.model == ChainModel::Unpinned) {
        for (int x = 0; x < n; ++x) {
            dpos[x] = s.mom[mod_index(x + 1, n)] - s.mom[x];
            dmom[x] = s.pos[x] - s.pos[mod_index(x - 1, n)];
        }
    } else {
        for (int x = 0; x < n; ++x) {
            dpos[x] = s.mom[x];
            dmom[x] = -(s.nu * s.nu * s.pos[x] + 2.0 * s.pos[x]
                        - s.pos[mod_index(x + 1, n)] - s.pos[mod_index(x - 1, n)]);
        }
    }
}

inline void flip_momentum(ChainState& s, int x) { s.mom[mod_index(x, s.size())] *= -1.0; }

// ---------------------------------------------------------------------------
// Exact free flow. The circulant structure diagonalizes in Fourier modes into
// independent 2x2 rotations, so the propagator is evaluated in closed form
// for arbitrary real t (negative included) and preserves the conserved
// quadratic form to round-off.
// ---------------------------------------------------------------------------

class WavePropagator {
public:
    WavePropagator(ChainModel model, double nu, int n)
        : model_(model), nu_(nu), n_(n), fft_(n),
          za_(n), zb_(n) {
        if (n < 4) throw std::invalid_argument("WavePropagator: need at least 4 sites");
        if (model == ChainModel::Pinned && !(nu > 0.0))
            throw std::invalid_argument("WavePropagator: pinned model requires nu > 0");
        mix_a_.resize(n);
        freq_.resize(n);
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * std::numbers::pi * k / n;
            if (model == ChainModel::Unpinned) {
                mix_a_[k] = std::complex<double>(std::cos(th) - 1.0, std::sin(th));
                freq_[k] = std::abs(mix_a_[k]); // = 2|sin(th/2)|
            } else {
                const double s = std::sin(0.5 * th);
                freq_[k] = std::sqrt(nu * nu + 4.0 * s * s);
            }
        }
    }

    int size() const { return n_; }

    /// Advance (pos, mom) by time t under the free dynamics.
    void flow(ChainState& s, double t) {
        flow_pair(s.pos, s.mom, t);
    }

    /// Same propagator acting on a stacked length-2N vector.
    void flow_vector(Vec& v, double t) {
        Eigen::Map<Vec> pos(v.data(), n_);
        Eigen::Map<Vec> mom(v.data() + n_, n_);
        Vec a = pos, b = mom;
        flow_pair(a, b, t);
        pos = a;
        mom = b;
    }

    /// Conjugation C <- P C P^T of a 2N x 2N second-moment matrix.
    void flow_matrix(Mat& c, double t) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < 2 * n_; ++j) {
                for (int i = 0; i < n_; ++i) {
                    za_[i] = std::complex<double>(c(i, j), 0.0);
                    zb_[i] = std::complex<double>(c(n_ + i, j), 0.0);
                }
                mix_transformed(t);
                for (int i = 0; i < n_; ++i) {
                    c(i, j) = za_[i].real();
                    c(n_ + i, j) = zb_[i].real();
                }
            }
            c.transposeInPlace();
        }
    }

private:
    void flow_pair(Vec& pos, Vec& mom, double t) {
        for (int i = 0; i < n_; ++i) {
            za_[i] = std::complex<double>(pos[i], 0.0);
            zb_[i] = std::complex<double>(mom[i], 0.0);
        }
        mix_transformed(t);
        for (int i = 0; i < n_; ++i) {
            pos[i] = za_[i].real();
            mom[i] = zb_[i].real();
        }
    }

    // Forward transform, per-mode 2x2 propagator, inverse transform.
    void mix_transformed(double t) {
        fft_.forward(za_.data());
        fft_.forward(zb_.data());
        const double invn = 1.0 / n_;
        for (int k = 0; k < n_; ++k) {
            const double w = freq_[k];
            std::complex<double> anew, bnew;
            if (model_ == ChainModel::Unpinned) {
                if (k == 0) { anew = za_[k]; bnew = zb_[k]; }
                else {
                    const double c = std::cos(w * t), s = std::sin(w * t) / w;
                    const std::complex<double> a = mix_a_[k];
                    anew = c * za_[k] + s * a * zb_[k];
                    bnew = -s * std::conj(a) * za_[k] + c * zb_[k];
                }
            } else {
                if (w == 0.0) { anew = za_[k] + t * zb_[k]; bnew = zb_[k]; }
                else {
                    const double c = std::cos(w * t), s = std::sin(w * t);
                    anew = c * za_[k] + (s / w) * zb_[k];
                    bnew = -w * s * za_[k] + c * zb_[k];
                }
            }
            za_[k] = anew * invn;
            zb_[k] = bnew * invn;
        }
        fft_.backward(za_.data());
        fft_.backward(zb_.data());
    }

    ChainModel model_;
    double nu_;
    int n_;
    Fft fft_;
    std::vector<std::complex<double>> za_, zb_;
    std::vector<std::complex<double>> mix_a_;
    std::vector<double> freq_;
};

/// Steady covariance of the pinned displacement field at inverse
/// temperature beta: the circulant solve (nu^2 - Lap) G = delta_0 / beta.
inline Vec pinned_position_covariance(double nu, double beta, int n) {
    if (!(nu > 0.0)) throw std::invalid_argument("pinned_position_covariance: nu must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("pinned_position_covariance: beta must be positive");
    Vec g = Vec::Zero(n);
    for (int z = 0; z < n; ++z) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double s = std::sin(std::numbers::pi * k / n);
            acc += std::cos(2.0 * std::numbers::pi * k * z / n) / (nu * nu + 4.0 * s * s);
        }
        g[z] = acc / (beta * n);
    }
    return g;
}

} // namespace flipchain
