#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "flipchain/chain.hpp"
#include "flipchain/errors.hpp"
#include "flipchain/linalg.hpp"
#include "flipchain/profile.hpp"
#include "flipchain/simulate.hpp"

namespace flipchain {

// ---------------------------------------------------------------------------
// Moment state: mean and full second-moment matrix in (positions, momenta)
// stacking. Because flips and the free flow are linear, these two objects
// evolve autonomously along any realized flip schedule.
// ---------------------------------------------------------------------------

struct MomentState {
    Vec mean;   // 2N
    Mat second; // 2N x 2N, E[w w^T]

    int sites() const { return static_cast<int>(mean.size()) / 2; }
    Mat covariance() const { return second - mean * mean.transpose(); }
};

inline void validate_moment_state(const MomentState& ms) {
    const auto dim = ms.mean.size();
    if (dim < 8 || dim % 2 != 0)
        throw std::invalid_argument("moment state: mean must have even length of at least 8");
    if (ms.second.rows() != dim || ms.second.cols() != dim)
        throw std::invalid_argument("moment state: second-moment matrix does not match the mean");
    if (!ms.mean.allFinite() || !ms.second.allFinite())
        throw std::invalid_argument("moment state: entries must be finite");
    const double scale = std::max(1.0, ms.second.cwiseAbs().maxCoeff());
    if ((ms.second - ms.second.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::invalid_argument("moment state: second-moment matrix must be symmetric");
    for (int i = 0; i < dim; ++i) {
        if (ms.second(i, i) - ms.mean[i] * ms.mean[i] < -1e-9 * scale)
            throw std::invalid_argument("moment state: diagonal variance must be nonnegative");
    }
}

/// Product-measure moments with site potentials (beta_x, lambda_x): positions
/// are Gaussian with mean -lambda/beta and variance 1/beta, momenta are
/// centred with the same variance, all sites independent.
inline MomentState gibbs_moments(const PotentialProfile& prof, int n) {
    MomentState ms;
    ms.mean = Vec::Zero(2 * n);
    Vec var(2 * n);
    for (int x = 0; x < n; ++x) {
        const double q = static_cast<double>(x) / n;
        const double b = prof.beta(q);
        const double l = prof.lambda(q);
        if (!(b > 0.0)) throw PhysicsError("gibbs_moments: beta profile must be positive");
        ms.mean[x] = -l / b;
        var[x] = 1.0 / b;
        var[n + x] = 1.0 / b;
    }
    ms.second = var.asDiagonal();
    ms.second += ms.mean * ms.mean.transpose();
    return ms;
}

/// Momentum flip at one site acting on moments: the mean entry changes sign
/// and so does every mixed second moment involving that momentum once.
inline void moment_flip(MomentState& ms, int site) {
    const int n = ms.sites();
    const int k = n + mod_index(site, n);
    ms.mean[k] = -ms.mean[k];
    ms.second.row(k) = -ms.second.row(k);
    ms.second.col(k) = -ms.second.col(k);
}

// ---------------------------------------------------------------------------
// Readouts used when comparing engines.
// ---------------------------------------------------------------------------

inline double site_energy_mean(const MomentState& ms, int x) {
    const int n = ms.sites();
    return 0.5 * (ms.second(n + x, n + x) + ms.second(x, x));
}

inline double energy_current_mean(const MomentState& ms, int x) {
    const int n = ms.sites();
    return ms.second(n + mod_index(x + 1, n), x);
}

inline double deformation_mean(const MomentState& ms, int x) { return ms.mean[x]; }

/// Largest diagonal second moment; the finite constant controlling every
/// polynomial moment bound below.
inline double witness_second_moment(const MomentState& ms) {
    return ms.second.diagonal().maxCoeff();
}

/// Deviation of a moment state from the stationary product family: centred
/// momenta, fully uncorrelated coordinates, and position variance equal to
/// the momentum variance at every site. Returns the largest violation.
inline double stationary_family_violation(const MomentState& ms) {
    const int n = ms.sites();
    double worst = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
        if (i >= n) worst = std::max(worst, std::abs(ms.mean[i]));
        for (int j = 0; j < 2 * n; ++j)
            if (i != j) worst = std::max(worst, std::abs(ms.second(i, j) -
                                                         ms.mean[i] * ms.mean[j]));
    }
    for (int x = 0; x < n; ++x) {
        const double var_r = ms.second(x, x) - ms.mean[x] * ms.mean[x];
        worst = std::max(worst, std::abs(var_r - ms.second(n + x, n + x)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Gaussian moment formulas.
// ---------------------------------------------------------------------------

/// E[X^(2k)] for X ~ N(mean, variance), via the binomial expansion over the
/// centred part. Tiny negative variances from rounding are clamped to zero;
/// anything beyond rounding is rejected.
inline double gaussian_even_moment(double mean, double variance, int k) {
    if (k < 0) throw std::invalid_argument("gaussian_even_moment: k must be nonnegative");
    if (variance < 0.0) {
        if (variance < -1e-12) throw std::domain_error("gaussian_even_moment: negative variance");
        variance = 0.0;
    }
    double total = 0.0;
    for (int j = 0; j <= k; ++j) {
        double dfact = 1.0; // (2j-1)!!
        for (int i = 3; i <= 2 * j - 1; i += 2) dfact *= i;
        double binom = 1.0; // C(2k, 2j)
        for (int i = 1; i <= 2 * j; ++i) binom *= static_cast<double>(2 * k - 2 * j + i) / i;
        total += binom * dfact * std::pow(variance, j) * std::pow(mean, 2 * (k - j));
    }
    return total;
}

/// Site-averaged bound (1/N) sum_x (E[p_x^(2k)] + E[r_x^(2k)]) / 2, an upper
/// bound for the k-th energy moment by convexity of t -> t^k.
inline double energy_moment_bound(const MomentState& ms, int k) {
    const int n = ms.sites();
    double acc = 0.0;
    for (int x = 0; x < n; ++x) {
        const double vr = ms.second(x, x) - ms.mean[x] * ms.mean[x];
        const double vp = ms.second(n + x, n + x) - ms.mean[n + x] * ms.mean[n + x];
        acc += 0.5 * (gaussian_even_moment(ms.mean[x], vr, k) +
                      gaussian_even_moment(ms.mean[n + x], vp, k));
    }
    return acc / n;
}

/// Growth constant in the factorial-type estimate: with every diagonal second
/// moment at most K, the k-th energy moment is at most (C k)^k with C = 4K/e.
inline double energy_moment_growth_constant(double witness_k) { return 4.0 * witness_k / std::exp(1.0); }

// ---------------------------------------------------------------------------
// Schedule-driven moment evolution (the moment Monte Carlo engine's core).
// ---------------------------------------------------------------------------

struct MomentSimulateOptions {
    std::vector<double> snapshot_times;
    double event_ceiling = 1e8;
};

struct MomentTrajectory {
    std::vector<MomentState> snapshots;
    MomentState final_state;
    std::uint64_t flip_count = 0;
};

/// Evolves the conditional moments along one realized flip schedule. Draws
/// its randomness through the same incremental sampler as simulate_chain, so
/// equal seeds see equal schedules across engines.
inline MomentTrajectory simulate_moments(const MomentState& init, double gamma, double horizon,
                                         std::mt19937_64& rng,
                                         const MomentSimulateOptions& opt = {}) {
    validate_moment_state(init);
    if (!(horizon >= 0.0))
        throw std::invalid_argument("simulate_moments: horizon must be nonnegative");
    detail::check_snapshot_times(opt.snapshot_times, horizon);
    const int n = init.sites();
    if (n * gamma * 0.5 * horizon > opt.event_ceiling)
        throw ConfigError("simulate_moments: expected event count exceeds the configured ceiling");

    MomentTrajectory out;
    MomentState ms = init;
    WavePropagator prop(ChainModel::Unpinned, 0.0, n);
    std::size_t snap_i = 0;
    double t = 0.0;
    auto advance_to = [&](double target) {
        if (target > t) {
            prop.flow_vector(ms.mean, target - t);
            prop.flow_matrix(ms.second, target - t);
            t = target;
        }
    };
    auto take_snapshots_through = [&](double upto) {
        while (snap_i < opt.snapshot_times.size() && opt.snapshot_times[snap_i] <= upto) {
            advance_to(opt.snapshot_times[snap_i]);
            out.snapshots.push_back(ms);
            ++snap_i;
        }
    };
    ScheduleDraw draw(n, gamma);
    for (;;) {
        const FlipEvent ev = draw.next(t, rng);
        if (!(ev.time <= horizon)) break;
        take_snapshots_through(ev.time);
        advance_to(ev.time);
        moment_flip(ms, ev.site);
        ++out.flip_count;
    }
    take_snapshots_through(horizon);
    advance_to(horizon);
    out.final_state = std::move(ms);
    return out;
}

// ---------------------------------------------------------------------------
// Expected moments: the deterministic evolution after averaging over flip
// schedules. The drift matrix acts sparsely; the flip average contributes a
// damping of every moment that carries a momentum index an odd number of
// times.
// ---------------------------------------------------------------------------

namespace detail {
inline void apply_drift_rows(const Mat& m, Mat& out) {
    const int n = static_cast<int>(m.rows()) / 2;
    for (int x = 0; x < n; ++x) {
        out.row(x) = m.row(n + mod_index(x + 1, n)) - m.row(n + x);
        out.row(n + x) = m.row(x) - m.row(mod_index(x - 1, n));
    }
}

inline void apply_drift_vec(const Vec& v, Vec& out) {
    const int n = static_cast<int>(v.size()) / 2;
    for (int x = 0; x < n; ++x) {
        out[x] = v[n + mod_index(x + 1, n)] - v[n + x];
        out[n + x] = v[x] - v[mod_index(x - 1, n)];
    }
}

struct MomentOdeRhs {
    int n;
    double gamma;
    Mat scratch;

    MomentOdeRhs(int n_, double gamma_) : n(n_), gamma(gamma_), scratch(2 * n_, 2 * n_) {}

    void operator()(const MomentState& ms, MomentState& d) {
        apply_drift_vec(ms.mean, d.mean);
        for (int x = 0; x < n; ++x) d.mean[n + x] -= gamma * ms.mean[n + x];
        apply_drift_rows(ms.second, scratch);
        d.second = scratch + scratch.transpose();
        // flip damping: -gamma on mixed position-momentum entries, -2 gamma
        // on distinct momentum pairs, none on the momentum diagonal
        d.second.topRightCorner(n, n) -= gamma * ms.second.topRightCorner(n, n);
        d.second.bottomLeftCorner(n, n) -= gamma * ms.second.bottomLeftCorner(n, n);
        d.second.bottomRightCorner(n, n) -= 2.0 * gamma * ms.second.bottomRightCorner(n, n);
        d.second.bottomRightCorner(n, n).diagonal() +=
            2.0 * gamma * ms.second.bottomRightCorner(n, n).diagonal();
    }
};
} // namespace detail

/// Classical fourth-order integration of the expected-moment equations up to
/// `t_final`. Step size defaults to min(0.05, 0.2/gamma) and is shrunk so the
/// horizon is hit exactly.
inline MomentState expected_moment_ode(const MomentState& init, double gamma, double t_final,
                                       double dt = 0.0) {
    validate_moment_state(init);
    if (!(t_final >= 0.0))
        throw std::invalid_argument("expected_moment_ode: t_final must be nonnegative");
    const int n = init.sites();
    if (dt <= 0.0) dt = std::min(0.05, 0.2 / std::max(gamma, 1e-12));
    const int steps = std::max(1, static_cast<int>(std::ceil(t_final / dt)));
    const double h = t_final / steps;
    detail::MomentOdeRhs rhs(n, gamma);

    MomentState y = init;
    MomentState k1, k2, k3, k4, tmp;
    auto alloc = [&](MomentState& m) {
        m.mean = Vec::Zero(2 * n);
        m.second = Mat::Zero(2 * n, 2 * n);
    };
    alloc(k1); alloc(k2); alloc(k3); alloc(k4); alloc(tmp);

    for (int step = 0; step < steps; ++step) {
        rhs(y, k1);
        tmp.mean = y.mean + 0.5 * h * k1.mean;
        tmp.second = y.second + 0.5 * h * k1.second;
        rhs(tmp, k2);
        tmp.mean = y.mean + 0.5 * h * k2.mean;
        tmp.second = y.second + 0.5 * h * k2.second;
        rhs(tmp, k3);
        tmp.mean = y.mean + h * k3.mean;
        tmp.second = y.second + h * k3.second;
        rhs(tmp, k4);
        y.mean += (h / 6.0) * (k1.mean + 2.0 * k2.mean + 2.0 * k3.mean + k4.mean);
        y.second += (h / 6.0) * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
    }
    return y;
}

// ---------------------------------------------------------------------------
// Gaussian mixtures: averaging moment trajectories over schedules produces a
// mixture whose mean and second moments are the plain weighted averages.
// ---------------------------------------------------------------------------

struct GaussianMixture {
    std::vector<double> weight;
    std::vector<MomentState> component;
};

inline MomentState mixture_moments(const GaussianMixture& mix) {
    if (mix.component.empty() || mix.weight.size() != mix.component.size())
        throw std::invalid_argument("mixture_moments: empty or mismatched mixture");
    const auto dim = mix.component.front().mean.size();
    MomentState out;
    out.mean = Vec::Zero(dim);
    out.second = Mat::Zero(dim, dim);
    double wsum = 0.0;
    for (std::size_t i = 0; i < mix.component.size(); ++i) {
        out.mean += mix.weight[i] * mix.component[i].mean;
        out.second += mix.weight[i] * mix.component[i].second;
        wsum += mix.weight[i];
    }
    out.mean /= wsum;
    out.second /= wsum;
    return out;
}

inline double witness_second_moment(const GaussianMixture& mix) {
    double worst = 0.0;
    for (const MomentState& c : mix.component)
        worst = std::max(worst, witness_second_moment(c));
    return worst;
}

/// Draws one particle state from a Gaussian with the given moments; the
/// covariance is factored once per call, with an eigenvalue clamp as the
/// fallback for semidefinite cases.
inline Vec sample_gaussian(const MomentState& ms, std::mt19937_64& rng) {
    const auto dim = ms.mean.size();
    Mat cov = ms.covariance();
    cov = 0.5 * (cov + cov.transpose()).eval();
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec z(dim);
    for (auto i = 0; i < dim; ++i) z[i] = unit(rng);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) return ms.mean + llt.matrixL() * z;
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("sample_gaussian: covariance factorization failed");
    Vec ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return ms.mean + eig.eigenvectors() * ev.asDiagonal() * z;
}

inline Vec sample_mixture(const GaussianMixture& mix, std::mt19937_64& rng) {
    if (mix.component.empty() || mix.weight.size() != mix.component.size())
        throw std::invalid_argument("sample_mixture: empty or mismatched mixture");
    std::discrete_distribution<std::size_t> pick(mix.weight.begin(), mix.weight.end());
    return sample_gaussian(mix.component[pick(rng)], rng);
}

} // namespace flipchain
