#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>

#include "flipchain/chain.hpp"
#include "flipchain/errors.hpp"
#include "flipchain/linalg.hpp"
#include "flipchain/moments.hpp"
#include "flipchain/profile.hpp"
#include "flipchain/rng.hpp"
#include "flipchain/simulate.hpp"
#include "flipchain/stats.hpp"

namespace flipchain {

// ---------------------------------------------------------------------------
// Initial ensembles.
// ---------------------------------------------------------------------------

/// Product local equilibrium for the unpinned chain: every momentum is
/// centred Gaussian with variance 1/beta_x, every stretch is Gaussian with
/// mean -lambda_x/beta_x and the same variance.
inline ChainState build_local_equilibrium(const PotentialProfile& prof, int n,
                                          std::mt19937_64& rng) {
    ChainState s;
    s.model = ChainModel::Unpinned;
    s.nu = 0.0;
    s.pos = Vec(n);
    s.mom = Vec(n);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int x = 0; x < n; ++x) {
        const double q = static_cast<double>(x) / n;
        const double b = prof.beta(q);
        const double l = prof.lambda(q);
        if (!(b > 0.0)) throw PhysicsError("local equilibrium: beta profile must be positive");
        const double sd = 1.0 / std::sqrt(b);
        s.pos[x] = -l / b + sd * unit(rng);
        s.mom[x] = sd * unit(rng);
    }
    return s;
}

/// Gibbs positions of the pinned chain with a site-dependent temperature
/// profile: the position block is Gaussian with the pentadiagonal-free
/// (tridiagonal circulant-like) precision assembled from the local inverse
/// temperatures; momenta stay product Gaussians.
inline ChainState build_pinned_local_equilibrium(const ScalarProfile& beta, double nu, int n,
                                                 std::mt19937_64& rng) {
    if (!(nu > 0.0))
        throw std::invalid_argument("pinned local equilibrium: nu must be positive");
    Vec b(n);
    for (int x = 0; x < n; ++x) {
        b[x] = beta(static_cast<double>(x) / n);
        if (!(b[x] > 0.0)) throw PhysicsError("pinned local equilibrium: beta must be positive");
    }
    Mat prec = Mat::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        const int xp = mod_index(x + 1, n);
        const int xm = mod_index(x - 1, n);
        prec(x, x) = nu * nu * b[x] + 0.5 * (b[xm] + 2.0 * b[x] + b[xp]);
        prec(x, xp) -= 0.5 * (b[x] + b[xp]);
        prec(x, xm) -= 0.5 * (b[x] + b[xm]);
    }
    Eigen::LLT<Mat> llt(prec);
    if (llt.info() != Eigen::Success)
        throw PhysicsError("pinned local equilibrium: precision matrix is not positive definite");

    ChainState s;
    s.model = ChainModel::Pinned;
    s.nu = nu;
    s.pos = Vec(n);
    s.mom = Vec(n);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec z(n);
    for (int x = 0; x < n; ++x) z[x] = unit(rng);
    s.pos = llt.matrixL().transpose().solve(z);
    for (int x = 0; x < n; ++x) s.mom[x] = unit(rng) / std::sqrt(b[x]);
    return s;
}

// ---------------------------------------------------------------------------
// Block averages with an energy cutoff.
// ---------------------------------------------------------------------------

struct BlockAverages {
    Vec deformation; // length n / block_l (positions for the pinned chain)
    Vec energy;
    Vec current; // energy current, unpinned only; zeros otherwise
};

inline BlockAverages empirical_block_average(const ChainState& s, int block_l, double cutoff_m) {
    const int n = s.size();
    if (block_l < 1 || n % block_l != 0)
        throw ConfigError("block average: block length must divide the chain size");
    const int blocks = n / block_l;
    BlockAverages out;
    out.deformation = Vec::Zero(blocks);
    out.energy = Vec::Zero(blocks);
    out.current = Vec::Zero(blocks);
    const bool unpinned = s.model == ChainModel::Unpinned;
    for (int x = 0; x < n; ++x) {
        const double e = site_energy(s, x);
        const double keep = e <= cutoff_m ? 1.0 : 0.0;
        const int blk = x / block_l;
        out.deformation[blk] += keep * s.pos[x];
        out.energy[blk] += keep * e;
        if (unpinned) out.current[blk] += keep * s.mom[mod_index(x + 1, n)] * s.pos[x];
    }
    out.deformation /= block_l;
    out.energy /= block_l;
    out.current /= block_l;
    return out;
}

// ---------------------------------------------------------------------------
// Diffusive-scale experiments.
// ---------------------------------------------------------------------------

enum class Engine { Particle, MomentMc, ExpectedOde };

struct ChainSetup {
    ChainModel model = ChainModel::Unpinned;
    double nu = 0.0;
    int n = 0;
    double gamma = 1.0;
    PotentialProfile profile; // pinned runs read beta only
};

struct ExperimentPlan {
    std::vector<double> times; // macroscopic, ascending; micro time is tau n^2
    int ensemble = 1;
    int block_l = 1;
    double cutoff_m = std::numeric_limits<double>::infinity();
    Engine engine = Engine::Particle;
    double max_events = 1e8;
    int threads = 1;
    std::uint64_t seed = 1;
};

struct ProfileSnapshot {
    double tau;
    Vec deformation;
    Vec energy;
    Vec current;
};

struct ExperimentResult {
    std::vector<ProfileSnapshot> snapshots;
    std::uint64_t total_flips = 0;
};

namespace detail {

inline void validate_plan(const ChainSetup& setup, const ExperimentPlan& plan) {
    if (setup.n < 4) throw ConfigError("experiment: chain size must be at least 4");
    if (!(setup.gamma > 0.0)) throw ConfigError("experiment: gamma must be positive");
    if (setup.model == ChainModel::Pinned && !(setup.nu > 0.0))
        throw ConfigError("experiment: pinned model requires positive nu");
    if (plan.times.empty()) throw ConfigError("experiment: at least one output time required");
    double prev = 0.0;
    for (double t : plan.times) {
        if (!(t >= prev)) throw ConfigError("experiment: times must be ascending and nonnegative");
        prev = t;
    }
    if (plan.ensemble < 1) throw ConfigError("experiment: ensemble must be positive");
    if (plan.block_l < 1 || setup.n % plan.block_l != 0)
        throw ConfigError("experiment: block length must divide the chain size");
    if (plan.threads < 1) throw ConfigError("experiment: threads must be positive");
    const bool moment_engine = plan.engine != Engine::Particle;
    if (moment_engine && std::isfinite(plan.cutoff_m))
        throw ConfigError("experiment: the energy cutoff applies to the particle engine only");
    if (moment_engine && setup.model == ChainModel::Pinned)
        throw ConfigError("experiment: moment engines cover the unpinned chain only");
    const double horizon = plan.times.back() * setup.n * setup.n;
    const double expected =
        (plan.engine == Engine::ExpectedOde ? 1.0 : static_cast<double>(plan.ensemble)) *
        setup.n * setup.gamma * 0.5 * horizon;
    if (expected > plan.max_events)
        throw ConfigError("experiment: expected event budget exceeded; raise max_events or shrink the plan");
}

struct Accumulator {
    std::vector<Vec> deformation, energy, current;
    std::uint64_t flips = 0;

    Accumulator(std::size_t times, int blocks) {
        deformation.assign(times, Vec::Zero(blocks));
        energy.assign(times, Vec::Zero(blocks));
        current.assign(times, Vec::Zero(blocks));
    }
    void add(std::size_t s, const BlockAverages& b) {
        deformation[s] += b.deformation;
        energy[s] += b.energy;
        current[s] += b.current;
    }
    void merge(const Accumulator& o) {
        for (std::size_t s = 0; s < deformation.size(); ++s) {
            deformation[s] += o.deformation[s];
            energy[s] += o.energy[s];
            current[s] += o.current[s];
        }
        flips += o.flips;
    }
};

inline BlockAverages moment_block_average(const MomentState& ms, int block_l) {
    const int n = ms.sites();
    const int blocks = n / block_l;
    BlockAverages out;
    out.deformation = Vec::Zero(blocks);
    out.energy = Vec::Zero(blocks);
    out.current = Vec::Zero(blocks);
    for (int x = 0; x < n; ++x) {
        const int blk = x / block_l;
        out.deformation[blk] += deformation_mean(ms, x);
        out.energy[blk] += site_energy_mean(ms, x);
        out.current[blk] += energy_current_mean(ms, x);
    }
    out.deformation /= block_l;
    out.energy /= block_l;
    out.current /= block_l;
    return out;
}

} // namespace detail

/// Runs the chosen engine over the diffusively rescaled time grid and returns
/// ensemble-averaged block profiles per output time. Per-trajectory seeds are
/// derived from the plan seed by counter, and partial sums merge in a fixed
/// order, so results are reproducible for a given thread count.
inline ExperimentResult run_diffusive_experiment(const ChainSetup& setup,
                                                 const ExperimentPlan& plan) {
    detail::validate_plan(setup, plan);
    const int n = setup.n;
    const int blocks = n / plan.block_l;
    const std::size_t nt = plan.times.size();
    std::vector<double> micro_times(nt);
    for (std::size_t s = 0; s < nt; ++s) micro_times[s] = plan.times[s] * n * n;
    const double horizon = micro_times.back();

    ExperimentResult out;
    out.snapshots.resize(nt);
    for (std::size_t s = 0; s < nt; ++s) out.snapshots[s].tau = plan.times[s];

    if (plan.engine == Engine::ExpectedOde) {
        MomentState ms = gibbs_moments(setup.profile, n);
        double t = 0.0;
        for (std::size_t s = 0; s < nt; ++s) {
            ms = expected_moment_ode(ms, setup.gamma, micro_times[s] - t);
            t = micro_times[s];
            const BlockAverages b = detail::moment_block_average(ms, plan.block_l);
            out.snapshots[s].deformation = b.deformation;
            out.snapshots[s].energy = b.energy;
            out.snapshots[s].current = b.current;
        }
        return out;
    }

    const int workers = std::min(plan.threads, plan.ensemble);
    std::vector<detail::Accumulator> acc(workers, detail::Accumulator(nt, blocks));

    auto run_particle = [&](int traj, detail::Accumulator& a) {
        std::mt19937_64 rng = make_engine(derive_seed(plan.seed, traj));
        ChainState init = setup.model == ChainModel::Unpinned
                              ? build_local_equilibrium(setup.profile, n, rng)
                              : build_pinned_local_equilibrium(setup.profile.beta, setup.nu, n, rng);
        SimulateOptions opt;
        opt.snapshot_times = micro_times;
        opt.record_schedule = false;
        opt.event_ceiling = plan.max_events;
        const ChainTrajectory traj_out = simulate_chain(init, setup.gamma, horizon, rng, opt);
        for (std::size_t s = 0; s < nt; ++s)
            a.add(s, empirical_block_average(traj_out.snapshots[s], plan.block_l, plan.cutoff_m));
        a.flips += traj_out.flip_count;
    };

    auto run_moment = [&](int traj, detail::Accumulator& a) {
        std::mt19937_64 rng = make_engine(derive_seed(plan.seed, traj));
        MomentState init = gibbs_moments(setup.profile, n);
        MomentSimulateOptions opt;
        opt.snapshot_times = micro_times;
        opt.event_ceiling = plan.max_events;
        const MomentTrajectory traj_out = simulate_moments(init, setup.gamma, horizon, rng, opt);
        for (std::size_t s = 0; s < nt; ++s)
            a.add(s, detail::moment_block_average(traj_out.snapshots[s], plan.block_l));
        a.flips += traj_out.flip_count;
    };

    auto worker_body = [&](int w) {
        const int per = plan.ensemble / workers;
        const int extra = plan.ensemble % workers;
        const int begin = w * per + std::min(w, extra);
        const int end = begin + per + (w < extra ? 1 : 0);
        for (int traj = begin; traj < end; ++traj) {
            if (plan.engine == Engine::Particle)
                run_particle(traj, acc[w]);
            else
                run_moment(traj, acc[w]);
        }
    };

    if (workers == 1) {
        worker_body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_body, w);
        for (auto& th : pool) th.join();
    }
    for (int w = 1; w < workers; ++w) acc[0].merge(acc[w]);

    const double inv = 1.0 / plan.ensemble;
    for (std::size_t s = 0; s < nt; ++s) {
        out.snapshots[s].deformation = inv * acc[0].deformation[s];
        out.snapshots[s].energy = inv * acc[0].energy[s];
        out.snapshots[s].current = inv * acc[0].current[s];
    }
    out.total_flips = acc[0].flips;
    return out;
}

// ---------------------------------------------------------------------------
// Comparisons against macroscopic references.
// ---------------------------------------------------------------------------

/// Difference of the test-function pairings of an empirical block profile and
/// a reference grid field, each averaged over its own grid.
inline double weak_error(const std::function<double(double)>& test_fn, const Vec& empirical,
                         const Vec& reference) {
    if (empirical.size() == 0 || reference.size() == 0)
        throw std::invalid_argument("weak_error: empty profile");
    double a = 0.0;
    for (int i = 0; i < empirical.size(); ++i)
        a += test_fn(static_cast<double>(i) / empirical.size()) * empirical[i];
    a /= empirical.size();
    double b = 0.0;
    for (int i = 0; i < reference.size(); ++i)
        b += test_fn(static_cast<double>(i) / reference.size()) * reference[i];
    b /= reference.size();
    return std::abs(a - b);
}

/// Amplitude of the k-th Fourier mode of a sampled profile, normalized so a
/// pure cosine of unit amplitude reports 1.
inline double mode_amplitude(const Vec& profile, int k) {
    const int m = static_cast<int>(profile.size());
    double re = 0.0, im = 0.0;
    for (int i = 0; i < m; ++i) {
        const double ph = 2.0 * std::numbers::pi * k * i / m;
        re += profile[i] * std::cos(ph);
        im -= profile[i] * std::sin(ph);
    }
    return 2.0 * std::hypot(re, im) / m;
}

struct DiffusivityFit {
    double diffusivity;
    double std_error;
    double slope;
};

/// Least-squares fit of log amplitude against macroscopic time; the decay of
/// the first Fourier mode of the energy profile gives the diffusivity as
/// -slope/(2 pi)^2.
inline DiffusivityFit fit_diffusivity(const std::vector<double>& times,
                                      const std::vector<double>& amplitudes) {
    if (times.size() != amplitudes.size() || times.size() < 3)
        throw ConfigError("fit_diffusivity: at least three amplitude samples required");
    std::vector<double> logs(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(amplitudes[i] > 0.0))
            throw ConfigError("fit_diffusivity: amplitudes must stay positive over the fit window");
        logs[i] = std::log(amplitudes[i]);
    }
    const LineFit fit = linear_fit(times, logs);
    const double w = 4.0 * std::numbers::pi * std::numbers::pi;
    return {-fit.slope / w, fit.slope_se / w, fit.slope};
}

} // namespace flipchain
