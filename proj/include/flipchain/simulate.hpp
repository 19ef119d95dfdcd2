#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "flipchain/chain.hpp"
#include "flipchain/errors.hpp"

namespace flipchain {

struct FlipEvent {
    double time;
    int site;
};
using FlipSchedule = std::vector<FlipEvent>;

/// Incremental sampler of the flip point process: total rate N*gamma/2,
/// site chosen uniformly. Both the particle and the moment engines consume
/// randomness through this one object, so a shared seed yields the same
/// schedule in either engine.
class ScheduleDraw {
public:
    ScheduleDraw(int n, double gamma) : n_(n), rate_(n * gamma * 0.5), site_(0, n - 1) {
        if (!(gamma >= 0.0)) throw std::invalid_argument("ScheduleDraw: gamma must be nonnegative");
    }

    double rate() const { return rate_; }

    /// Next event strictly after `now`; time may exceed any horizon, callers
    /// decide when to stop.
    FlipEvent next(double now, std::mt19937_64& rng) {
        if (rate_ == 0.0) return {std::numeric_limits<double>::infinity(), 0};
        std::exponential_distribution<double> gap(rate_);
        const double t = now + gap(rng);
        return {t, site_(rng)};
    }

private:
    int n_;
    double rate_;
    std::uniform_int_distribution<int> site_;
};

/// Full schedule on [0, T]; used by replay tests and exposed by engines.
inline FlipSchedule draw_flip_schedule(int n, double gamma, double horizon, std::mt19937_64& rng) {
    ScheduleDraw draw(n, gamma);
    FlipSchedule sched;
    double t = 0.0;
    for (;;) {
        const FlipEvent ev = draw.next(t, rng);
        if (!(ev.time <= horizon)) break;
        sched.push_back(ev);
        t = ev.time;
    }
    return sched;
}

struct SimulateOptions {
    std::vector<double> snapshot_times; // ascending, within [0, horizon]
    double event_ceiling = 1e8;         // refuse runs expected to exceed this
    bool stepped = false;               // batched-flip fixed-step mode
    double stepped_dt = 0.0;            // 0 = auto (about 8 flips per step)
    bool record_schedule = true;
};

struct ChainTrajectory {
    std::vector<ChainState> snapshots;
    FlipSchedule schedule;
    ChainState final_state;
    std::uint64_t flip_count = 0;
};

namespace detail {
inline void check_snapshot_times(const std::vector<double>& ts, double horizon) {
    double prev = 0.0;
    for (double t : ts) {
        if (t < prev || t > horizon)
            throw std::invalid_argument("snapshot times must be ascending within [0, horizon]");
        prev = t;
    }
}
} // namespace detail

/// Event-driven dynamics: exact free flow between flips, momentum sign flip
/// at exponential event times. In stepped mode the flow is applied once per
/// fixed step and the Poisson-thinned flips of that step are applied at the
/// step boundary; event-driven mode is exact in distribution.
inline ChainTrajectory simulate_chain(const ChainState& init, double gamma, double horizon,
                                      std::mt19937_64& rng, const SimulateOptions& opt = {}) {
    init.validate();
    if (!(horizon >= 0.0)) throw std::invalid_argument("simulate_chain: horizon must be nonnegative");
    detail::check_snapshot_times(opt.snapshot_times, horizon);
    const int n = init.size();
    const double expected_events = n * gamma * 0.5 * horizon;
    if (!opt.stepped && expected_events > opt.event_ceiling)
        throw ConfigError("simulate_chain: expected event count exceeds the configured ceiling");

    ChainTrajectory out;
    ChainState s = init;
    WavePropagator prop(init.model, init.nu, n);
    std::size_t snap_i = 0;
    double t = 0.0;

    auto take_snapshots_through = [&](double upto) {
        while (snap_i < opt.snapshot_times.size() && opt.snapshot_times[snap_i] <= upto) {
            const double ts = opt.snapshot_times[snap_i];
            if (ts > t) { prop.flow(s, ts - t); t = ts; }
            out.snapshots.push_back(s);
            ++snap_i;
        }
    };

    if (opt.stepped) {
        double dt = opt.stepped_dt;
        if (dt <= 0.0) {
            const double rate = std::max(n * gamma * 0.5, 1e-300);
            dt = std::min(horizon > 0 ? horizon : 1.0, 8.0 / rate);
        }
        std::poisson_distribution<int> flips_per(dt * n * gamma * 0.5);
        std::uniform_int_distribution<int> site(0, n - 1);
        while (t < horizon) {
            double target = std::min(t + dt, horizon);
            if (snap_i < opt.snapshot_times.size())
                target = std::min(target, opt.snapshot_times[snap_i]);
            const double h = target - t;
            std::poisson_distribution<int> k_dist(h * n * gamma * 0.5);
            const int k = h == dt ? flips_per(rng) : k_dist(rng);
            prop.flow(s, h);
            t = target;
            for (int j = 0; j < k; ++j) flip_momentum(s, site(rng));
            out.flip_count += static_cast<std::uint64_t>(k);
            take_snapshots_through(t);
        }
    } else {
        ScheduleDraw draw(n, gamma);
        for (;;) {
            const FlipEvent ev = draw.next(t, rng);
            if (!(ev.time <= horizon)) break;
            take_snapshots_through(ev.time);
            if (ev.time > t) { prop.flow(s, ev.time - t); t = ev.time; }
            flip_momentum(s, ev.site);
            ++out.flip_count;
            if (opt.record_schedule) out.schedule.push_back(ev);
        }
    }
    take_snapshots_through(horizon);
    if (t < horizon) prop.flow(s, horizon - t);
    out.final_state = std::move(s);
    return out;
}

/// Deterministic replay of a recorded schedule; flow segmentation matches
/// simulate_chain exactly when the same snapshot times are requested, so the
/// composed map reproduces the original trajectory bit for bit.
inline ChainTrajectory replay_chain(const ChainState& init, const FlipSchedule& sched,
                                    double horizon, const std::vector<double>& snapshot_times = {}) {
    init.validate();
    detail::check_snapshot_times(snapshot_times, horizon);
    ChainTrajectory out;
    ChainState s = init;
    WavePropagator prop(init.model, init.nu, s.size());
    std::size_t snap_i = 0;
    double t = 0.0;
    auto take_snapshots_through = [&](double upto) {
        while (snap_i < snapshot_times.size() && snapshot_times[snap_i] <= upto) {
            const double ts = snapshot_times[snap_i];
            if (ts > t) { prop.flow(s, ts - t); t = ts; }
            out.snapshots.push_back(s);
            ++snap_i;
        }
    };
    for (const FlipEvent& ev : sched) {
        if (ev.time > horizon) break;
        take_snapshots_through(ev.time);
        if (ev.time > t) { prop.flow(s, ev.time - t); t = ev.time; }
        flip_momentum(s, ev.site);
        ++out.flip_count;
    }
    take_snapshots_through(horizon);
    if (t < horizon) prop.flow(s, horizon - t);
    out.final_state = std::move(s);
    out.schedule = sched;
    return out;
}

} // namespace flipchain
