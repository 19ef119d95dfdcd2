// Command-line front end for the velocity-flip chain laboratory: stochastic
// and deterministic simulation of the open chain, the hydrodynamic limit
// equations, convergence experiments between the two, and closed-form
// identity verification.
//
// Exit codes: 0 success, 1 a verification check failed, 2 invalid
// configuration or arguments, 3 a physical constraint was violated.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flipchain/chain.hpp"
#include "flipchain/config.hpp"
#include "flipchain/corrected_gibbs.hpp"
#include "flipchain/fluctuation.hpp"
#include "flipchain/harness.hpp"
#include "flipchain/io.hpp"
#include "flipchain/moments.hpp"
#include "flipchain/pde.hpp"
#include "flipchain/profile.hpp"
#include "flipchain/rng.hpp"
#include "flipchain/simulate.hpp"
#include "flipchain/thermo.hpp"

namespace {

using namespace flipchain;
using nlohmann::json;
namespace fs = std::filesystem;

struct CommonOpts {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    bool quiet = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config, "JSON configuration file");
    if (config_required) c->required();
    cmd->add_option("--out", o.out, "output directory (default: out)");
    cmd->add_option("--seed", o.seed, "master seed for all randomness");
    cmd->add_option("--threads", o.threads, "worker threads for ensemble runs");
    cmd->add_flag("--quiet", o.quiet, "suppress progress lines on stdout");
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void write_summary(const CommonOpts& o, json& s, double wall) {
    s["wall_seconds"] = wall;
    atomic_write_file(fs::path(o.out) / "summary.json", s.dump(2) + "\n");
}

void info(const CommonOpts& o, const std::string& line) {
    if (!o.quiet) std::cout << line << "\n";
}

json setup_summary(const ChainSetup& setup) {
    json s;
    s["N"] = setup.n;
    s["gamma"] = setup.gamma;
    s["model"] = setup.model == ChainModel::Pinned ? "pinned" : "unpinned";
    if (setup.model == ChainModel::Pinned) s["nu"] = setup.nu;
    return s;
}

const char* engine_name(Engine e) {
    switch (e) {
        case Engine::Particle: return "particle";
        case Engine::MomentMc: return "moment-mc";
        default: return "expected-ode";
    }
}

// ---------------------------------------------------------------------------
// simulate: ensemble-averaged block profiles under the configured engine.
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& o) {
    Timer timer;
    LabConfig cfg = load_lab_config(o.config);
    if (!cfg.has_plan) throw ConfigError("plan: required for simulate");
    cfg.plan.seed = o.seed;
    cfg.plan.threads = o.threads;

    info(o, "simulate: N=" + std::to_string(cfg.setup.n) + " engine=" +
                engine_name(cfg.plan.engine) + " ensemble=" + std::to_string(cfg.plan.ensemble));
    const ExperimentResult res = run_diffusive_experiment(cfg.setup, cfg.plan);

    CsvBuilder csv("tau,block,q,deformation,energy,current");
    const int blocks = cfg.setup.n / cfg.plan.block_l;
    for (const ProfileSnapshot& snap : res.snapshots) {
        for (int b = 0; b < blocks; ++b) {
            const double q = static_cast<double>(b * cfg.plan.block_l) / cfg.setup.n;
            csv.add_row(format_full(snap.tau) + "," + std::to_string(b) + "," + format_full(q) +
                        "," + format_full(snap.deformation[b]) + "," + format_full(snap.energy[b]) +
                        "," + format_full(snap.current[b]));
        }
    }
    atomic_write_file(fs::path(o.out) / "profiles.csv", csv.str());

    json s = setup_summary(cfg.setup);
    s["command"] = "simulate";
    s["engine"] = engine_name(cfg.plan.engine);
    s["ensemble"] = cfg.plan.ensemble;
    s["block_l"] = cfg.plan.block_l;
    s["times"] = cfg.plan.times;
    s["seed"] = o.seed;
    s["threads"] = o.threads;
    s["total_flips"] = res.total_flips;
    write_summary(o, s, timer.seconds());
    info(o, "simulate: wrote profiles.csv (" + std::to_string(res.snapshots.size()) + " times)");
    return 0;
}

// ---------------------------------------------------------------------------
// moments: deterministic expected-moment evolution with full site readouts.
// ---------------------------------------------------------------------------

int cmd_moments(const CommonOpts& o) {
    Timer timer;
    LabConfig cfg = load_lab_config(o.config);
    if (!cfg.has_plan) throw ConfigError("plan: required for moments");
    if (cfg.setup.model == ChainModel::Pinned)
        throw ConfigError("moments: expected-moment evolution covers the unpinned chain only");
    const int n = cfg.setup.n;

    MomentState ms = gibbs_moments(cfg.setup.profile, n);
    CsvBuilder csv("tau,site,q,deformation,momentum,energy,current");
    double t = 0.0;
    for (double tau : cfg.plan.times) {
        const double target = tau * n * n;
        ms = expected_moment_ode(ms, cfg.setup.gamma, target - t);
        t = target;
        for (int x = 0; x < n; ++x) {
            const double q = static_cast<double>(x) / n;
            csv.add_row(format_full(tau) + "," + std::to_string(x) + "," + format_full(q) + "," +
                        format_full(ms.mean[x]) + "," + format_full(ms.mean[n + x]) + "," +
                        format_full(site_energy_mean(ms, x)) + "," +
                        format_full(energy_current_mean(ms, x)));
        }
    }
    atomic_write_file(fs::path(o.out) / "moments.csv", csv.str());

    json s = setup_summary(cfg.setup);
    s["command"] = "moments";
    s["times"] = cfg.plan.times;
    s["witness_second_moment"] = witness_second_moment(ms);
    s["stationary_family_violation"] = stationary_family_violation(ms);
    write_summary(o, s, timer.seconds());
    info(o, "moments: wrote moments.csv");
    return 0;
}

// ---------------------------------------------------------------------------
// pde: hydrodynamic evolution with conservation and entropy diagnostics.
// ---------------------------------------------------------------------------

int cmd_pde(const CommonOpts& o) {
    Timer timer;
    LabConfig cfg = load_lab_config(o.config);
    if (!cfg.has_pde) throw ConfigError("pde: required for the pde command");

    HydroFields f = fields_from_profile(cfg.setup.profile, cfg.pde.grid);
    HydroSolver solver(cfg.pde.grid, cfg.setup.gamma, cfg.pde.scheme);
    const double mean_r0 = mean_deformation(f);
    const double mean_e0 = mean_energy(f);
    const double entropy0 = entropy_total(f);

    const int steps = std::max(
        1, static_cast<int>(std::ceil(cfg.pde.t_final / cfg.pde.dt - 1e-12)));
    const double h = cfg.pde.t_final / steps;
    double min_temp = min_temperature(f);
    double production = 0.0;
    double rate_prev = entropy_production_rate(f, cfg.setup.gamma);
    for (int i = 0; i < steps; ++i) {
        solver.step(f, h);
        const double rate = entropy_production_rate(f, cfg.setup.gamma);
        production += 0.5 * h * (rate_prev + rate);
        rate_prev = rate;
        min_temp = std::min(min_temp, min_temperature(f));
    }

    CsvBuilder csv("q,deformation,energy,temperature");
    const Vec temp = temperature_field(f);
    for (int i = 0; i < cfg.pde.grid; ++i) {
        const double q = static_cast<double>(i) / cfg.pde.grid;
        csv.add_row(format_full(q) + "," + format_full(f.deformation[i]) + "," +
                    format_full(f.energy[i]) + "," + format_full(temp[i]));
    }
    atomic_write_file(fs::path(o.out) / "fields.csv", csv.str());

    json s = setup_summary(cfg.setup);
    s["command"] = "pde";
    s["grid"] = cfg.pde.grid;
    s["scheme"] = cfg.pde.scheme == PdeScheme::ExplicitFlux ? "explicit" : "spectral";
    s["dt"] = h;
    s["steps"] = steps;
    s["t_final"] = cfg.pde.t_final;
    s["drift_deformation"] = std::abs(mean_deformation(f) - mean_r0);
    s["drift_energy"] = std::abs(mean_energy(f) - mean_e0);
    s["min_temperature"] = min_temp;
    s["entropy_initial"] = entropy0;
    s["entropy_final"] = entropy_total(f);
    s["entropy_production_integral"] = production;
    write_summary(o, s, timer.seconds());
    info(o, "pde: wrote fields.csv after " + std::to_string(steps) + " steps");
    return 0;
}

// ---------------------------------------------------------------------------
// converge: weak error of the expected-moment chain against the limit
// equations over a doubling ladder of chain sizes.
// ---------------------------------------------------------------------------

int cmd_converge(const CommonOpts& o) {
    Timer timer;
    LabConfig cfg = load_lab_config(o.config);
    if (!cfg.has_plan) throw ConfigError("plan: required for converge");
    if (!cfg.has_pde) throw ConfigError("pde: required for converge");
    if (cfg.setup.model == ChainModel::Pinned)
        throw ConfigError("converge: the ladder covers the unpinned chain only");

    const std::vector<int> sizes = {cfg.setup.n, 2 * cfg.setup.n, 4 * cfg.setup.n};
    struct TestFn {
        const char* name;
        std::function<double(double)> fn;
    };
    const std::vector<TestFn> test_fns = {
        {"one", [](double) { return 1.0; }},
        {"cos1", [](double q) { return std::cos(2.0 * std::numbers::pi * q); }},
        {"sin1", [](double q) { return std::sin(2.0 * std::numbers::pi * q); }},
    };

    // macroscopic reference, evolved once across the output times
    HydroSolver solver(cfg.pde.grid, cfg.setup.gamma, cfg.pde.scheme);
    HydroFields ref = fields_from_profile(cfg.setup.profile, cfg.pde.grid);
    std::vector<HydroFields> ref_at;
    double t = 0.0;
    for (double tau : cfg.plan.times) {
        solver.evolve(ref, tau - t, cfg.pde.dt);
        t = tau;
        ref_at.push_back(ref);
    }

    CsvBuilder csv("N,tau,test_fn,field,weak_error");
    // errors[field][fn] per size, at the final output time
    std::vector<std::vector<double>> final_err(2, std::vector<double>(test_fns.size()));
    std::vector<std::vector<std::vector<double>>> all_err(
        sizes.size(),
        std::vector<std::vector<double>>(2, std::vector<double>(test_fns.size(), 0.0)));

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        ChainSetup setup = cfg.setup;
        setup.n = sizes[si];
        ExperimentPlan plan = cfg.plan;
        plan.engine = Engine::ExpectedOde;
        plan.ensemble = 1;
        plan.block_l = 1;
        plan.seed = o.seed;
        plan.threads = 1;
        const ExperimentResult res = run_diffusive_experiment(setup, plan);
        for (std::size_t ti = 0; ti < cfg.plan.times.size(); ++ti) {
            for (std::size_t fi = 0; fi < test_fns.size(); ++fi) {
                const double err_e =
                    weak_error(test_fns[fi].fn, res.snapshots[ti].energy, ref_at[ti].energy);
                const double err_r = weak_error(test_fns[fi].fn, res.snapshots[ti].deformation,
                                                ref_at[ti].deformation);
                csv.add_row(std::to_string(sizes[si]) + "," + format_full(cfg.plan.times[ti]) +
                            "," + test_fns[fi].name + ",energy," + format_full(err_e));
                csv.add_row(std::to_string(sizes[si]) + "," + format_full(cfg.plan.times[ti]) +
                            "," + test_fns[fi].name + ",deformation," + format_full(err_r));
                if (ti + 1 == cfg.plan.times.size()) {
                    all_err[si][0][fi] = err_e;
                    all_err[si][1][fi] = err_r;
                }
            }
        }
        info(o, "converge: finished N=" + std::to_string(sizes[si]));
    }
    atomic_write_file(fs::path(o.out) / "converge.csv", csv.str());

    // trend: the largest chain must not be worse than the smallest, with a
    // floor guarding pairings that are already at round-off
    bool trend_ok = true;
    json trend = json::array();
    for (std::size_t fld = 0; fld < 2; ++fld) {
        for (std::size_t fi = 0; fi < test_fns.size(); ++fi) {
            const double first = all_err.front()[fld][fi];
            const double last = all_err.back()[fld][fi];
            const double floor = 1e-9;
            const bool ok = last <= std::max(first, floor);
            trend_ok = trend_ok && ok;
            json row;
            row["field"] = fld == 0 ? "energy" : "deformation";
            row["test_fn"] = test_fns[fi].name;
            row["error_smallest"] = first;
            row["error_largest"] = last;
            row["ok"] = ok;
            trend.push_back(row);
        }
    }

    json s = setup_summary(cfg.setup);
    s["command"] = "converge";
    s["sizes"] = sizes;
    s["times"] = cfg.plan.times;
    s["grid"] = cfg.pde.grid;
    s["trend"] = trend;
    s["trend_ok"] = trend_ok;
    write_summary(o, s, timer.seconds());
    info(o, std::string("converge: trend ") + (trend_ok ? "ok" : "FAILED"));
    return trend_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify-identities: closed-form structure checks at randomized inputs.
// ---------------------------------------------------------------------------

int cmd_verify(const CommonOpts& o) {
    Timer timer;
    std::mt19937_64 rng = make_engine(o.seed);
    std::uniform_real_distribution<double> ubeta(0.2, 5.0);
    std::uniform_real_distribution<double> ulam(-2.0, 2.0);
    std::uniform_real_distribution<double> ustate(-1.5, 1.5);
    std::uniform_real_distribution<double> ugamma(0.3, 2.5);

    int failures = 0;
    auto report = [&](const std::string& name, double worst, double tol) {
        const bool ok = worst <= tol;
        if (!ok) ++failures;
        std::cout << (ok ? "[OK]   " : "[FAIL] ") << name << "  worst=" << format_full(worst)
                  << "  tol=" << format_full(tol) << "\n";
    };

    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const GibbsParams g{ubeta(rng), ulam(rng)};
        const StateAverages a = averages_from_potentials(g);
        worst = std::max(worst, std::abs(duality_gap(a)));
    }
    report("entropy-pressure duality gap", worst, 1e-12);

    worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const StateAverages eta = averages_from_potentials(GibbsParams{ubeta(rng), ulam(rng)});
        const StateAverages z = averages_from_potentials(GibbsParams{ubeta(rng), ulam(rng)});
        const double rate = rate_function(z, eta);
        worst = std::max(worst, std::abs(rate_function(eta, eta)));
        if (rate < rate_function_lower_bound(z, eta) - 1e-12) worst = std::max(worst, 1.0);
    }
    report("rate function zero and quadratic minorant", worst, 1e-12);

    worst = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        const int n = rep % 2 == 0 ? 8 : 16;
        const double gamma = ugamma(rng);
        ChainState s;
        s.model = ChainModel::Unpinned;
        s.pos = Vec(n);
        s.mom = Vec(n);
        for (int x = 0; x < n; ++x) {
            s.pos[x] = ustate(rng);
            s.mom[x] = ustate(rng);
        }
        worst = std::max(worst, max_fd_residual(s, gamma));
    }
    report("fluctuation-dissipation decomposition residual", worst, 1e-10);

    worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const double b = ubeta(rng), l = ulam(rng), gamma = ugamma(rng);
        const PotentialProfile prof{series_profile(b, {}, {}), series_profile(l, {}, {})};
        const int n = 16;
        const CorrectedGibbs cg = build_corrected_gibbs(prof, n, gamma);
        worst = std::max(worst,
                         std::abs(log_partition_corrected(cg) - product_log_partition(prof, n)));
    }
    report("corrected state collapses to the product state", worst, 1e-8);

    worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 4 + 4 * (rep % 4);
        ChainState s;
        s.model = ChainModel::Unpinned;
        s.pos = Vec(n);
        s.mom = Vec(n);
        for (int x = 0; x < n; ++x) {
            s.pos[x] = ustate(rng);
            s.mom[x] = ustate(rng);
        }
        const ConservedTotals before = conserved_totals(s);
        WavePropagator prop(ChainModel::Unpinned, 0.0, n);
        prop.flow(s, 0.7 + rep * 0.13);
        const ConservedTotals after = conserved_totals(s);
        worst = std::max(worst, std::abs(*after.deformation - *before.deformation));
        worst = std::max(worst, std::abs(after.energy - before.energy));
    }
    report("free flow conserves deformation and energy", worst, 1e-10);

    json s;
    s["command"] = "verify-identities";
    s["seed"] = o.seed;
    s["failures"] = failures;
    write_summary(o, s, timer.seconds());
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// fit-diffusivity: decay of the first energy mode against the closed form.
// ---------------------------------------------------------------------------

int cmd_fit(const CommonOpts& o) {
    Timer timer;
    LabConfig cfg = load_lab_config(o.config);
    if (!cfg.has_plan) throw ConfigError("plan: required for fit-diffusivity");
    cfg.plan.seed = o.seed;
    cfg.plan.threads = o.threads;

    info(o, std::string("fit-diffusivity: engine=") + engine_name(cfg.plan.engine) +
                " ensemble=" + std::to_string(cfg.plan.ensemble));
    const ExperimentResult res = run_diffusive_experiment(cfg.setup, cfg.plan);

    std::vector<double> taus, amps;
    CsvBuilder csv("tau,amplitude");
    for (const ProfileSnapshot& snap : res.snapshots) {
        const double amp = mode_amplitude(snap.energy, 1);
        taus.push_back(snap.tau);
        amps.push_back(amp);
        csv.add_row(format_full(snap.tau) + "," + format_full(amp));
    }
    atomic_write_file(fs::path(o.out) / "fit.csv", csv.str());

    const DiffusivityFit fit = fit_diffusivity(taus, amps);
    const double reference = pinned_diffusivity(cfg.setup.nu, cfg.setup.gamma);

    json s = setup_summary(cfg.setup);
    s["command"] = "fit-diffusivity";
    s["engine"] = engine_name(cfg.plan.engine);
    s["ensemble"] = cfg.plan.ensemble;
    s["seed"] = o.seed;
    s["threads"] = o.threads;
    s["diffusivity"] = fit.diffusivity;
    s["std_error"] = fit.std_error;
    s["slope"] = fit.slope;
    s["reference"] = reference;
    if (fit.std_error > 0.0) s["deviation_sigma"] = (fit.diffusivity - reference) / fit.std_error;
    write_summary(o, s, timer.seconds());
    info(o, "fit-diffusivity: D=" + format_full(fit.diffusivity) + "  reference=" +
                format_full(reference));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification suite for the velocity-flip oscillator chain"};
    app.require_subcommand(1);

    CommonOpts o_sim, o_mom, o_pde, o_conv, o_ver, o_fit;
    CLI::App* c_sim = app.add_subcommand("simulate", "ensemble block profiles under a chosen engine");
    add_common_options(c_sim, o_sim, true);
    CLI::App* c_mom = app.add_subcommand("moments", "deterministic expected-moment evolution");
    add_common_options(c_mom, o_mom, true);
    CLI::App* c_pde = app.add_subcommand("pde", "hydrodynamic limit equations with diagnostics");
    add_common_options(c_pde, o_pde, true);
    CLI::App* c_conv = app.add_subcommand("converge", "weak error ladder chain vs limit equations");
    add_common_options(c_conv, o_conv, true);
    CLI::App* c_ver = app.add_subcommand("verify-identities", "closed-form identity battery");
    add_common_options(c_ver, o_ver, false);
    CLI::App* c_fit = app.add_subcommand("fit-diffusivity", "fit mode-one energy decay");
    add_common_options(c_fit, o_fit, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(o_sim);
        if (c_mom->parsed()) return cmd_moments(o_mom);
        if (c_pde->parsed()) return cmd_pde(o_pde);
        if (c_conv->parsed()) return cmd_converge(o_conv);
        if (c_ver->parsed()) return cmd_verify(o_ver);
        if (c_fit->parsed()) return cmd_fit(o_fit);
    } catch (const flipchain::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const flipchain::PhysicsError& e) {
        std::cerr << "physics violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
