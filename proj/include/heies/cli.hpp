#pragma once

// Command-line front end. Exit codes: 0 ok, 2 invalid input, 3 solver divergence.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "io.hpp"
#include "pipeline.hpp"
#include "sas.hpp"
#include "window_matrix.hpp"

namespace heies {

enum ExitCode : int { kOk = 0, kInvalid = 2, kDiverged = 3 };

namespace detail {

inline std::shared_ptr<spdlog::logger> cli_logger() {
    auto log = spdlog::get("heies");
    if (!log) {
        log = spdlog::stderr_color_mt("heies");
        const char* env = std::getenv("HEIES_LOG");
        log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    }
    return log;
}

inline void write_outputs(const std::filesystem::path& dir, const std::string& solver, const RunOutput& r) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "trajectory.csv");
        io::write_trajectory(os, r.names, r.samples);
    }
    {
        std::ofstream os(dir / "summary.csv");
        os << "key,value\n"
           << "solver," << solver << '\n'
           << "windows," << r.windows << '\n'
           << "rejections," << r.rejections << '\n'
           << "factorizations," << r.factorizations << '\n'
           << "reversals," << r.reversals << '\n'
           << "max_residual," << io::fmt(r.max_residual) << '\n'
           << "wall_time_s," << io::fmt(r.wall_time_s) << '\n';
    }
    {
        std::ofstream os(dir / "residuals.csv");
        io::write_residuals(os, r.residuals);
    }
}

struct Sweep {
    double lo = 1.0, hi = 1.0, step = 1.0;
};

inline Sweep parse_sweep(const std::string& s) {
    Sweep sw;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> sw.lo >> c1 >> sw.hi >> c2 >> sw.step) || c1 != ':' || c2 != ':' || !(sw.step > 0.0) || sw.hi < sw.lo)
        throw ValidationError("--load-scale-sweep expects lo:hi:step with step > 0, got '" + s + "'");
    return sw;
}

}  // namespace detail

/// Parses flags, runs the scenario and writes trajectory.csv, summary.csv and
/// residuals.csv into the output directory.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Quasi-dynamic energy flow for coupled heat/electric networks"};
    std::string config;
    std::optional<std::string> solver;
    std::optional<std::size_t> order;
    std::optional<double> theta, dx, atol, rtol, horizon, cadence, noise, dt_init;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> sweep;
    std::string out = "out";
    app.add_option("--config", config, "Scenario JSON")->required();
    app.add_option("--solver", solver, "dt, iu, soe, ref or exact")
        ->check(CLI::IsMember({"dt", "iu", "soe", "ref", "exact"}));
    app.add_option("--order", order, "Series order K");
    app.add_option("--theta", theta, "Limiter parameter in [1, 2]");
    app.add_option("--dx", dx, "Grid spacing (m)");
    app.add_option("--atol", atol, "Absolute tolerance");
    app.add_option("--rtol", rtol, "Relative tolerance");
    app.add_option("--dt-init", dt_init, "Initial window length (s)");
    app.add_option("--horizon", horizon, "Simulated time (s)");
    app.add_option("--cadence", cadence, "Output sampling interval (s)");
    app.add_option("--out", out, "Output directory");
    app.add_option("--seed", seed, "Seed for driver noise injection");
    app.add_option("--noise", noise, "Relative noise amplitude (default 0.02 when --seed is given)");
    app.add_option("--load-scale-sweep", sweep, "lo:hi:step load-level multipliers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }
    auto log = detail::cli_logger();

    try {
        io::Scenario sc = io::load_scenario(config);
        if (solver) sc.solver = *solver;
        if (order) sc.adaptive.order = *order;
        if (theta) sc.adaptive.theta = *theta;
        if (dx) sc.dx = *dx;
        if (atol) sc.adaptive.atol = *atol;
        if (rtol) sc.adaptive.rtol = *rtol;
        if (dt_init) {
            sc.adaptive.dt_init = *dt_init;
            sc.adaptive.dt_max = std::max(sc.adaptive.dt_max, *dt_init);
        }
        if (horizon) sc.horizon = *horizon;
        if (cadence) sc.cadence = *cadence;
        if (!(sc.horizon > 0.0) || !(sc.cadence > 0.0)) throw ValidationError("horizon and cadence must be > 0");
        sc.adaptive.validate();
        if (seed) add_noise(sc, noise.value_or(sc.noise > 0.0 ? sc.noise : 0.02), *seed);

        if (!sweep) {
            log->info("running {} on {} over {} s", sc.solver, config, sc.horizon);
            const RunOutput r = run_scenario(sc);
            detail::write_outputs(out, sc.solver, r);
            log->info("{} windows, {} rejections, max residual {:.3e}", r.windows, r.rejections, r.max_residual);
            return kOk;
        }

        const auto sw = detail::parse_sweep(*sweep);
        std::filesystem::create_directories(out);
        std::ofstream table(std::filesystem::path(out) / "sweep.csv");
        table << "scale,status,windows,rejections,max_residual\n";
        const auto n = static_cast<int>(std::floor((sw.hi - sw.lo) / sw.step + 1e-9));
        for (int i = 0; i <= n; ++i) {
            const double f = sw.lo + i * sw.step;
            io::Scenario si = sc;
            scale_loads(si, f);
            char tag[32];
            std::snprintf(tag, sizeof tag, "scale_%.4f", f);
            try {
                const RunOutput r = run_scenario(si);
                detail::write_outputs(std::filesystem::path(out) / tag, si.solver, r);
                table << io::fmt(f) << ",ok," << r.windows << ',' << r.rejections << ',' << io::fmt(r.max_residual) << '\n';
            } catch (const DivergenceError& e) {
                log->warn("scale {}: {}", f, e.what());
                table << io::fmt(f) << ",diverged,,,\n";
            } catch (const ConvergenceError& e) {
                log->warn("scale {}: {}", f, e.what());
                table << io::fmt(f) << ",diverged,,,\n";
            }
        }
        return kOk;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const DriverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const ConvergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const SingularMatrixError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDiverged;
    }
}

}  // namespace heies
