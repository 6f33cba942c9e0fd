#pragma once

// Scenario -> model -> solver run, shared by the command line and the tests.

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "io.hpp"
#include "model.hpp"
#include "newton.hpp"
#include "reference.hpp"
#include "sas.hpp"
#include "thermal_pde.hpp"

namespace heies {

struct RunOutput {
    std::vector<std::string> names;
    std::vector<Sample> samples;
    std::optional<SimulationResult> sas;  // dt solver only
    std::size_t windows = 0;
    std::size_t rejections = 0;
    std::size_t factorizations = 0;
    std::size_t reversals = 0;
    double max_residual = 0.0;
    io::ResidualReport residuals;
    double wall_time_s = 0.0;
};

/// Scales the heat power of every load node (nominal and driver).
inline void scale_loads(io::Scenario& s, double factor) {
    if (!s.system) return;
    for (auto& n : s.system->heat.nodes) {
        if (n.kind != NodeKind::Load) continue;
        if (n.power_mw) *n.power_mw *= factor;
        const auto it = s.drivers.find("phi[" + n.id + "]");
        if (it != s.drivers.end()) it->second = it->second.scaled(factor);
    }
}

/// Seeded uniform relative noise on driver breakpoint values, in name order.
inline void add_noise(io::Scenario& s, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [name, prof] : s.drivers) prof = prof.with_noise(amplitude, rng);
}

/// Model at t = 0: steady start, or the scenario's initial-state file.
inline Model build_network_model(const io::Scenario& s, SimSetup& setup) {
    setup.system = *s.system;
    setup.options.dx = s.dx;
    setup.options.theta = s.adaptive.theta;
    setup.options.order = s.adaptive.order + 2;
    setup.options.drivers = s.drivers;
    if (!s.initial_state) return prepare_model(setup, s.adaptive.newton);

    // Expand and orient as prepare_model would, then load values verbatim.
    const auto values = io::read_trajectory_at(*s.initial_state, 0.0);
    ExpansionMap em;
    setup.system.heat = expand_compound_nodes(setup.system.heat, &em);
    for (auto& c : setup.system.couplings)
        if (const auto it = em.moved.find(c.heat_node); it != em.moved.end()) c.heat_node = it->second;
    std::vector<std::string> negative;
    for (const auto& p : setup.system.heat.pipes) {
        const auto it = values.find("m[" + p.id + "]");
        if (it != values.end() && it->second < 0.0) negative.push_back(p.id);
    }
    if (!negative.empty()) setup.system.heat = reverse_pipes(setup.system.heat, negative);
    Model md = compile_model(setup.system, setup.options);
    io::apply_state(md, values);
    md.assign_inlets(0);
    return md;
}

inline Model build_bench_model(const io::Scenario& s) {
    const auto& b = *s.bench;
    ModelOptions mo;
    mo.dx = s.dx;
    mo.theta = s.adaptive.theta;
    mo.order = s.adaptive.order + 2;
    Model md = compile_pipe_model(b.pipe, b.ambient, b.mdot, b.inlet, mo);
    if (s.initial_state) {
        io::apply_state(md, io::read_trajectory_at(*s.initial_state, 0.0));
    } else if (b.steady_initial) {
        steady_state_init(md, s.adaptive.newton, false);
    } else {
        for (int v : md.x_vars) md.C(v, 0) = b.initial;
    }
    md.assign_inlets(0);
    return md;
}

namespace detail {

/// Fixed-grid FDM run on the bench pipe (flow must be constant).
inline RunOutput run_fdm(const io::Scenario& s, bool implicit_upwind) {
    const auto& b = *s.bench;
    if (b.mdot.kind() != "constant") throw ValidationError("iu/soe solvers need a constant mass flow");
    const double mdot = b.mdot.value(0.0);
    const int M = grid_points(b.pipe.length, b.fdm_dx);
    FdmScheme sch;
    sch.dx = b.pipe.length / (M - 1);
    sch.dt = b.fdm_dt;
    sch.v = mdot / (b.pipe.area * b.pipe.density);
    sch.decay = b.pipe.lambda / (b.pipe.area * b.pipe.density * b.pipe.cp);
    sch.ambient = b.ambient;
    const PipeThermal phys = thermal_of(b.pipe, b.ambient);

    RunOutput out;
    for (int j = 0; j < M; ++j) out.names.push_back("tgs[" + b.pipe.id + ":" + std::to_string(j) + "]");
    std::vector<double> u(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j)
        u[static_cast<std::size_t>(j)] = b.steady_initial ? reference_exact(b.inlet, phys, mdot, j * sch.dx, 0.0) : b.initial;
    u[0] = b.inlet.value(0.0);
    auto record = [&](double t) {
        Sample smp;
        smp.t = t;
        smp.values = Eigen::Map<const Eigen::VectorXd>(u.data(), M);
        out.samples.push_back(std::move(smp));
    };
    record(0.0);
    const auto steps = static_cast<long>(std::llround(s.horizon / sch.dt));
    const auto every = std::max(1L, static_cast<long>(std::llround(s.cadence / sch.dt)));
    for (long n = 1; n <= steps; ++n) {
        const double t = static_cast<double>(n) * sch.dt;
        u = implicit_upwind ? iu_step(u, b.inlet.value(t), sch) : soe_step(u, b.inlet.value(t), sch);
        if (n % every == 0 || n == steps) record(t);
        ++out.windows;
    }
    return out;
}

inline RunOutput run_exact(const io::Scenario& s) {
    const auto& b = *s.bench;
    if (b.mdot.kind() != "constant") throw ValidationError("the exact solver needs a constant mass flow");
    const double mdot = b.mdot.value(0.0);
    const int M = s.dx > 0.0 ? grid_points(b.pipe.length, s.dx) : 2;
    const double dx = b.pipe.length / (M - 1);
    const PipeThermal phys = thermal_of(b.pipe, b.ambient);
    std::function<double(double)> init;
    if (!b.steady_initial) init = [&](double) { return b.initial; };
    RunOutput out;
    for (int j = 0; j < M; ++j) out.names.push_back("tgs[" + b.pipe.id + ":" + std::to_string(j) + "]");
    for (double t = 0.0;; t += s.cadence) {
        const double tt = std::min(t, s.horizon);
        Sample smp;
        smp.t = tt;
        smp.values.resize(M);
        for (int j = 0; j < M; ++j) smp.values(j) = reference_exact(b.inlet, phys, mdot, j * dx, tt, init);
        out.samples.push_back(std::move(smp));
        if (tt >= s.horizon) break;
    }
    return out;
}

}  // namespace detail

/// Runs the selected solver on a loaded scenario.
inline RunOutput run_scenario(const io::Scenario& s) {
    const auto wall0 = std::chrono::steady_clock::now();
    RunOutput out;
    const std::string& solver = s.solver;
    if (solver == "iu" || solver == "soe" || solver == "exact") {
        if (!s.bench) throw ValidationError("solver '" + solver + "' needs a pipe_bench scenario");
        out = solver == "exact" ? detail::run_exact(s) : detail::run_fdm(s, solver == "iu");
    } else if (solver == "dt" || solver == "ref") {
        SimSetup setup;
        setup.pipe_only = !s.system;
        Model md = s.system ? build_network_model(s, setup) : build_bench_model(s);
        if (solver == "dt") {
            SimOptions so;
            so.cadence = s.cadence;
            so.keep_coefficients = false;
            SimulationResult r = simulate(std::move(md), s.horizon, s.adaptive, so, s.system ? &setup : nullptr);
            out.names = r.names;
            out.samples = r.samples;
            out.windows = r.windows.size();
            out.rejections = r.rejections;
            out.factorizations = r.factorizations;
            out.reversals = r.reversals;
            out.residuals = io::residual_report(r);
            out.sas = std::move(r);
        } else {
            ReferenceOptions ro = s.reference;
            ro.cadence = s.cadence;
            md.theta = s.adaptive.theta;
            auto model = std::make_shared<const Model>(md);
            ReferenceResult r = reference_simulate(std::move(md), s.horizon, ro);
            SimulationResult view;
            view.names = r.names;
            view.epochs.push_back(model);
            view.samples = r.samples;
            out.names = r.names;
            out.samples = std::move(r.samples);
            out.windows = r.steps;
            out.residuals = io::residual_report(view);
        }
        out.max_residual = out.residuals.headline;
    } else {
        throw ValidationError("unknown solver '" + solver + "' (expected dt, iu, soe, ref or exact)");
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return out;
}

}  // namespace heies
