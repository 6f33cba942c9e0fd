#pragma once

// Baselines: implicit-upwind and second-order explicit finite differences on a
// uniform grid, and a Dormand-Prince reference for the full model that solves
// the algebraic block by Newton at every stage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <Eigen/Dense>

#include "model.hpp"
#include "newton.hpp"
#include "sas.hpp"
#include "thermal_pde.hpp"

namespace heies {

/// Advection-relaxation coefficients on a uniform grid.
struct FdmScheme {
    double v = 1.0;        // m/s
    double dt = 1.0;       // s
    double dx = 1.0;       // m
    double decay = 0.0;    // lambda/(gamma rho cp), 1/s
    double ambient = 0.0;  // degC

    [[nodiscard]] double courant() const noexcept { return v * dt / dx; }
    void validate() const {
        if (!(dt > 0.0 && dx > 0.0)) throw ValidationError("FDM step sizes must be positive");
    }
};

/// Implicit upwind: backward in time and space, solved as a forward sweep
/// from the new inlet value.
[[nodiscard]] inline std::vector<double> iu_step(std::span<const double> prev, double inlet, const FdmScheme& s) {
    s.validate();
    const double R = s.courant();
    const double c = s.decay * s.dt;
    std::vector<double> next(prev.size());
    if (next.empty()) return next;
    next[0] = inlet;
    for (std::size_t k = 0; k + 1 < prev.size(); ++k)
        next[k + 1] = (prev[k + 1] + R * next[k] + c * s.ambient) / (1.0 + R + c);
    return next;
}

/// Second-order explicit box stencil centred at (k+1/2, n+1/2).
[[nodiscard]] inline std::vector<double> soe_step(std::span<const double> prev, double inlet, const FdmScheme& s) {
    s.validate();
    const double R = s.courant();
    const double h = 0.5 * s.decay * s.dt;
    std::vector<double> next(prev.size());
    if (next.empty()) return next;
    next[0] = inlet;
    for (std::size_t k = 0; k + 1 < prev.size(); ++k)
        next[k + 1] = (prev[k] * (1.0 + R - h) + prev[k + 1] * (1.0 - R - h) + next[k] * (R - 1.0 - h) +
                       4.0 * h * s.ambient) /
                      (1.0 + R + h);
    return next;
}

struct ErrorMetrics {
    double rmse = 0.0;
    double overshoot = 0.0;
    int rise_cells = 0;
};

/// rmse against the baseline; overshoot beyond the baseline's range; number of
/// samples strictly between 10% and 90% of the baseline range, plus one.
[[nodiscard]] inline ErrorMetrics error_metrics(std::span<const double> solution, std::span<const double> baseline) {
    if (solution.size() != baseline.size() || solution.empty())
        throw std::invalid_argument("error_metrics needs aligned, non-empty samples (" +
                                    std::to_string(solution.size()) + " vs " + std::to_string(baseline.size()) + ")");
    ErrorMetrics m;
    double ss = 0.0;
    for (std::size_t i = 0; i < solution.size(); ++i) ss += (solution[i] - baseline[i]) * (solution[i] - baseline[i]);
    m.rmse = std::sqrt(ss / static_cast<double>(solution.size()));
    const auto [bmin, bmax] = std::minmax_element(baseline.begin(), baseline.end());
    const auto [smin, smax] = std::minmax_element(solution.begin(), solution.end());
    m.overshoot = std::max({0.0, *smax - *bmax, *bmin - *smin});
    const double span = *bmax - *bmin;
    int inside = 0;
    if (span > 0.0) {
        for (double v : solution) {
            const double r = (v - *bmin) / span;
            if (r > 0.1 && r < 0.9) ++inside;
        }
    }
    m.rise_cells = inside + 1;
    return m;
}

// ---- Runge-Kutta reference -----------------------------------------------------

struct ReferenceOptions {
    double dt = 1.0;
    double cadence = 0.0;  // <= 0: every step
    NewtonOptions newton{50, 1e-12, 500};
};

struct ReferenceResult {
    std::vector<std::string> names;
    std::vector<Sample> samples;
    std::size_t steps = 0;
    std::size_t newton_solves = 0;
};

namespace detail {

/// Algebraic closure at (x, t): W from drivers, Y by Newton, Z from nodes.
class ReferenceSystem {
public:
    ReferenceSystem(Model& md, const NewtonOptions& nopt) : md_(md), nopt_(nopt) {}

    void consistent(const std::vector<double>& x, double t, int stage) {
        for (std::size_t i = 0; i < md_.x_vars.size(); ++i) md_.C(md_.x_vars[i], 0) = x[i];
        md_.set_drivers(t);
        if (!md_.y_vars.empty()) {
            Eigen::VectorXd v = md_.C.col(0);
            try {
                newton_solve(md_.rows, v, md_.y_vars, nopt_);
            } catch (const ConvergenceError& e) {
                throw ConvergenceError("reference Newton failed at t = " + std::to_string(t) + " s, stage " +
                                           std::to_string(stage) + ": " + e.what(),
                                       e.max_residual, e.worst);
            }
            md_.C.col(0) = v;
            ++solves;
        }
        md_.assign_inlets(0);
        for (const auto& p : md_.sys.heat.pipes) {
            if (p.implicit || !md_.has("m[" + p.id + "]")) continue;
            if (md_.C(md_.var("m[" + p.id + "]"), 0) < 0.0)
                throw DivergenceError("flow reversal in pipe '" + p.id + "' at t = " + std::to_string(t) +
                                      " s; the reference solver does not reorient pipes");
        }
    }

    void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double t) {
        consistent(x, t, ++stage_);
        dxdt.assign(x.size(), 0.0);
        for (const auto& g : md_.grids) {
            std::vector<double> tau(g.var.size()), d(g.var.size());
            for (std::size_t i = 0; i < g.var.size(); ++i) tau[i] = md_.C(g.var[i], 0);
            semi_discrete_rhs_dynamic(tau, md_.C(g.m_var, 0), g.grid.phys, g.grid.dx, md_.theta, d);
            for (std::size_t i = 1; i < g.var.size(); ++i) dxdt[static_cast<std::size_t>(pos_[static_cast<std::size_t>(g.var[i])])] = d[i];
        }
    }

    void index_states() {
        pos_.assign(md_.size(), -1);
        for (std::size_t i = 0; i < md_.x_vars.size(); ++i) pos_[static_cast<std::size_t>(md_.x_vars[i])] = static_cast<int>(i);
    }

    void reset_stage() { stage_ = 0; }

    std::size_t solves = 0;

private:
    Model& md_;
    NewtonOptions nopt_;
    std::vector<int> pos_;
    int stage_ = 0;
};

}  // namespace detail

/// Fixed-step Dormand-Prince 5(4) over [0, horizon] from the state in md, with
/// minmod selections re-evaluated at every stage. Steps land on driver
/// breakpoints and output ticks.
inline ReferenceResult reference_simulate(Model md, double horizon, const ReferenceOptions& opt) {
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (!(opt.dt > 0.0)) throw ValidationError("reference step must be positive");
    namespace ode = boost::numeric::odeint;
    ReferenceResult res;
    for (const auto& v : md.vars) res.names.push_back(v.name);
    if (!md.flip_sign.empty()) throw ValidationError("the reference solver needs all pipes in as-built orientation");

    detail::ReferenceSystem sys(md, opt.newton);
    sys.index_states();
    std::vector<double> x(md.x_vars.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = md.C(md.x_vars[i], 0);

    auto record = [&](double t) {
        sys.consistent(x, t, 0);
        Sample s;
        s.t = t;
        s.values = md.C.col(0);
        res.samples.push_back(std::move(s));
    };
    record(0.0);

    ode::runge_kutta_dopri5<std::vector<double>> stepper;
    const double t_eps = 1e-12 * std::max(1.0, horizon);
    const double cadence = opt.cadence > 0.0 ? opt.cadence : opt.dt;
    double t = 0.0;
    double next_tick = cadence;
    while (t < horizon - t_eps) {
        if (t > 0.0 && md.is_breakpoint(t)) stepper.reset();
        double target = std::min({horizon, next_tick, t + opt.dt});
        if (const auto nb = md.next_breakpoint(t)) target = std::min(target, *nb);
        const double h = target - t;
        sys.reset_stage();
        if (!x.empty()) stepper.do_step(std::ref(sys), x, t, h);
        ++res.steps;
        t = target;
        if (t >= next_tick - t_eps || t >= horizon - t_eps) {
            record(t);
            while (next_tick <= t + t_eps) next_tick += cadence;
        }
    }
    res.newton_solves = sys.solves;
    return res;
}

}  // namespace heies
