#pragma once

// Damped Newton iteration over a subset of variables of an equation set.
// Used for the steady-state start, consistent re-initialization at driver
// breakpoints, and the algebraic block of the Runge-Kutta reference.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "equations.hpp"
#include "model.hpp"

namespace heies {

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double max_res, std::string worst_eq)
        : std::runtime_error(what), max_residual(max_res), worst(std::move(worst_eq)) {}
    double max_residual;
    std::string worst;
};

struct NewtonOptions {
    int max_iterations = 50;
    double tolerance = 1e-11;  // on the max scaled residual
    Eigen::Index sparse_threshold = 500;
};

struct NewtonReport {
    int iterations = 0;
    double max_residual = 0.0;
    std::string worst;
};

namespace detail {

inline double max_scaled(const std::vector<Equation>& rows, const Eigen::VectorXd& x, std::string* worst) {
    double m = 0.0;
    for (const auto& r : rows) {
        const double v = r.scaled_value(x);
        if (v > m || std::isnan(v)) {
            m = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
            if (worst) *worst = r.label;
        }
    }
    return m;
}

inline double scaled_norm(const std::vector<Equation>& rows, const Eigen::VectorXd& x) {
    double s = 0.0;
    for (const auto& r : rows) {
        const double v = r.value(x) / r.scale(x);
        s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace detail

/// Solves rows(x) = 0 for x[unknowns]; other entries of x stay fixed.
inline NewtonReport newton_solve(const std::vector<Equation>& rows, Eigen::VectorXd& x, const std::vector<int>& unknowns,
                                 const NewtonOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(unknowns.size());
    if (static_cast<Eigen::Index>(rows.size()) != n)
        throw ValidationError("newton system is not square: " + std::to_string(rows.size()) + " equations for " +
                              std::to_string(n) + " unknowns");
    std::vector<int> col(static_cast<std::size_t>(x.size()), -1);
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(unknowns[static_cast<std::size_t>(i)])] = static_cast<int>(i);

    NewtonReport rep;
    rep.max_residual = detail::max_scaled(rows, x, &rep.worst);
    if (n == 0) return rep;
    for (int it = 0; it < opt.max_iterations && rep.max_residual > opt.tolerance; ++it) {
        Eigen::SparseMatrix<double> J = sparse_jacobian(rows, x, col, n);
        Eigen::VectorXd F(n);
        Eigen::VectorXd scale(n);
        for (Eigen::Index r = 0; r < n; ++r) F(r) = rows[static_cast<std::size_t>(r)].value(x);
        // equilibrate rows by their largest Jacobian entry
        scale.setZero();
        for (int c = 0; c < J.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator itr(J, c); itr; ++itr)
                scale(itr.row()) = std::max(scale(itr.row()), std::abs(itr.value()));
        for (Eigen::Index r = 0; r < n; ++r) scale(r) = scale(r) > 0.0 ? 1.0 / scale(r) : 1.0;
        J = scale.asDiagonal() * J;
        const Eigen::VectorXd b = -scale.cwiseProduct(F);

        Eigen::VectorXd dx;
        if (n >= opt.sparse_threshold) {
            J.makeCompressed();
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(J);
            if (lu.info() != Eigen::Success)
                throw ConvergenceError("singular Jacobian in Newton iteration", rep.max_residual, rep.worst);
            dx = lu.solve(b);
        } else {
            Eigen::MatrixXd Jd(J);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jd);
            dx = lu.solve(b);
        }
        if (!dx.allFinite())
            throw ConvergenceError("singular Jacobian in Newton iteration", rep.max_residual, rep.worst);

        const double f0 = detail::scaled_norm(rows, x);
        double alpha = 1.0;
        Eigen::VectorXd trial = x;
        for (int ls = 0; ls < 12; ++ls) {
            trial = x;
            for (Eigen::Index i = 0; i < n; ++i) trial(unknowns[static_cast<std::size_t>(i)]) += alpha * dx(i);
            if (detail::scaled_norm(rows, trial) < f0) break;
            alpha *= 0.5;
        }
        x = trial;
        rep.iterations = it + 1;
        rep.max_residual = detail::max_scaled(rows, x, &rep.worst);
    }
    if (!(rep.max_residual <= opt.tolerance))
        throw ConvergenceError("Newton did not converge after " + std::to_string(rep.iterations) +
                                   " iterations: max scaled residual " + std::to_string(rep.max_residual) +
                                   " at equation '" + rep.worst + "'",
                               rep.max_residual, rep.worst);
    return rep;
}

/// Starting point for the steady solve: least-squares flows from nominal
/// loads, flat voltages, node temperatures from the known values.
inline void initial_guess(Model& md) {
    md.set_drivers(0.0);
    auto& x = md.C;
    const auto& heat = md.sys.heat;
    double ts_sum = 0.0, tr_sum = 0.0;
    int ts_n = 0, tr_n = 0;
    for (const auto& n : heat.nodes) {
        if (md.has("ts[" + n.id + "]") && md.vars[static_cast<std::size_t>(md.var("ts[" + n.id + "]"))].role == Role::W) {
            ts_sum += x(md.var("ts[" + n.id + "]"), 0);
            ++ts_n;
        }
        if (md.has("tr[" + n.id + "]") && md.vars[static_cast<std::size_t>(md.var("tr[" + n.id + "]"))].role == Role::W) {
            tr_sum += x(md.var("tr[" + n.id + "]"), 0);
            ++tr_n;
        }
    }
    const double ts0 = ts_n ? ts_sum / ts_n : 80.0;
    const double tr0 = tr_n ? tr_sum / tr_n : ts0 - 30.0;
    const double dT = std::max(1.0, ts0 - tr0);
    const double cp_mw = heat.cp * 1e-6;

    auto set_if_y = [&](const std::string& name, double v) {
        if (md.has(name) && md.vars[static_cast<std::size_t>(md.var(name))].role == Role::Y) x(md.var(name), 0) = v;
    };
    for (const auto& n : heat.nodes) {
        set_if_y("ts[" + n.id + "]", ts0);
        set_if_y("tr[" + n.id + "]", tr0);
    }
    for (const auto& g : md.grids)
        for (int v : g.var) x(v, 0) = g.supply ? ts0 : tr0;
    for (const auto& p : heat.pipes) {
        set_if_y("tos[" + p.id + "]", ts0);
        set_if_y("tor[" + p.id + "]", tr0);
    }

    // injections from nominal powers, slack balances the rest
    const auto nn = static_cast<Eigen::Index>(heat.nodes.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nn);
    double load = 0.0, supplied = 0.0;
    std::vector<double> inj(heat.nodes.size(), 0.0);
    for (std::size_t i = 0; i < heat.nodes.size(); ++i) {
        const auto& n = heat.nodes[i];
        if (n.kind != NodeKind::Load && n.kind != NodeKind::Source) continue;
        const std::string phi = "phi[" + n.id + "]";
        double power = 0.0;
        if (md.vars[static_cast<std::size_t>(md.var(phi))].role == Role::W) power = x(md.var(phi), 0);
        else if (n.power_mw) power = *n.power_mw;
        inj[i] = std::max(0.0, power / (cp_mw * dT));
        (n.kind == NodeKind::Load ? load : supplied) += inj[i];
    }
    for (std::size_t i = 0; i < heat.nodes.size(); ++i)
        if (heat.nodes[i].kind == NodeKind::Slack) inj[i] = std::max(load - supplied, 0.1 * load + 1e-3);
    for (std::size_t i = 0; i < heat.nodes.size(); ++i) {
        const auto& n = heat.nodes[i];
        if (n.kind == NodeKind::Intermediate) continue;
        set_if_y("min[" + n.id + "]", inj[i]);
        b(static_cast<Eigen::Index>(i)) = n.kind == NodeKind::Load ? inj[i] : -inj[i];
        set_if_y("phi[" + n.id + "]", cp_mw * inj[i] * dT);
    }
    if (!heat.pipes.empty()) {
        const Eigen::VectorXd m = heat.V.completeOrthogonalDecomposition().solve(b);
        for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
            // keep flows on the as-oriented side of zero
            const double v = std::max(m(static_cast<Eigen::Index>(j)), 1e-3 * (load + 1e-3));
            set_if_y("m[" + heat.pipes[j].id + "]", v);
        }
    }

    for (const auto& bus : md.sys.electric.buses) {
        if (bus.kind == BusKind::Slack) continue;
        set_if_y("e[" + bus.id + "]", bus.kind == BusKind::PV ? x(md.var("u[" + bus.id + "]"), 0) : 1.0);
        set_if_y("f[" + bus.id + "]", 0.0);
        set_if_y("p[" + bus.id + "]", 0.0);
        set_if_y("q[" + bus.id + "]", 0.0);
    }
    for (const auto& bus : md.sys.electric.buses) {
        set_if_y("p[" + bus.id + "]", 0.0);
        set_if_y("q[" + bus.id + "]", 0.0);
    }
}

struct SteadyReport {
    int passes = 0;
    int iterations = 0;
    double max_residual = 0.0;
};

/// Steady state at t = 0: Newton over Y, X and Z with the grid rows in steady
/// form, repeated until the frozen slope selections stop changing.
inline SteadyReport steady_state_init(Model& md, const NewtonOptions& opt = {}, bool guess = true, int max_passes = 10) {
    if (guess) initial_guess(md);
    else md.set_drivers(0.0);
    std::vector<int> unknowns = md.y_vars;
    unknowns.insert(unknowns.end(), md.x_vars.begin(), md.x_vars.end());
    unknowns.insert(unknowns.end(), md.z_vars.begin(), md.z_vars.end());

    SteadyReport rep;
    for (auto& g : md.grids) g.grid.set_slopes(std::vector<Slope>(static_cast<std::size_t>(g.grid.M), Slope::Zero));
    for (int pass = 0; pass < max_passes; ++pass) {
        std::vector<Equation> rows = md.rows;
        const auto pde = md.steady_pde_rows();
        const auto inl = md.inlet_rows();
        rows.insert(rows.end(), pde.begin(), pde.end());
        rows.insert(rows.end(), inl.begin(), inl.end());
        Eigen::VectorXd x = md.C.col(0);
        const auto nr = newton_solve(rows, x, unknowns, opt);
        md.C.col(0) = x;
        rep.passes = pass + 1;
        rep.iterations += nr.iterations;
        rep.max_residual = nr.max_residual;
        const auto before = md.slope_state();
        md.freeze_slopes_all();
        if (md.slope_state() == before) break;
    }
    return rep;
}

/// Y(0) consistent with the current X and W (used when drivers jump).
inline NewtonReport reinitialize_algebraic(Model& md, const NewtonOptions& opt = {}) {
    Eigen::VectorXd x = md.C.col(0);
    auto rep = newton_solve(md.rows, x, md.y_vars, opt);
    md.C.col(0) = x;
    md.assign_inlets(0);
    return rep;
}

}  // namespace heies
