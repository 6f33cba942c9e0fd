#pragma once

// Variable registry and equation assembly for a coupled heat/electric system.
//
// Roles follow the window recursion:
//   X  pipe grid temperatures downstream of the inlet (Step 1, PDE recursion)
//   Y  algebraic unknowns (Step 2, one linear solve per order)
//   Z  pipe inlet temperatures, copied from the feeding node (Step 3)
//   W  known drivers
//
// Names: m[p] pipe flow, min[n] node injection, ts[n]/tr[n] node supply/return
// temperature, phi[n] heat power (MW), tos[p]/tor[p] outlet temperatures of
// implicit pipes, e[b] f[b] p[b] q[b] u[b] bus quantities, tgs[p:j]/tgr[p:j]
// supply/return grid temperature at physical position j (j = 0 at the pipe's
// as-built "from" end). Flows are stored in the current orientation; the
// flip_sign list maps them back to as-built orientation.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "driver.hpp"
#include "equations.hpp"
#include "network.hpp"
#include "thermal_pde.hpp"

namespace heies {

enum class Role { X, Y, Z, W };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::X: return "X";
        case Role::Y: return "Y";
        case Role::Z: return "Z";
        case Role::W: return "W";
    }
    return "?";
}

struct Variable {
    std::string name;
    Role role = Role::Y;
};

/// One supply or return grid of one physical pipe.
struct GridBlock {
    std::size_t pipe = 0;
    bool supply = true;
    PipeGrid grid;         // dx, M, slopes and stencils; grid.T is not used here
    std::vector<int> var;  // flow order; var[0] is the inlet (Z)
    int m_var = -1;
    int inlet_source = -1;  // node temperature feeding var[0]
};

struct ModelOptions {
    double dx = 0.0;  // <= 0: one cell per pipe
    double theta = 1.0;
    std::size_t order = 8;  // coefficient storage is order + 1 columns
    std::map<std::string, DriverProfile> drivers;
    bool validate = true;
};

class Model {
public:
    CoupledSystem sys;
    std::vector<Variable> vars;
    std::unordered_map<std::string, int> index;
    std::vector<int> x_vars, y_vars, z_vars, w_vars;
    std::vector<int> y_col;  // var -> column of the algebraic system or -1
    std::vector<Equation> rows;
    std::vector<GridBlock> grids;
    std::vector<std::pair<int, int>> z_links;  // (inlet var, node temperature var)
    std::map<int, DriverProfile> drivers;
    std::vector<int> flip_sign;
    Eigen::MatrixXd C;  // variables x orders
    double theta = 1.0;
    double dx = 0.0;

    [[nodiscard]] int var(const std::string& name) const {
        const auto it = index.find(name);
        if (it == index.end()) throw ValidationError("unknown variable '" + name + "'");
        return it->second;
    }
    [[nodiscard]] bool has(const std::string& name) const { return index.count(name) != 0; }
    [[nodiscard]] std::size_t size() const noexcept { return vars.size(); }
    [[nodiscard]] std::size_t order() const noexcept { return static_cast<std::size_t>(C.cols() - 1); }
    [[nodiscard]] Eigen::VectorXd values() const { return C.col(0); }

    void resize_order(std::size_t order) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vars.size()),
                                                  static_cast<Eigen::Index>(order + 1));
        c.col(0) = C.col(0);
        C = std::move(c);
    }

    std::vector<std::string> row_labels() const {
        std::vector<std::string> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.label);
        return out;
    }

    /// Zeroth-order values in as-built orientation.
    [[nodiscard]] Eigen::VectorXd to_file(const Eigen::VectorXd& internal) const {
        Eigen::VectorXd v = internal;
        for (int i : flip_sign) v(i) = -v(i);
        return v;
    }
    [[nodiscard]] Eigen::VectorXd from_file(const Eigen::VectorXd& file) const { return to_file(file); }

    /// Fills column 0 of the W rows from drivers at t.
    void set_drivers(double t) {
        for (const auto& [v, prof] : drivers) C(v, 0) = prof.value(t);
    }

    /// Fills W(0..K) from drivers expanded at t0.
    void expand_drivers(double t0, double window_length = 0.0) {
        const auto K = order();
        for (const auto& [v, prof] : drivers) {
            const auto w = derive_driver_dt(prof, t0, K, window_length);
            for (std::size_t k = 0; k <= K; ++k) C(v, static_cast<Eigen::Index>(k)) = w[k];
        }
    }

    /// Next breakpoint of any driver strictly after t.
    [[nodiscard]] std::optional<double> next_breakpoint(double t) const {
        std::optional<double> best;
        for (const auto& [v, prof] : drivers) {
            const auto b = prof.next_breakpoint(t);
            if (b && (!best || *b < *best)) best = b;
        }
        return best;
    }
    [[nodiscard]] bool is_breakpoint(double t) const {
        return std::any_of(drivers.begin(), drivers.end(), [t](const auto& d) { return d.second.is_breakpoint(t); });
    }

    /// Copies node temperatures into pipe inlets at order k.
    void assign_inlets(Eigen::Index k) {
        for (const auto& [z, src] : z_links) C(z, k) = C(src, k);
    }

    /// Re-freezes every grid's slope selections from the order-0 column.
    void freeze_slopes_all() {
        for (auto& g : grids) {
            std::vector<double> tau0(g.var.size());
            for (std::size_t i = 0; i < g.var.size(); ++i) tau0[i] = C(g.var[i], 0);
            g.grid.set_slopes(freeze_slopes(tau0, g.grid.dx, theta));
        }
    }

    [[nodiscard]] std::vector<std::vector<Slope>> slope_state() const {
        std::vector<std::vector<Slope>> s;
        for (const auto& g : grids) s.push_back(g.grid.slopes);
        return s;
    }

    /// Step 1 at order k: X(k+1) of every grid.
    void pde_step(std::size_t k) {
        const auto kk = static_cast<Eigen::Index>(k);
        for (const auto& g : grids) {
            const double inv_cap = 1.0 / (g.grid.phys.capacity() * g.grid.dx);
            const double decay = g.grid.phys.decay();
            for (int i = 1; i < g.grid.M; ++i) {
                double conv = 0.0;
                for (Eigen::Index m = 0; m <= kk; ++m) {
                    double flux = 0.0;
                    for (const auto& [node, w] : g.grid.stencils[static_cast<std::size_t>(i)])
                        flux += w * C(g.var[static_cast<std::size_t>(node)], kk - m);
                    conv += C(g.m_var, m) * flux;
                }
                double src = C(g.var[static_cast<std::size_t>(i)], kk);
                if (k == 0) src -= g.grid.phys.ambient;
                C(g.var[static_cast<std::size_t>(i)], kk + 1) = (inv_cap * conv - decay * src) / static_cast<double>(k + 1);
            }
        }
    }

    /// A0: Jacobian of the algebraic rows w.r.t. Y at the order-0 values.
    [[nodiscard]] Eigen::SparseMatrix<double> window_matrix() const {
        return sparse_jacobian(rows, C.col(0), y_col, static_cast<Eigen::Index>(y_vars.size()));
    }

    /// Right-hand side of A0 Y(k) = C(k): minus the order-k residual with Y(k) = 0.
    [[nodiscard]] Eigen::VectorXd order_rhs(Eigen::Index k) {
        Eigen::MatrixXd& c = C;
        std::vector<double> saved(y_vars.size());
        for (std::size_t i = 0; i < y_vars.size(); ++i) {
            saved[i] = c(y_vars[i], k);
            c(y_vars[i], k) = 0.0;
        }
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) rhs(static_cast<Eigen::Index>(r)) = -rows[r].order_value(c, k);
        for (std::size_t i = 0; i < y_vars.size(); ++i) c(y_vars[i], k) = saved[i];
        return rhs;
    }

    /// Steady grid rows 0 = m/(gamma rho dx) g_i - decay (tau_i - tau_amb) for
    /// the current slope selections.
    [[nodiscard]] std::vector<Equation> steady_pde_rows() const {
        std::vector<Equation> out;
        for (const auto& g : grids) {
            const double inv_cap = 1.0 / (g.grid.phys.capacity() * g.grid.dx);
            const double decay = g.grid.phys.decay();
            for (int i = 1; i < g.grid.M; ++i) {
                const int v = g.var[static_cast<std::size_t>(i)];
                Equation e{"pde:" + vars[static_cast<std::size_t>(v)].name, "pde", {}, {}, 0.0};
                for (const auto& [node, w] : g.grid.stencils[static_cast<std::size_t>(i)])
                    e.bil.push_back({g.m_var, g.var[static_cast<std::size_t>(node)], w * inv_cap});
                if (decay != 0.0) {
                    e.lin.push_back({v, -decay});
                    e.constant = decay * g.grid.phys.ambient;
                }
                out.push_back(std::move(e));
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<Equation> inlet_rows() const {
        std::vector<Equation> out;
        for (const auto& [z, src] : z_links)
            out.push_back({"inlet:" + vars[static_cast<std::size_t>(z)].name, "inlet", {{z, 1.0}, {src, -1.0}}, {}, 0.0});
        return out;
    }

    /// Per-family max scaled residual of the algebraic rows at values x.
    [[nodiscard]] std::map<std::string, double> family_residuals(const Eigen::VectorXd& x) const {
        std::map<std::string, double> out;
        for (const auto& r : rows) {
            auto& slot = out[r.family];
            slot = std::max(slot, r.scaled_value(x));
        }
        return out;
    }

    [[nodiscard]] double max_residual(const Eigen::VectorXd& x) const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, r.scaled_value(x));
        return m;
    }

    int add_var(const std::string& name, Role role) {
        if (index.count(name)) throw ValidationError("duplicate variable '" + name + "'");
        const int id = static_cast<int>(vars.size());
        vars.push_back({name, role});
        index.emplace(name, id);
        switch (role) {
            case Role::X: x_vars.push_back(id); break;
            case Role::Y: y_vars.push_back(id); break;
            case Role::Z: z_vars.push_back(id); break;
            case Role::W: w_vars.push_back(id); break;
        }
        return id;
    }

    void finish(std::size_t order) {
        y_col.assign(vars.size(), -1);
        for (std::size_t i = 0; i < y_vars.size(); ++i) y_col[static_cast<std::size_t>(y_vars[i])] = static_cast<int>(i);
        C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vars.size()), static_cast<Eigen::Index>(order + 1));
    }
};

namespace detail {

inline std::string grid_name(bool supply, const std::string& pipe, int j) {
    return std::string(supply ? "tgs[" : "tgr[") + pipe + ":" + std::to_string(j) + "]";
}

/// Physical position of flow-order index i.
inline int physical_index(bool supply, bool reversed, int M, int i) {
    const bool along = supply != reversed;  // flow runs from the as-built "from" end
    return along ? i : M - 1 - i;
}

}  // namespace detail

struct KnownSets {
    std::set<std::string> phi_unknown;  // node ids whose phi is a Y variable
    std::set<std::string> p_unknown;    // bus ids whose p is a Y variable
};

/// Which phi and p are unknown after coupling overrides: a steam turbine
/// frees its bus p (or the node phi if p is already unknown); a gas turbine
/// frees its node phi (or the bus p).
inline KnownSets known_sets(const CoupledSystem& sys) {
    KnownSets ks;
    for (const auto& n : sys.heat.nodes)
        if (n.kind == NodeKind::Slack) ks.phi_unknown.insert(n.id);
    for (const auto& b : sys.electric.buses)
        if (b.kind == BusKind::Slack) ks.p_unknown.insert(b.id);
    for (const auto& c : sys.couplings) {
        const auto& node = sys.heat.nodes[sys.heat.node_index(c.heat_node)];
        const bool phi_free = node.kind != NodeKind::Intermediate && !ks.phi_unknown.count(c.heat_node);
        const bool p_free = !ks.p_unknown.count(c.bus);
        const bool prefer_p = c.kind == CouplingKind::ExtractionSteamTurbine;
        if (prefer_p ? p_free : !phi_free) {
            if (!p_free) throw ValidationError("coupling at node '" + c.heat_node + "' and bus '" + c.bus +
                                               "' has no free variable");
            ks.p_unknown.insert(c.bus);
        } else {
            if (!phi_free) throw ValidationError("coupling at node '" + c.heat_node + "' and bus '" + c.bus +
                                                 "' has no free variable");
            ks.phi_unknown.insert(c.heat_node);
        }
    }
    return ks;
}

/// Builds the registry and the algebraic rows. The system must already be
/// expanded (compound nodes) and oriented (reversed pipes).
inline Model compile_model(const CoupledSystem& input, const ModelOptions& opt) {
    Model md;
    md.sys = input;
    md.theta = opt.theta;
    md.dx = opt.dx;
    auto& heat = md.sys.heat;
    auto& elec = md.sys.electric;
    if (opt.validate) validate(md.sys);
    rebuild_incidence(heat);
    if (!elec.buses.empty()) build_admittance(elec);
    const KnownSets ks = known_sets(md.sys);

    auto is_rsl = [](NodeKind k) { return k != NodeKind::Intermediate; };

    // Y, in system order.
    for (const auto& p : heat.pipes) md.add_var("m[" + p.id + "]", Role::Y);
    for (const auto& n : heat.nodes)
        if (is_rsl(n.kind)) md.add_var("min[" + n.id + "]", Role::Y);
    for (const auto& n : heat.nodes)
        if (n.kind == NodeKind::Load || n.kind == NodeKind::Intermediate) md.add_var("ts[" + n.id + "]", Role::Y);
    for (const auto& n : heat.nodes)
        if (n.kind != NodeKind::Load) md.add_var("tr[" + n.id + "]", Role::Y);
    for (const auto& p : heat.pipes)
        if (p.implicit) {
            md.add_var("tos[" + p.id + "]", Role::Y);
            md.add_var("tor[" + p.id + "]", Role::Y);
        }
    for (const auto& n : heat.nodes)
        if (ks.phi_unknown.count(n.id)) md.add_var("phi[" + n.id + "]", Role::Y);
    for (const auto& b : elec.buses)
        if (b.kind != BusKind::Slack) {
            md.add_var("e[" + b.id + "]", Role::Y);
            md.add_var("f[" + b.id + "]", Role::Y);
        }
    for (const auto& b : elec.buses)
        if (ks.p_unknown.count(b.id)) md.add_var("p[" + b.id + "]", Role::Y);
    for (const auto& b : elec.buses)
        if (b.kind != BusKind::PQ) md.add_var("q[" + b.id + "]", Role::Y);

    // Grids: X then Z, both in pipe order.
    struct Pending {
        std::size_t pipe;
        bool supply;
        int M;
        double dx;
    };
    std::vector<Pending> pend;
    for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
        const auto& p = heat.pipes[j];
        if (p.implicit) continue;
        const int M = opt.dx > 0.0 ? grid_points(p.length, opt.dx) : 2;
        for (bool supply : {true, false}) pend.push_back({j, supply, M, p.length / (M - 1)});
    }
    std::vector<std::vector<int>> grid_vars(pend.size());
    for (std::size_t g = 0; g < pend.size(); ++g) {
        const auto& pd = pend[g];
        const auto& p = heat.pipes[pd.pipe];
        grid_vars[g].assign(static_cast<std::size_t>(pd.M), -1);
        for (int i = 1; i < pd.M; ++i)
            grid_vars[g][static_cast<std::size_t>(i)] = md.add_var(
                detail::grid_name(pd.supply, p.id, detail::physical_index(pd.supply, p.reversed, pd.M, i)), Role::X);
    }
    for (std::size_t g = 0; g < pend.size(); ++g) {
        const auto& pd = pend[g];
        const auto& p = heat.pipes[pd.pipe];
        grid_vars[g][0] =
            md.add_var(detail::grid_name(pd.supply, p.id, detail::physical_index(pd.supply, p.reversed, pd.M, 0)), Role::Z);
    }

    // W.
    auto add_w = [&](const std::string& name, std::optional<double> nominal) {
        const int v = md.add_var(name, Role::W);
        const auto it = opt.drivers.find(name);
        if (it != opt.drivers.end()) {
            md.drivers.emplace(v, it->second);
        } else {
            if (!nominal) throw ValidationError("known variable '" + name + "' has neither a driver nor a nominal value");
            md.drivers.emplace(v, DriverProfile::constant(*nominal));
        }
    };
    for (const auto& n : heat.nodes)
        if (n.kind == NodeKind::Slack || n.kind == NodeKind::Source) add_w("ts[" + n.id + "]", n.supply_temperature);
    for (const auto& n : heat.nodes)
        if (n.kind == NodeKind::Load) add_w("tr[" + n.id + "]", n.return_temperature);
    for (const auto& n : heat.nodes)
        if (is_rsl(n.kind) && !ks.phi_unknown.count(n.id)) add_w("phi[" + n.id + "]", n.power_mw);
    for (const auto& b : elec.buses) {
        if (b.kind == BusKind::Slack) {
            add_w("e[" + b.id + "]", b.e);
            add_w("f[" + b.id + "]", b.f);
        }
    }
    for (const auto& b : elec.buses)
        if (!ks.p_unknown.count(b.id)) add_w("p[" + b.id + "]", b.p);
    for (const auto& b : elec.buses)
        if (b.kind == BusKind::PQ) add_w("q[" + b.id + "]", b.q);
    for (const auto& b : elec.buses)
        if (b.kind == BusKind::PV) add_w("u[" + b.id + "]", b.voltage);
    for (const auto& [name, prof] : opt.drivers)
        if (!md.has(name) || md.vars[static_cast<std::size_t>(md.var(name))].role != Role::W)
            throw ValidationError("driver '" + name + "' does not name a known variable");

    md.finish(opt.order);

    // Grid blocks.
    for (std::size_t g = 0; g < pend.size(); ++g) {
        const auto& pd = pend[g];
        const auto& p = heat.pipes[pd.pipe];
        GridBlock b;
        b.pipe = pd.pipe;
        b.supply = pd.supply;
        b.grid = PipeGrid(p.id, p.length, pd.M == 2 ? p.length : opt.dx, opt.theta, thermal_of(p, heat.ambient), 0);
        b.var = grid_vars[g];
        b.m_var = md.var("m[" + p.id + "]");
        b.inlet_source = pd.supply ? md.var("ts[" + p.from + "]") : md.var("tr[" + p.to + "]");
        md.z_links.emplace_back(b.var[0], b.inlet_source);
        md.grids.push_back(std::move(b));
    }
    for (const auto& p : heat.pipes)
        if (p.reversed) md.flip_sign.push_back(md.var("m[" + p.id + "]"));

    auto outlet = [&](std::size_t pipe, bool supply) -> int {
        const auto& p = heat.pipes[pipe];
        if (p.implicit) return md.var((supply ? "tos[" : "tor[") + p.id + "]");
        for (const auto& g : md.grids)
            if (g.pipe == pipe && g.supply == supply) return g.var.back();
        throw std::logic_error("missing grid for pipe " + p.id);
    };

    const auto& V = heat.V;
    const auto& L = heat.L;
    const double cp_mw = heat.cp * 1e-6;

    // Continuity.
    for (std::size_t i = 0; i < heat.nodes.size(); ++i) {
        const auto& n = heat.nodes[i];
        Equation e{"continuity[" + n.id + "]", "continuity", {}, {}, 0.0};
        for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
            const double v = V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != 0.0) e.lin.push_back({md.var("m[" + heat.pipes[j].id + "]"), v});
        }
        if (n.kind == NodeKind::Slack || n.kind == NodeKind::Source) e.lin.push_back({md.var("min[" + n.id + "]"), 1.0});
        if (n.kind == NodeKind::Load) e.lin.push_back({md.var("min[" + n.id + "]"), -1.0});
        md.rows.push_back(std::move(e));
    }
    // Loop pressure.
    for (Eigen::Index l = 0; l < L.rows(); ++l) {
        Equation e{"loop[" + std::to_string(l + 1) + "]", "loop", {}, {}, 0.0};
        for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
            const double c = L(l, static_cast<Eigen::Index>(j)) * heat.pipes[j].resistance;
            if (c != 0.0) {
                const int m = md.var("m[" + heat.pipes[j].id + "]");
                e.bil.push_back({m, m, c});
            }
        }
        md.rows.push_back(std::move(e));
    }
    // Supply mixing at L, I nodes; return mixing at R, S, I nodes.
    for (std::size_t i = 0; i < heat.nodes.size(); ++i) {
        const auto& n = heat.nodes[i];
        if (n.kind != NodeKind::Load && n.kind != NodeKind::Intermediate) continue;
        Equation e{"mix_s[" + n.id + "]", "mixing_supply", {}, {}, 0.0};
        const int ts = md.var("ts[" + n.id + "]");
        for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
            if (V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= 0.0) continue;
            const int m = md.var("m[" + heat.pipes[j].id + "]");
            e.bil.push_back({ts, m, 1.0});
            e.bil.push_back({outlet(j, true), m, -1.0});
        }
        md.rows.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < heat.nodes.size(); ++i) {
        const auto& n = heat.nodes[i];
        if (n.kind == NodeKind::Load) continue;
        Equation e{"mix_r[" + n.id + "]", "mixing_return", {}, {}, 0.0};
        const int tr = md.var("tr[" + n.id + "]");
        for (std::size_t j = 0; j < heat.pipes.size(); ++j) {
            if (V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= 0.0) continue;
            const int m = md.var("m[" + heat.pipes[j].id + "]");
            e.bil.push_back({tr, m, -1.0});
            e.bil.push_back({outlet(j, false), m, 1.0});
        }
        md.rows.push_back(std::move(e));
    }
    // Node power, phi in MW.
    for (const auto& n : heat.nodes) {
        if (!is_rsl(n.kind)) continue;
        const int mi = md.var("min[" + n.id + "]");
        md.rows.push_back({"power[" + n.id + "]",
                           "node_power",
                           {{md.var("phi[" + n.id + "]"), 1.0}},
                           {{mi, md.var("ts[" + n.id + "]"), -cp_mw}, {mi, md.var("tr[" + n.id + "]"), cp_mw}},
                           0.0});
    }
    // Power flow.
    const auto nb = elec.buses.size();
    auto bus_var = [&](const char* q, std::size_t b) { return md.var(std::string(q) + "[" + elec.buses[b].id + "]"); };
    for (std::size_t i = 0; i < nb; ++i) {
        Equation e{"P[" + elec.buses[i].id + "]", "power_flow_p", {{bus_var("p", i), -1.0}}, {}, 0.0};
        for (std::size_t j = 0; j < nb; ++j) {
            const double G = elec.G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const double B = elec.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (G != 0.0) {
                e.bil.push_back({bus_var("e", i), bus_var("e", j), G});
                e.bil.push_back({bus_var("f", i), bus_var("f", j), G});
            }
            if (B != 0.0) {
                e.bil.push_back({bus_var("e", i), bus_var("f", j), -B});
                e.bil.push_back({bus_var("f", i), bus_var("e", j), B});
            }
        }
        md.rows.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < nb; ++i) {
        Equation e{"Q[" + elec.buses[i].id + "]", "power_flow_q", {{bus_var("q", i), -1.0}}, {}, 0.0};
        for (std::size_t j = 0; j < nb; ++j) {
            const double G = elec.G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const double B = elec.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (G != 0.0) {
                e.bil.push_back({bus_var("f", i), bus_var("e", j), G});
                e.bil.push_back({bus_var("e", i), bus_var("f", j), -G});
            }
            if (B != 0.0) {
                e.bil.push_back({bus_var("f", i), bus_var("f", j), -B});
                e.bil.push_back({bus_var("e", i), bus_var("e", j), -B});
            }
        }
        md.rows.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < nb; ++i) {
        if (elec.buses[i].kind != BusKind::PV) continue;
        const int e = bus_var("e", i), f = bus_var("f", i), u = bus_var("u", i);
        md.rows.push_back({"PV[" + elec.buses[i].id + "]", "pv_magnitude", {}, {{e, e, 1.0}, {f, f, 1.0}, {u, u, -1.0}}, 0.0});
    }
    // Coupling units.
    for (const auto& c : md.sys.couplings) {
        const int phi = md.var("phi[" + c.heat_node + "]");
        const int p = md.var("p[" + c.bus + "]");
        if (c.kind == CouplingKind::ExtractionSteamTurbine) {
            md.rows.push_back({"steam[" + c.heat_node + "," + c.bus + "]", "coupling", {{p, 1.0}, {phi, 1.0 / c.z}}, {},
                               -c.eta_e * c.f_in});
        } else {
            md.rows.push_back({"gas[" + c.heat_node + "," + c.bus + "]", "coupling", {{phi, 1.0}, {p, -c.c_m1}}, {}, 0.0});
        }
    }
    // Implicit pipe identities.
    for (const auto& p : heat.pipes) {
        if (!p.implicit) continue;
        md.rows.push_back({"implicit_s[" + p.id + "]", "implicit", {{md.var("tos[" + p.id + "]"), 1.0}, {md.var("ts[" + p.from + "]"), -1.0}}, {}, 0.0});
        md.rows.push_back({"implicit_r[" + p.id + "]", "implicit", {{md.var("tor[" + p.id + "]"), 1.0}, {md.var("tr[" + p.to + "]"), -1.0}}, {}, 0.0});
    }

    if (md.rows.size() != md.y_vars.size())
        throw ValidationError("algebraic system is not square: " + std::to_string(md.rows.size()) + " equations for " +
                              std::to_string(md.y_vars.size()) + " unknowns");
    md.set_drivers(0.0);
    return md;
}

/// Single pipe with known flow and inlet temperature: drivers m[p] and tin[p].
inline Model compile_pipe_model(const Pipe& pipe, double ambient, const DriverProfile& mdot,
                                const DriverProfile& inlet, const ModelOptions& opt) {
    Model md;
    md.theta = opt.theta;
    md.dx = opt.dx;
    const int M = opt.dx > 0.0 ? grid_points(pipe.length, opt.dx) : 2;
    std::vector<int> v(static_cast<std::size_t>(M));
    for (int i = 1; i < M; ++i) v[static_cast<std::size_t>(i)] = md.add_var(detail::grid_name(true, pipe.id, i), Role::X);
    v[0] = md.add_var(detail::grid_name(true, pipe.id, 0), Role::Z);
    const int m = md.add_var("m[" + pipe.id + "]", Role::W);
    const int tin = md.add_var("tin[" + pipe.id + "]", Role::W);
    md.drivers.emplace(m, mdot);
    md.drivers.emplace(tin, inlet);
    md.finish(opt.order);
    GridBlock b;
    b.pipe = 0;
    b.supply = true;
    b.grid = PipeGrid(pipe.id, pipe.length, M == 2 ? pipe.length : opt.dx, opt.theta, thermal_of(pipe, ambient), 0);
    b.var = v;
    b.m_var = m;
    b.inlet_source = tin;
    md.z_links.emplace_back(v[0], tin);
    md.grids.push_back(std::move(b));
    md.sys.heat.pipes.push_back(pipe);
    md.sys.heat.ambient = ambient;
    md.set_drivers(0.0);
    return md;
}

}  // namespace heies
