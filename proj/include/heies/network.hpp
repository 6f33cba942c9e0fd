#pragma once

// Heat/electric network topology: node typing, incidence and loop matrices,
// compound-node expansion and pipe reversal.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace heies {

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NodeKind { Slack, Source, Load, Intermediate };
enum class BusKind { Slack, PV, PQ };
enum class CouplingKind { ExtractionSteamTurbine, GasTurbine };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Slack: return "slack";
        case NodeKind::Source: return "source";
        case NodeKind::Load: return "load";
        case NodeKind::Intermediate: return "intermediate";
    }
    return "?";
}

struct HeatNode {
    std::string id;
    NodeKind kind = NodeKind::Intermediate;
    // Nominal values of the known quantities; scenario drivers override them.
    std::optional<double> supply_temperature;
    std::optional<double> power_mw;
    std::optional<double> return_temperature;
};

struct Pipe {
    std::string id;
    std::string from;
    std::string to;
    double length = 0.0;      // m
    double area = 0.0;        // m^2
    double density = 0.0;     // kg/m^3
    double cp = 0.0;          // J/(kg K)
    double lambda = 0.0;      // W/(m K)
    double resistance = 0.0;  // head-loss coefficient
    bool reversed = false;
    bool implicit = false;
};

struct HeatNetwork {
    std::vector<HeatNode> nodes;
    std::vector<Pipe> pipes;
    double ambient = 0.0;
    double cp = 4182.0;              // J/(kg K), used by node power balances
    std::optional<double> tau_base;  // display normalization only
    Eigen::MatrixXd V;               // nodes x pipes
    Eigen::MatrixXd L;               // loops x pipes

    [[nodiscard]] std::size_t node_index(const std::string& id) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return i;
        throw ValidationError("unknown heat node '" + id + "'");
    }
    [[nodiscard]] std::size_t pipe_index(const std::string& id) const {
        for (std::size_t i = 0; i < pipes.size(); ++i)
            if (pipes[i].id == id) return i;
        throw ValidationError("unknown pipe '" + id + "'");
    }
    [[nodiscard]] bool has_node(const std::string& id) const {
        return std::any_of(nodes.begin(), nodes.end(), [&](const HeatNode& n) { return n.id == id; });
    }
};

struct Bus {
    std::string id;
    BusKind kind = BusKind::PQ;
    double p = 0.0;
    double q = 0.0;
    double voltage = 1.0;  // PV magnitude setpoint
    double e = 1.0;        // slack voltage, real part
    double f = 0.0;        // slack voltage, imaginary part
};

struct Branch {
    std::string from;
    std::string to;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;  // total line charging
};

struct ElectricNetwork {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    Eigen::MatrixXd G;
    Eigen::MatrixXd B;

    [[nodiscard]] std::size_t bus_index(const std::string& id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        throw ValidationError("unknown bus '" + id + "'");
    }
};

struct CouplingUnit {
    CouplingKind kind = CouplingKind::ExtractionSteamTurbine;
    std::string heat_node;
    std::string bus;
    double z = 0.0;
    double eta_e = 0.0;
    double f_in = 0.0;
    double c_m1 = 0.0;
};

struct CoupledSystem {
    HeatNetwork heat;
    ElectricNetwork electric;
    std::vector<CouplingUnit> couplings;
};

struct Incidence {
    Eigen::MatrixXd V;
    Eigen::MatrixXd L;
};

/// V from pipe endpoints; L from the fundamental cycles of a breadth-first
/// spanning tree. Adjacency is scanned in pipe order so the basis is
/// deterministic; each cycle is oriented along its chord.
inline Incidence build_incidence(const std::vector<HeatNode>& nodes, const std::vector<Pipe>& pipes) {
    const auto n = nodes.size();
    const auto m = pipes.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        if (!index.emplace(nodes[i].id, i).second)
            throw ValidationError("duplicate heat node id '" + nodes[i].id + "'");
    }

    Incidence out;
    out.V = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::vector<std::size_t> from(m), to(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto f = index.find(pipes[j].from);
        const auto t = index.find(pipes[j].to);
        if (f == index.end() || t == index.end())
            throw ValidationError("pipe '" + pipes[j].id + "' references unknown node '" +
                                  (f == index.end() ? pipes[j].from : pipes[j].to) + "'");
        if (f->second == t->second) throw ValidationError("pipe '" + pipes[j].id + "' is a self loop");
        from[j] = f->second;
        to[j] = t->second;
        out.V(static_cast<Eigen::Index>(from[j]), static_cast<Eigen::Index>(j)) = -1.0;
        out.V(static_cast<Eigen::Index>(to[j]), static_cast<Eigen::Index>(j)) = 1.0;
    }
    if (n == 0) {
        out.L.resize(0, static_cast<Eigen::Index>(m));
        return out;
    }

    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t j = 0; j < m; ++j) {
        adj[from[j]].push_back(j);
        adj[to[j]].push_back(j);
    }

    // parent pipe of each node in the tree, and its depth
    std::vector<std::optional<std::size_t>> parent(n);
    std::vector<int> depth(n, -1);
    std::vector<bool> tree(m, false);
    std::queue<std::size_t> bfs;
    depth[0] = 0;
    bfs.push(0);
    while (!bfs.empty()) {
        const auto u = bfs.front();
        bfs.pop();
        for (auto j : adj[u]) {
            const auto v = from[j] == u ? to[j] : from[j];
            if (depth[v] >= 0) continue;
            depth[v] = depth[u] + 1;
            parent[v] = j;
            tree[j] = true;
            bfs.push(v);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (depth[i] < 0) throw ValidationError("heat network is disconnected at node '" + nodes[i].id + "'");

    std::vector<Eigen::RowVectorXd> rows;
    for (std::size_t c = 0; c < m; ++c) {
        if (tree[c]) continue;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(m));
        row(static_cast<Eigen::Index>(c)) = 1.0;
        // Walk from the chord's head back to its tail: head -> LCA -> tail.
        auto a = to[c];
        auto b = from[c];
        std::vector<std::pair<std::size_t, double>> tail_side;
        while (a != b) {
            if (depth[a] >= depth[b]) {
                const auto j = *parent[a];
                // moving from a toward the root
                row(static_cast<Eigen::Index>(j)) += (from[j] == a) ? 1.0 : -1.0;
                a = from[j] == a ? to[j] : from[j];
            } else {
                const auto j = *parent[b];
                // this edge is traversed root-to-b on the way to the tail
                tail_side.emplace_back(j, (to[j] == b) ? 1.0 : -1.0);
                b = from[j] == b ? to[j] : from[j];
            }
        }
        for (const auto& [j, s] : tail_side) row(static_cast<Eigen::Index>(j)) += s;
        rows.push_back(row);
    }
    out.L.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < rows.size(); ++r) out.L.row(static_cast<Eigen::Index>(r)) = rows[r];
    return out;
}

inline void rebuild_incidence(HeatNetwork& net) {
    auto inc = build_incidence(net.nodes, net.pipes);
    net.V = std::move(inc.V);
    net.L = std::move(inc.L);
}

/// Dense G, B from pi-model branches.
inline void build_admittance(ElectricNetwork& net) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& br : net.branches) {
        const auto i = static_cast<Eigen::Index>(net.bus_index(br.from));
        const auto k = static_cast<Eigen::Index>(net.bus_index(br.to));
        if (i == k) throw ValidationError("branch " + br.from + "-" + br.to + " is a self loop");
        if (br.r == 0.0 && br.x == 0.0)
            throw ValidationError("branch " + br.from + "-" + br.to + " has zero impedance");
        const std::complex<double> y = 1.0 / std::complex<double>(br.r, br.x);
        const std::complex<double> sh(0.0, br.b / 2.0);
        Y(i, i) += y + sh;
        Y(k, k) += y + sh;
        Y(i, k) -= y;
        Y(k, i) -= y;
    }
    net.G = Y.real();
    net.B = Y.imag();
}

struct ExpansionMap {
    // original node id -> virtual node id carrying its load/source role
    std::map<std::string, std::string> moved;
};

/// Splits nodes that are both a load/source and a junction: a load with an
/// outgoing pipe or a slack/source with an incoming pipe. The role moves to a
/// virtual leaf node joined by a zero-length implicit pipe and the original
/// becomes Intermediate.
inline HeatNetwork expand_compound_nodes(const HeatNetwork& in, ExpansionMap* map = nullptr) {
    HeatNetwork net = in;
    std::vector<HeatNode> extra_nodes;
    std::vector<Pipe> extra_pipes;
    for (auto& node : net.nodes) {
        if (node.kind == NodeKind::Intermediate) continue;
        const bool is_load = node.kind == NodeKind::Load;
        const Pipe* neighbour = nullptr;
        bool compound = false;
        for (const auto& p : in.pipes) {
            if (p.from != node.id && p.to != node.id) continue;
            if (!neighbour) neighbour = &p;
            if ((is_load && p.from == node.id) || (!is_load && p.to == node.id)) compound = true;
        }
        if (!compound) continue;

        HeatNode v = node;
        v.id = node.id + (is_load ? "/load" : "/src");
        Pipe link;
        link.id = node.id + "/link";
        link.from = is_load ? node.id : v.id;
        link.to = is_load ? v.id : node.id;
        link.area = neighbour->area;
        link.density = neighbour->density;
        link.cp = neighbour->cp;
        link.implicit = true;
        if (map) map->moved[node.id] = v.id;

        node.kind = NodeKind::Intermediate;
        node.supply_temperature.reset();
        node.power_mw.reset();
        node.return_temperature.reset();
        extra_nodes.push_back(std::move(v));
        extra_pipes.push_back(std::move(link));
    }
    net.nodes.insert(net.nodes.end(), extra_nodes.begin(), extra_nodes.end());
    net.pipes.insert(net.pipes.end(), extra_pipes.begin(), extra_pipes.end());
    rebuild_incidence(net);
    return net;
}

/// Negates the V and L columns of the listed pipes, swaps their endpoints and
/// toggles the orientation flag.
inline HeatNetwork reverse_pipes(const HeatNetwork& in, const std::vector<std::string>& pipe_ids) {
    if (pipe_ids.empty()) throw ValidationError("reverse_pipes needs at least one pipe id");
    HeatNetwork net = in;
    for (const auto& id : pipe_ids) {
        const auto j = net.pipe_index(id);
        auto& p = net.pipes[j];
        std::swap(p.from, p.to);
        p.reversed = !p.reversed;
        net.V.col(static_cast<Eigen::Index>(j)) *= -1.0;
        if (net.L.rows() > 0) net.L.col(static_cast<Eigen::Index>(j)) *= -1.0;
    }
    return net;
}

/// Structural and physical checks; messages name the offending element.
inline void validate(const CoupledSystem& sys) {
    const auto& h = sys.heat;
    std::set<std::string> pipe_ids;
    for (const auto& p : h.pipes) {
        if (!pipe_ids.insert(p.id).second) throw ValidationError("duplicate pipe id '" + p.id + "'");
        const std::string where = "pipe '" + p.id + "': ";
        if (p.length < 0.0) throw ValidationError(where + "length must be >= 0");
        if (p.length == 0.0 && !p.implicit)
            throw ValidationError(where + "zero length is reserved for implicit pipes");
        if (!(p.area > 0.0)) throw ValidationError(where + "cross section must be > 0");
        if (!(p.density > 0.0)) throw ValidationError(where + "density must be > 0");
        if (!(p.cp > 0.0)) throw ValidationError(where + "heat capacity must be > 0");
        if (p.lambda < 0.0) throw ValidationError(where + "heat transfer coefficient must be >= 0");
        if (p.resistance < 0.0) throw ValidationError(where + "resistance must be >= 0");
    }
    const auto slacks = std::count_if(h.nodes.begin(), h.nodes.end(),
                                      [](const HeatNode& n) { return n.kind == NodeKind::Slack; });
    if (!h.nodes.empty() && slacks != 1)
        throw ValidationError("heat network needs exactly one slack node, found " + std::to_string(slacks));
    for (const auto& n : h.nodes) {
        const std::string where = "heat node '" + n.id + "': ";
        switch (n.kind) {
            case NodeKind::Slack:
                if (!n.supply_temperature) throw ValidationError(where + "slack needs supply_temperature");
                break;
            case NodeKind::Source:
                if (!n.supply_temperature) throw ValidationError(where + "source needs supply_temperature");
                break;
            case NodeKind::Load:
                if (!n.return_temperature) throw ValidationError(where + "load needs return_temperature");
                break;
            case NodeKind::Intermediate: break;
        }
    }
    // Also checks endpoints and connectivity.
    (void)build_incidence(h.nodes, h.pipes);

    const auto& e = sys.electric;
    if (!e.buses.empty()) {
        const auto bs = std::count_if(e.buses.begin(), e.buses.end(),
                                      [](const Bus& b) { return b.kind == BusKind::Slack; });
        if (bs != 1) throw ValidationError("electric network needs exactly one slack bus, found " + std::to_string(bs));
        std::set<std::string> ids;
        for (const auto& b : e.buses) {
            if (!ids.insert(b.id).second) throw ValidationError("duplicate bus id '" + b.id + "'");
            if (b.kind == BusKind::PV && !(b.voltage > 0.0))
                throw ValidationError("bus '" + b.id + "': voltage setpoint must be > 0");
        }
    }
    for (const auto& c : sys.couplings) {
        if (!h.has_node(c.heat_node)) throw ValidationError("coupling references unknown heat node '" + c.heat_node + "'");
        (void)e.bus_index(c.bus);
        if (c.kind == CouplingKind::ExtractionSteamTurbine && !(c.z > 0.0))
            throw ValidationError("steam turbine at '" + c.heat_node + "': Z must be > 0");
        if (c.kind == CouplingKind::GasTurbine && !(c.c_m1 > 0.0))
            throw ValidationError("gas turbine at '" + c.heat_node + "': c_m1 must be > 0");
    }
}

}  // namespace heies
