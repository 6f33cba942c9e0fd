#pragma once

// JSON network/scenario loading and CSV output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "driver.hpp"
#include "model.hpp"
#include "network.hpp"
#include "reference.hpp"
#include "sas.hpp"

namespace heies::io {

using nlohmann::json;
namespace fs = std::filesystem;

[[nodiscard]] inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

namespace detail {

template <class T>
T req(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(where + ": field '" + key + "' has the wrong type");
    }
}

template <class T>
std::optional<T> opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline std::string id_of(const json& j, const std::string& where) {
    if (!j.contains("id")) throw ValidationError(where + ": missing field 'id'");
    return j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
}

inline std::string ref_of(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
    return j.at(key).is_string() ? j.at(key).get<std::string>() : j.at(key).dump();
}

}  // namespace detail

[[nodiscard]] inline NodeKind parse_node_kind(const std::string& s) {
    if (s == "slack") return NodeKind::Slack;
    if (s == "source") return NodeKind::Source;
    if (s == "load") return NodeKind::Load;
    if (s == "intermediate") return NodeKind::Intermediate;
    throw ValidationError("unknown heat node kind '" + s + "'");
}

[[nodiscard]] inline BusKind parse_bus_kind(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::PV;
    if (s == "pq") return BusKind::PQ;
    throw ValidationError("unknown bus kind '" + s + "'");
}

[[nodiscard]] inline Pipe parse_pipe(const json& p) {
    const std::string where = "pipe " + detail::id_of(p, "pipe");
    Pipe out;
    out.id = detail::id_of(p, "pipe");
    out.from = detail::ref_of(p, "from", where);
    out.to = detail::ref_of(p, "to", where);
    out.length = detail::req<double>(p, "length", where);
    out.area = detail::req<double>(p, "area", where);
    out.density = p.value("density", 1000.0);
    out.cp = p.value("cp", 4182.0);
    out.lambda = p.value("lambda", 0.0);
    out.resistance = p.value("resistance", 0.0);
    return out;
}

[[nodiscard]] inline CoupledSystem parse_network(const json& j) {
    CoupledSystem sys;
    auto& h = sys.heat;
    h.ambient = j.value("ambient", 0.0);
    h.cp = j.value("cp", 4182.0);
    h.tau_base = detail::opt<double>(j, "tau_base");
    const json empty = json::array();
    for (const auto& n : j.contains("heat_nodes") ? j.at("heat_nodes") : empty) {
        const std::string where = "heat node " + detail::id_of(n, "heat node");
        HeatNode node;
        node.id = detail::id_of(n, "heat node");
        node.kind = parse_node_kind(detail::req<std::string>(n, "kind", where));
        node.supply_temperature = detail::opt<double>(n, "supply_temperature");
        node.power_mw = detail::opt<double>(n, "power_mw");
        node.return_temperature = detail::opt<double>(n, "return_temperature");
        h.nodes.push_back(std::move(node));
    }
    for (const auto& p : (j.contains("pipes") ? j.at("pipes") : empty)) h.pipes.push_back(parse_pipe(p));

    auto& e = sys.electric;
    for (const auto& b : (j.contains("buses") ? j.at("buses") : empty)) {
        const std::string where = "bus " + detail::id_of(b, "bus");
        Bus bus;
        bus.id = detail::id_of(b, "bus");
        bus.kind = parse_bus_kind(detail::req<std::string>(b, "kind", where));
        bus.p = b.value("p", 0.0);
        bus.q = b.value("q", 0.0);
        bus.voltage = b.value("voltage", 1.0);
        bus.e = b.value("e", 1.0);
        bus.f = b.value("f", 0.0);
        e.buses.push_back(std::move(bus));
    }
    for (const auto& br : (j.contains("branches") ? j.at("branches") : empty)) {
        Branch b;
        b.from = detail::ref_of(br, "from", "branch");
        b.to = detail::ref_of(br, "to", "branch");
        b.r = br.value("r", 0.0);
        b.x = br.value("x", 0.0);
        b.b = br.value("b", 0.0);
        e.branches.push_back(std::move(b));
    }
    for (const auto& c : (j.contains("couplings") ? j.at("couplings") : empty)) {
        CouplingUnit u;
        const auto kind = detail::req<std::string>(c, "kind", "coupling");
        if (kind == "steam_turbine") u.kind = CouplingKind::ExtractionSteamTurbine;
        else if (kind == "gas_turbine") u.kind = CouplingKind::GasTurbine;
        else throw ValidationError("unknown coupling kind '" + kind + "'");
        u.heat_node = detail::ref_of(c, "heat_node", "coupling");
        u.bus = detail::ref_of(c, "bus", "coupling");
        u.z = c.value("z", 0.0);
        u.eta_e = c.value("eta_e", 0.0);
        u.f_in = c.value("f_in", 0.0);
        u.c_m1 = c.value("c_m1", 0.0);
        sys.couplings.push_back(std::move(u));
    }
    return sys;
}

[[nodiscard]] inline DriverProfile parse_driver(const json& d) {
    if (d.is_number()) return DriverProfile::constant(d.get<double>());
    const auto kind = detail::req<std::string>(d, "kind", "driver");
    try {
        if (kind == "constant") return DriverProfile::constant(detail::req<double>(d, "value", "constant driver"));
        if (kind == "step")
            return DriverProfile(profile::Step{d.at("times").get<std::vector<double>>(),
                                               d.at("values").get<std::vector<double>>()});
        if (kind == "piecewise_linear")
            return DriverProfile(profile::PiecewiseLinear{d.at("times").get<std::vector<double>>(),
                                                          d.at("values").get<std::vector<double>>()});
        if (kind == "sinusoid")
            return DriverProfile(profile::Sinusoid{d.value("offset", 0.0), d.value("amplitude", 0.0),
                                                   detail::req<double>(d, "period", "sinusoid driver"),
                                                   d.value("phase", 0.0), d.value("start", 0.0),
                                                   detail::opt<double>(d, "end")});
        if (kind == "polynomial") return DriverProfile(profile::Polynomial{d.at("coeffs").get<std::vector<double>>()});
    } catch (const json::exception& e) {
        throw ValidationError("driver of kind '" + kind + "' is malformed: " + e.what());
    } catch (const DriverError& e) {
        throw ValidationError(e.what());
    }
    throw ValidationError("unknown driver kind '" + kind + "'");
}

/// Single-pipe test bench: constant-or-profiled flow and inlet temperature.
struct PipeBench {
    Pipe pipe;
    double ambient = 0.0;
    DriverProfile mdot;
    DriverProfile inlet;
    double initial = 0.0;  // uniform initial temperature; NaN means steady
    bool steady_initial = true;
    double fdm_dt = 1.0;
    double fdm_dx = 1.0;
};

struct Scenario {
    fs::path source;
    std::optional<CoupledSystem> system;
    std::optional<PipeBench> bench;
    std::map<std::string, DriverProfile> drivers;
    double horizon = 0.0;
    double cadence = 0.0;
    std::string solver = "dt";
    AdaptiveConfig adaptive;
    double dx = 0.0;
    ReferenceOptions reference;
    double noise = 0.0;
    std::optional<fs::path> initial_state;
};

[[nodiscard]] inline AdaptiveConfig parse_adaptive(const json& a, AdaptiveConfig c = {}) {
    c.order = a.value("order", c.order);
    c.atol = a.value("atol", c.atol);
    c.rtol = a.value("rtol", c.rtol);
    c.fac = a.value("fac", c.fac);
    c.fac_min = a.value("fac_min", c.fac_min);
    c.fac_max = a.value("fac_max", c.fac_max);
    c.dt_init = a.value("dt_init", c.dt_init);
    c.dt_min = a.value("dt_min", c.dt_min);
    c.dt_max = a.value("dt_max", c.dt_max);
    c.theta = a.value("theta", c.theta);
    return c;
}

[[nodiscard]] inline Scenario load_scenario(const fs::path& path) {
    Scenario s;
    s.source = path;
    const json j = read_json(path);
    const fs::path base = path.parent_path();
    try {
        if (j.contains("network")) {
            const fs::path net = base / j.at("network").get<std::string>();
            s.system = parse_network(read_json(net));
        }
        if (j.contains("pipe_bench")) {
            const auto& b = j.at("pipe_bench");
            PipeBench pb;
            pb.pipe = parse_pipe(b.at("pipe"));
            pb.ambient = b.value("ambient", 0.0);
            pb.mdot = parse_driver(b.at("mdot"));
            pb.inlet = parse_driver(b.at("inlet"));
            if (b.contains("initial")) {
                pb.initial = b.at("initial").get<double>();
                pb.steady_initial = false;
            }
            pb.fdm_dt = b.value("fdm_dt", 1.0);
            pb.fdm_dx = b.value("fdm_dx", 1.0);
            s.bench = pb;
        }
        if (!s.system && !s.bench) throw ValidationError("scenario needs a 'network' or a 'pipe_bench'");
        const json drivers = j.value("drivers", json::object());
        for (const auto& [name, d] : drivers.items()) s.drivers.emplace(name, parse_driver(d));
        s.horizon = detail::req<double>(j, "horizon", "scenario");
        s.cadence = j.value("cadence", s.horizon);
        s.solver = j.value("solver", std::string("dt"));
        s.adaptive = parse_adaptive(j.value("adaptive", json::object()));
        s.dx = j.value("dx", 0.0);
        if (j.contains("reference")) {
            s.reference.dt = j.at("reference").value("dt", 1.0);
        }
        s.noise = j.value("noise", 0.0);
        if (j.contains("initial_state")) s.initial_state = base / j.at("initial_state").get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError("scenario '" + path.string() + "': " + e.what());
    }
    if (!(s.horizon > 0.0)) throw ValidationError("scenario horizon must be > 0");
    if (!(s.cadence > 0.0)) throw ValidationError("scenario cadence must be > 0");
    return s;
}

// ---- CSV ---------------------------------------------------------------------------

[[nodiscard]] inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Long format: time_s,variable,value.
inline void write_trajectory(std::ostream& os, const std::vector<std::string>& names, const std::vector<Sample>& samples) {
    os << "time_s,variable,value\n";
    for (const auto& s : samples)
        for (std::size_t i = 0; i < names.size(); ++i)
            os << fmt(s.t) << ',' << names[i] << ',' << fmt(s.values(static_cast<Eigen::Index>(i))) << '\n';
}

/// Values at time t from a long-format CSV, keyed by variable name.
[[nodiscard]] inline std::map<std::string, double> read_trajectory_at(const fs::path& path, double t = 0.0) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "time_s,variable,value")
        throw ValidationError("'" + path.string() + "' lacks the header time_s,variable,value");
    std::map<std::string, double> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto a = line.find(',');
        const auto b = line.rfind(',');
        if (a == std::string::npos || a == b)
            throw ValidationError("'" + path.string() + "' line " + std::to_string(lineno) + " is malformed");
        const double ts = std::stod(line.substr(0, a));
        if (ts != t) continue;
        out[line.substr(a + 1, b - a - 1)] = std::stod(line.substr(b + 1));
    }
    if (out.empty()) throw ValidationError("'" + path.string() + "' has no samples at t = " + fmt(t));
    return out;
}

/// Overwrites column 0 of md with file-oriented values by name.
inline void apply_state(Model& md, const std::map<std::string, double>& values) {
    Eigen::VectorXd file = md.to_file(md.C.col(0));
    for (std::size_t i = 0; i < md.size(); ++i) {
        if (md.vars[i].role == Role::W) continue;
        const auto it = values.find(md.vars[i].name);
        if (it == values.end()) throw ValidationError("initial state lacks variable '" + md.vars[i].name + "'");
        file(static_cast<Eigen::Index>(i)) = it->second;
    }
    md.C.col(0) = md.from_file(file);
}

struct ResidualReport {
    std::map<std::string, double> scaled;  // family -> max scaled imbalance
    std::map<std::string, double> absolute;
    double headline = 0.0;
    std::string worst_family;
};

/// Max imbalance per equation family over all samples.
[[nodiscard]] inline ResidualReport residual_report(const SimulationResult& r) {
    ResidualReport rep;
    for (const auto& s : r.samples) {
        const auto& md = *r.epochs[s.epoch];
        const Eigen::VectorXd x = r.internal_values(s);
        for (const auto& row : md.rows) {
            const double a = std::abs(row.value(x));
            const double sc = a / row.scale(x);
            auto& ms = rep.scaled[row.family];
            auto& ma = rep.absolute[row.family];
            ms = std::max(ms, sc);
            ma = std::max(ma, a);
            if (sc > rep.headline || rep.worst_family.empty()) {
                if (sc >= rep.headline) rep.worst_family = row.family;
                rep.headline = std::max(rep.headline, sc);
            }
        }
    }
    return rep;
}

inline void write_residuals(std::ostream& os, const ResidualReport& rep) {
    os << "family,max_scaled_imbalance,max_abs_imbalance\n";
    for (const auto& [fam, v] : rep.scaled) os << fam << ',' << fmt(v) << ',' << fmt(rep.absolute.at(fam)) << '\n';
}

}  // namespace heies::io
