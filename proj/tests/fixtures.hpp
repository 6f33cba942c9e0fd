#pragma once

// Shared small systems for the tests.

#include <string>

#include "heies/io.hpp"
#include "heies/network.hpp"

namespace fixture {

inline heies::CoupledSystem chp() {
    return heies::io::parse_network(heies::io::read_json(std::string(HEIES_DATA_DIR) + "/chp_network.json"));
}

inline heies::Pipe pipe(const std::string& id, const std::string& from, const std::string& to, double length = 1000.0,
                        double lambda = 0.0) {
    heies::Pipe p;
    p.id = id;
    p.from = from;
    p.to = to;
    p.length = length;
    p.area = 0.0491;
    p.density = 1000.0;
    p.cp = 4182.0;
    p.lambda = lambda;
    p.resistance = 0.05;
    return p;
}

/// Slack source "1" feeding load "2" through one pipe. Heat only.
inline heies::CoupledSystem single_pipe(double load_mw = 2.0, double lambda = 0.0) {
    heies::CoupledSystem s;
    s.heat.ambient = 10.0;
    s.heat.nodes.push_back({"1", heies::NodeKind::Slack, 85.0, {}, {}});
    s.heat.nodes.push_back({"2", heies::NodeKind::Load, {}, load_mw, 45.0});
    s.heat.pipes.push_back(pipe("1", "1", "2", 1000.0, lambda));
    return s;
}

}  // namespace fixture
