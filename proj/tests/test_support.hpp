#pragma once

#include <string>

#include "intersim/roadnet/network.hpp"

namespace intersim::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(INTERSIM_SCENARIO_DIR) + "/" + name;
}

/// Builds a document from (from, to, length) triples with vmax 1 m/s, so times equal lengths.
struct GraphBuilder {
  roadnet::ScenarioDocument doc;

  GraphBuilder() { doc.default_geometry = roadnet::GeometrySpec{}; }

  GraphBuilder& node(const std::string& id, double x = 0.0, double y = 0.0) {
    doc.nodes.push_back({id, x, y});
    return *this;
  }
  GraphBuilder& link(const std::string& id, const std::string& from, const std::string& to, double length,
                     double vmax = 1.0, int lanes = 1) {
    doc.links.push_back({id, from, to, length, vmax, lanes, 500.0});
    return *this;
  }
};

}  // namespace intersim::testing
