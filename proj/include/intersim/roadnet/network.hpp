#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "intersim/types.hpp"

namespace intersim::roadnet {

struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

struct Link {
  std::string id;
  NodeIndex from;
  NodeIndex to;
  double length_m = 0.0;
  double vmax_mps = 0.0;
  int lanes = 1;
  double section_m = 500.0;
};

/// One approach of an intersection as written in the scenario document.
struct ApproachSpec {
  std::string link;
  std::optional<double> heading_deg;
  std::optional<int> lanes;
};

/// Geometry block consumed by the intersection module.
struct GeometrySpec {
  std::string node;  // empty for the default block
  double tile_size_m = 0.25;
  double lane_width_m = 3.0;
  double vehicle_length_m = 4.0;
  double vehicle_width_m = 2.0;
  std::vector<ApproachSpec> approaches;  // optional; derived from links when empty
};

struct OdEntry {
  std::string origin;
  std::string destination;
  std::optional<double> count;        // vehicles over the spawn window
  std::optional<double> rate_per_min; // Poisson rate for this pair
};

/// Parsed form of a scenario document. Serializing it reproduces the input document.
struct ScenarioDocument {
  std::string name;
  std::string model = "micro";
  std::vector<Node> nodes;
  struct RawLink {
    std::string id, from, to;
    double length_m = 0.0, vmax_mps = 0.0;
    int lanes = 1;
    double section_m = 500.0;
  };
  std::vector<RawLink> links;
  std::vector<GeometrySpec> intersections;
  std::optional<GeometrySpec> default_geometry;
  std::vector<OdEntry> od;
  nlohmann::json config = nlohmann::json::object();  // engine configuration, opaque here
};

/// Schema or consistency violation in a scenario document. `element` names the offender.
class NetworkError : public ConfigError {
 public:
  NetworkError(std::string element, const std::string& what)
      : ConfigError(element + ": " + what), element_(std::move(element)) {}
  const std::string& element() const { return element_; }

 private:
  std::string element_;
};

ScenarioDocument parse_scenario(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioDocument& doc);
ScenarioDocument read_scenario_file(const std::string& path);
void write_scenario_file(const ScenarioDocument& doc, const std::string& path);

class NetworkGraph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Node& node(NodeIndex n) const { return nodes_.at(n.value); }
  const Link& link(LinkIndex l) const { return links_.at(l.value); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::optional<NodeIndex> find_node(const std::string& id) const;
  std::optional<LinkIndex> find_link(const std::string& id) const;
  NodeIndex node_index(const std::string& id) const;
  LinkIndex link_index(const std::string& id) const;
  std::optional<LinkIndex> link_between(NodeIndex from, NodeIndex to) const;

  const std::vector<LinkIndex>& out_links(NodeIndex n) const { return out_.at(n.value); }
  const std::vector<LinkIndex>& in_links(NodeIndex n) const { return in_.at(n.value); }

  /// Nodes joining three or more distinct neighbours are reservation-managed intersections.
  bool is_intersection(NodeIndex n) const { return intersection_.at(n.value); }
  const std::vector<NodeIndex>& intersections() const { return intersection_nodes_; }
  /// True when the link ends at an intersection (its price is non-zero in priced modes).
  bool is_incoming(LinkIndex l) const { return is_intersection(link(l).to); }
  const GeometrySpec& geometry(NodeIndex n) const;

  /// Direction of travel along the link, radians, from node coordinates.
  double heading(LinkIndex l) const;
  /// Position of the link id in the sorted list of all link ids; used for tie-breaking.
  std::uint32_t link_rank(LinkIndex l) const { return link_rank_.at(l.value); }

  double free_flow_time(LinkIndex l) const { return link(l).length_m / link(l).vmax_mps; }

  friend NetworkGraph load_network(const ScenarioDocument& doc);

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkIndex>> out_;
  std::vector<std::vector<LinkIndex>> in_;
  std::vector<bool> intersection_;
  std::vector<NodeIndex> intersection_nodes_;
  std::unordered_map<std::uint32_t, GeometrySpec> geometry_;
  std::unordered_map<std::string, NodeIndex> node_ids_;
  std::unordered_map<std::string, LinkIndex> link_ids_;
  std::vector<std::uint32_t> link_rank_;
};

/// Validates a scenario document and builds the immutable graph.
/// Throws NetworkError naming the offending element.
NetworkGraph load_network(const ScenarioDocument& doc);

}  // namespace intersim::roadnet
