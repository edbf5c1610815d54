#include "intersim/roadnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

namespace intersim::roadnet {

namespace {

using nlohmann::json;

template <typename T>
T require(const json& obj, const char* key, const std::string& element) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw NetworkError(element, std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw NetworkError(element, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& obj, const char* key, const std::string& element) {
  if (!obj.contains(key)) return std::nullopt;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw NetworkError(element, std::string("field '") + key + "' has the wrong type");
  }
}

GeometrySpec parse_geometry(const json& g, const std::string& element, bool needs_node) {
  GeometrySpec spec;
  if (needs_node) spec.node = require<std::string>(g, "node", element);
  if (auto v = optional_field<double>(g, "tile_size_m", element)) spec.tile_size_m = *v;
  if (auto v = optional_field<double>(g, "lane_width_m", element)) spec.lane_width_m = *v;
  if (auto v = optional_field<double>(g, "vehicle_length_m", element)) spec.vehicle_length_m = *v;
  if (auto v = optional_field<double>(g, "vehicle_width_m", element)) spec.vehicle_width_m = *v;
  if (g.contains("approaches")) {
    for (const auto& a : g.at("approaches")) {
      ApproachSpec ap;
      ap.link = require<std::string>(a, "link", element + "/approach");
      ap.heading_deg = optional_field<double>(a, "heading_deg", element + "/" + ap.link);
      ap.lanes = optional_field<int>(a, "lanes", element + "/" + ap.link);
      spec.approaches.push_back(ap);
    }
  }
  const std::string who = needs_node ? "intersection " + spec.node : "default_geometry";
  if (!(spec.tile_size_m > 0)) throw NetworkError(who, "tile_size_m must be positive");
  if (!(spec.lane_width_m > 0)) throw NetworkError(who, "lane_width_m must be positive");
  if (!(spec.vehicle_length_m > 0) || !(spec.vehicle_width_m > 0)) {
    throw NetworkError(who, "vehicle footprint must be positive");
  }
  return spec;
}

json geometry_to_json(const GeometrySpec& g, bool with_node) {
  json out = json::object();
  if (with_node) out["node"] = g.node;
  out["tile_size_m"] = g.tile_size_m;
  out["lane_width_m"] = g.lane_width_m;
  out["vehicle_length_m"] = g.vehicle_length_m;
  out["vehicle_width_m"] = g.vehicle_width_m;
  if (!g.approaches.empty()) {
    json arr = json::array();
    for (const auto& a : g.approaches) {
      json aj = {{"link", a.link}};
      if (a.heading_deg) aj["heading_deg"] = *a.heading_deg;
      if (a.lanes) aj["lanes"] = *a.lanes;
      arr.push_back(aj);
    }
    out["approaches"] = arr;
  }
  return out;
}

}  // namespace

ScenarioDocument parse_scenario(const json& doc) {
  if (!doc.is_object()) throw NetworkError("document", "scenario must be a JSON object");
  ScenarioDocument out;
  out.name = doc.value("name", std::string{});
  out.model = doc.value("model", std::string{"micro"});
  if (out.model != "micro" && out.model != "meso") {
    throw NetworkError("model", "must be 'micro' or 'meso'");
  }
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
    throw NetworkError("nodes", "missing node array");
  }
  if (!doc.contains("links") || !doc.at("links").is_array()) {
    throw NetworkError("links", "missing link array");
  }
  for (const auto& n : doc.at("nodes")) {
    const std::string id = require<std::string>(n, "id", "node");
    out.nodes.push_back(Node{id, require<double>(n, "x", "node " + id), require<double>(n, "y", "node " + id)});
  }
  for (const auto& l : doc.at("links")) {
    ScenarioDocument::RawLink raw;
    raw.id = require<std::string>(l, "id", "link");
    const std::string who = "link " + raw.id;
    raw.from = require<std::string>(l, "from", who);
    raw.to = require<std::string>(l, "to", who);
    raw.length_m = require<double>(l, "length_m", who);
    raw.vmax_mps = require<double>(l, "vmax_mps", who);
    raw.lanes = l.contains("lanes") ? require<int>(l, "lanes", who) : 1;
    raw.section_m = l.contains("section_m") ? require<double>(l, "section_m", who) : 500.0;
    out.links.push_back(raw);
  }
  if (doc.contains("intersections")) {
    for (const auto& g : doc.at("intersections")) {
      out.intersections.push_back(parse_geometry(g, "intersection", true));
    }
  }
  if (doc.contains("default_geometry")) {
    out.default_geometry = parse_geometry(doc.at("default_geometry"), "default_geometry", false);
  }
  if (doc.contains("od")) {
    for (const auto& e : doc.at("od")) {
      OdEntry od;
      od.origin = require<std::string>(e, "origin", "od");
      od.destination = require<std::string>(e, "destination", "od");
      const std::string who = "od " + od.origin + "->" + od.destination;
      od.count = optional_field<double>(e, "count", who);
      od.rate_per_min = optional_field<double>(e, "rate_per_min", who);
      if (od.count && *od.count < 0) throw NetworkError(who, "count must be non-negative");
      if (od.rate_per_min && *od.rate_per_min < 0) throw NetworkError(who, "rate must be non-negative");
      out.od.push_back(od);
    }
  }
  if (doc.contains("config")) {
    if (!doc.at("config").is_object()) throw NetworkError("config", "must be an object");
    out.config = doc.at("config");
  }
  return out;
}

json to_json(const ScenarioDocument& doc) {
  json out = json::object();
  out["name"] = doc.name;
  out["model"] = doc.model;
  json nodes = json::array();
  for (const auto& n : doc.nodes) nodes.push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
  out["nodes"] = nodes;
  json links = json::array();
  for (const auto& l : doc.links) {
    links.push_back({{"id", l.id},
                     {"from", l.from},
                     {"to", l.to},
                     {"length_m", l.length_m},
                     {"vmax_mps", l.vmax_mps},
                     {"lanes", l.lanes},
                     {"section_m", l.section_m}});
  }
  out["links"] = links;
  json isects = json::array();
  for (const auto& g : doc.intersections) isects.push_back(geometry_to_json(g, true));
  out["intersections"] = isects;
  if (doc.default_geometry) out["default_geometry"] = geometry_to_json(*doc.default_geometry, false);
  json od = json::array();
  for (const auto& e : doc.od) {
    json ej = {{"origin", e.origin}, {"destination", e.destination}};
    if (e.count) ej["count"] = *e.count;
    if (e.rate_per_min) ej["rate_per_min"] = *e.rate_per_min;
    od.push_back(ej);
  }
  out["od"] = od;
  out["config"] = doc.config;
  return out;
}

ScenarioDocument read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_scenario(doc);
}

void write_scenario_file(const ScenarioDocument& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file '" + path + "'");
  out << to_json(doc).dump(2) << '\n';
}

std::optional<NodeIndex> NetworkGraph::find_node(const std::string& id) const {
  auto it = node_ids_.find(id);
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<LinkIndex> NetworkGraph::find_link(const std::string& id) const {
  auto it = link_ids_.find(id);
  if (it == link_ids_.end()) return std::nullopt;
  return it->second;
}

NodeIndex NetworkGraph::node_index(const std::string& id) const {
  if (auto n = find_node(id)) return *n;
  throw NetworkError("node " + id, "unknown node");
}

LinkIndex NetworkGraph::link_index(const std::string& id) const {
  if (auto l = find_link(id)) return *l;
  throw NetworkError("link " + id, "unknown link");
}

std::optional<LinkIndex> NetworkGraph::link_between(NodeIndex from, NodeIndex to) const {
  for (LinkIndex l : out_links(from)) {
    if (link(l).to == to) return l;
  }
  return std::nullopt;
}

const GeometrySpec& NetworkGraph::geometry(NodeIndex n) const {
  auto it = geometry_.find(n.value);
  if (it == geometry_.end()) throw NetworkError("node " + node(n).id, "not an intersection");
  return it->second;
}

double NetworkGraph::heading(LinkIndex l) const {
  const auto& a = node(link(l).from);
  const auto& b = node(link(l).to);
  return std::atan2(b.y - a.y, b.x - a.x);
}

NetworkGraph load_network(const ScenarioDocument& doc) {
  NetworkGraph g;
  for (const auto& n : doc.nodes) {
    if (n.id.empty()) throw NetworkError("node", "empty id");
    if (!g.node_ids_.emplace(n.id, NodeIndex(static_cast<std::uint32_t>(g.nodes_.size()))).second) {
      throw NetworkError("node " + n.id, "duplicate node id");
    }
    g.nodes_.push_back(n);
  }
  g.out_.resize(g.nodes_.size());
  g.in_.resize(g.nodes_.size());
  for (const auto& raw : doc.links) {
    const std::string who = "link " + raw.id;
    auto from = g.find_node(raw.from);
    auto to = g.find_node(raw.to);
    if (!from) throw NetworkError(who, "references unknown node '" + raw.from + "'");
    if (!to) throw NetworkError(who, "references unknown node '" + raw.to + "'");
    if (*from == *to) throw NetworkError(who, "self loop");
    if (!(raw.length_m > 0)) throw NetworkError(who, "length_m must be positive");
    if (!(raw.vmax_mps > 0)) throw NetworkError(who, "vmax_mps must be positive");
    if (raw.lanes < 1) throw NetworkError(who, "lanes must be at least 1");
    if (!(raw.section_m > 0)) throw NetworkError(who, "section_m must be positive");
    LinkIndex idx(static_cast<std::uint32_t>(g.links_.size()));
    if (!g.link_ids_.emplace(raw.id, idx).second) throw NetworkError(who, "duplicate link id");
    g.links_.push_back(Link{raw.id, *from, *to, raw.length_m, raw.vmax_mps, raw.lanes, raw.section_m});
    g.out_[from->value].push_back(idx);
    g.in_[to->value].push_back(idx);
  }

  std::vector<std::uint32_t> order(g.links_.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return g.links_[a].id < g.links_[b].id; });
  g.link_rank_.resize(order.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) g.link_rank_[order[r]] = r;

  g.intersection_.assign(g.nodes_.size(), false);
  for (std::uint32_t n = 0; n < g.nodes_.size(); ++n) {
    std::set<std::uint32_t> neighbours;
    for (LinkIndex l : g.out_[n]) neighbours.insert(g.links_[l.value].to.value);
    for (LinkIndex l : g.in_[n]) neighbours.insert(g.links_[l.value].from.value);
    if (neighbours.size() >= 3) {
      g.intersection_[n] = true;
      g.intersection_nodes_.push_back(NodeIndex(n));
    }
  }

  for (const auto& spec : doc.intersections) {
    auto n = g.find_node(spec.node);
    if (!n) throw NetworkError("intersection " + spec.node, "references unknown node");
    if (!g.intersection_[n->value]) {
      throw NetworkError("intersection " + spec.node, "node joins fewer than three neighbours");
    }
    for (const auto& ap : spec.approaches) {
      auto l = g.find_link(ap.link);
      if (!l || g.links_[l->value].to != *n) {
        throw NetworkError("intersection " + spec.node, "approach '" + ap.link + "' is not an incoming link");
      }
      if (ap.lanes && *ap.lanes != g.links_[l->value].lanes) {
        throw NetworkError("intersection " + spec.node, "approach '" + ap.link + "' lane count disagrees with link");
      }
    }
    if (!g.geometry_.emplace(n->value, spec).second) {
      throw NetworkError("intersection " + spec.node, "duplicate geometry block");
    }
  }
  for (NodeIndex n : g.intersection_nodes_) {
    if (g.geometry_.count(n.value)) continue;
    if (!doc.default_geometry) {
      throw NetworkError("intersection " + g.nodes_[n.value].id, "no geometry block and no default_geometry");
    }
    GeometrySpec spec = *doc.default_geometry;
    spec.node = g.nodes_[n.value].id;
    g.geometry_.emplace(n.value, spec);
  }

  // Every configured OD pair must be connected.
  for (const auto& od : doc.od) {
    const std::string who = "od " + od.origin + "->" + od.destination;
    auto o = g.find_node(od.origin);
    auto d = g.find_node(od.destination);
    if (!o) throw NetworkError(who, "unknown origin node");
    if (!d) throw NetworkError(who, "unknown destination node");
    if (*o == *d) throw NetworkError(who, "origin equals destination");
    std::vector<bool> seen(g.nodes_.size(), false);
    std::queue<std::uint32_t> frontier;
    frontier.push(o->value);
    seen[o->value] = true;
    while (!frontier.empty()) {
      auto u = frontier.front();
      frontier.pop();
      for (LinkIndex l : g.out_[u]) {
        auto v = g.links_[l.value].to.value;
        if (!seen[v]) {
          seen[v] = true;
          frontier.push(v);
        }
      }
    }
    if (!seen[d->value]) throw NetworkError(who, "destination unreachable from origin");
  }
  return g;
}

}  // namespace intersim::roadnet
