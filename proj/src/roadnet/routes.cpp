#include "intersim/roadnet/routes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>

namespace intersim::roadnet {

namespace {

constexpr double kRelTol = 1e-9;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

struct Bans {
  std::vector<bool> node;
  std::vector<bool> link;
};

// Lex-min shortest path from `src` to `dst` under the bans, or nothing.
// Distances to `dst` come from a reverse Dijkstra; the forward walk then takes
// the lowest-ranked tight link at every node, which yields the lex-min sequence.
std::optional<std::vector<LinkIndex>> lexmin_shortest(const NetworkGraph& g, NodeIndex src, NodeIndex dst,
                                                      const Bans& bans) {
  if (bans.node[src.value] || bans.node[dst.value]) return std::nullopt;
  std::vector<double> dist(g.node_count(), kInfinity);
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[dst.value] = 0.0;
  heap.emplace(0.0, dst.value);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (LinkIndex l : g.in_links(NodeIndex(u))) {
      if (bans.link[l.value]) continue;
      auto v = g.link(l).from.value;
      if (bans.node[v]) continue;
      double nd = d + g.free_flow_time(l);
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  if (dist[src.value] == kInfinity) return std::nullopt;

  std::vector<LinkIndex> path;
  NodeIndex at = src;
  while (at != dst) {
    std::optional<LinkIndex> pick;
    for (LinkIndex l : g.out_links(at)) {
      if (bans.link[l.value]) continue;
      auto v = g.link(l).to;
      if (bans.node[v.value] || dist[v.value] == kInfinity) continue;
      if (!nearly_equal(g.free_flow_time(l) + dist[v.value], dist[at.value])) continue;
      if (!pick || g.link_rank(l) < g.link_rank(*pick)) pick = l;
    }
    if (!pick) return std::nullopt;  // unreachable given a finite distance
    path.push_back(*pick);
    at = g.link(*pick).to;
  }
  return path;
}

Route make_route(const NetworkGraph& g, std::vector<LinkIndex> links) {
  Route r;
  r.free_flow_s = free_flow_time(g, links);
  r.links = std::move(links);
  return r;
}

std::vector<Route> yen(const NetworkGraph& g, NodeIndex origin, NodeIndex destination, std::size_t k,
                       const std::vector<bool>& base_node_bans) {
  std::vector<Route> accepted;
  if (k == 0) return accepted;
  Bans bans{base_node_bans, std::vector<bool>(g.link_count(), false)};
  auto first = lexmin_shortest(g, origin, destination, bans);
  if (!first) return accepted;
  accepted.push_back(make_route(g, std::move(*first)));

  std::vector<Route> candidates;
  while (accepted.size() < k) {
    const Route& prev = accepted.back();
    NodeIndex spur = origin;
    for (std::size_t i = 0; i < prev.links.size(); ++i) {
      bans.node = base_node_bans;
      std::fill(bans.link.begin(), bans.link.end(), false);
      std::span<const LinkIndex> root(prev.links.data(), i);
      for (const Route& p : accepted) {
        if (p.links.size() > i && std::equal(root.begin(), root.end(), p.links.begin())) {
          bans.link[p.links[i].value] = true;
        }
      }
      for (LinkIndex l : root) bans.node[g.link(l).from.value] = true;
      if (auto tail = lexmin_shortest(g, spur, destination, bans)) {
        std::vector<LinkIndex> full(root.begin(), root.end());
        full.insert(full.end(), tail->begin(), tail->end());
        bool known = std::any_of(candidates.begin(), candidates.end(),
                                 [&](const Route& c) { return c.links == full; }) ||
                     std::any_of(accepted.begin(), accepted.end(),
                                 [&](const Route& c) { return c.links == full; });
        if (!known) candidates.push_back(make_route(g, std::move(full)));
      }
      spur = g.link(prev.links[i]).to;
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(),
                                 [&](const Route& a, const Route& b) { return route_less(g, a, b); });
    accepted.push_back(std::move(*best));
    candidates.erase(best);
  }
  return accepted;
}

}  // namespace

double free_flow_time(const NetworkGraph& g, std::span<const LinkIndex> links) {
  double t = 0.0;
  for (LinkIndex l : links) t += g.free_flow_time(l);
  return t;
}

Money route_price(const NetworkGraph& g, const Route& route, const PriceView& prices) {
  Money total = 0.0;
  for (LinkIndex l : route.links) {
    if (g.is_incoming(l)) total += prices.at(l);
  }
  return total;
}

Money route_max_price(const NetworkGraph& g, const Route& route, const PriceView& prices) {
  Money worst = 0.0;
  for (LinkIndex l : route.links) {
    if (g.is_incoming(l)) worst = std::max(worst, prices.at(l));
  }
  return worst;
}

bool lex_less(const NetworkGraph& g, std::span<const LinkIndex> a, std::span<const LinkIndex> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [&](LinkIndex x, LinkIndex y) {
    return g.link_rank(x) < g.link_rank(y);
  });
}

bool route_less(const NetworkGraph& g, const Route& a, const Route& b) {
  if (!nearly_equal(a.free_flow_s, b.free_flow_s)) return a.free_flow_s < b.free_flow_s;
  return lex_less(g, a.links, b.links);
}

std::string route_label(const NetworkGraph& g, const Route& route) {
  std::string out;
  for (LinkIndex l : route.links) {
    if (!out.empty()) out += '>';
    out += g.link(l).id;
  }
  return out;
}

std::vector<Route> k_shortest_routes(const NetworkGraph& g, NodeIndex origin, NodeIndex destination,
                                     std::size_t k) {
  if (origin == destination) throw ConfigError("route origin equals destination '" + g.node(origin).id + "'");
  auto routes = yen(g, origin, destination, k, std::vector<bool>(g.node_count(), false));
  if (routes.empty()) {
    throw NoRouteError("no route from '" + g.node(origin).id + "' to '" + g.node(destination).id + "'");
  }
  return routes;
}

std::vector<Route> k_shortest_routes_from_link(const NetworkGraph& g, LinkIndex first, NodeIndex destination,
                                               std::size_t k) {
  const Link& l = g.link(first);
  if (l.to == destination) return {make_route(g, {first})};
  std::vector<bool> banned(g.node_count(), false);
  banned[l.from.value] = true;
  auto tails = yen(g, l.to, destination, k, banned);
  if (tails.empty()) {
    throw NoRouteError("no route from link '" + l.id + "' to '" + g.node(destination).id + "'");
  }
  std::vector<Route> out;
  out.reserve(tails.size());
  for (auto& t : tails) {
    std::vector<LinkIndex> links{first};
    links.insert(links.end(), t.links.begin(), t.links.end());
    out.push_back(make_route(g, std::move(links)));
  }
  return out;
}

}  // namespace intersim::roadnet
