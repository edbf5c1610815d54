#pragma once

#include <span>
#include <string>
#include <vector>

#include "intersim/roadnet/network.hpp"

namespace intersim::roadnet {

/// Ordered, node-loopless link sequence. Consecutive links share a node.
struct Route {
  std::vector<LinkIndex> links;
  double free_flow_s = 0.0;

  NodeIndex origin(const NetworkGraph& g) const { return g.link(links.front()).from; }
  NodeIndex destination(const NetworkGraph& g) const { return g.link(links.back()).to; }
  friend bool operator==(const Route& a, const Route& b) { return a.links == b.links; }
};

/// Thrown when an origin cannot reach its destination.
class NoRouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-link prices indexed by link; links that do not enter an intersection are ignored.
struct PriceView {
  std::vector<Money> by_link;

  Money at(LinkIndex l) const { return l.value < by_link.size() ? by_link[l.value] : 0.0; }
};

double free_flow_time(const NetworkGraph& g, std::span<const LinkIndex> links);
Money route_price(const NetworkGraph& g, const Route& route, const PriceView& prices);
/// Highest single priced-link price along the route.
Money route_max_price(const NetworkGraph& g, const Route& route, const PriceView& prices);

/// Lexicographic comparison of link-id sequences.
bool lex_less(const NetworkGraph& g, std::span<const LinkIndex> a, std::span<const LinkIndex> b);
/// Total route order: free-flow time (relative tolerance 1e-9), then link-id sequence.
bool route_less(const NetworkGraph& g, const Route& a, const Route& b);
std::string route_label(const NetworkGraph& g, const Route& route);

/// Up to k loopless routes in ascending route order. Throws NoRouteError if none exist.
std::vector<Route> k_shortest_routes(const NetworkGraph& g, NodeIndex origin, NodeIndex destination,
                                     std::size_t k);

/// Routes that begin with `first` and end at `destination`, in ascending route order.
/// The tail node of `first` is never revisited.
std::vector<Route> k_shortest_routes_from_link(const NetworkGraph& g, LinkIndex first,
                                               NodeIndex destination, std::size_t k);

}  // namespace intersim::roadnet
