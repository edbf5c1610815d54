#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "intersim/roadnet/routes.hpp"
#include "test_support.hpp"

using namespace intersim;
using namespace intersim::roadnet;
using intersim::testing::GraphBuilder;

namespace {

// Exhaustive loopless path enumeration; paths are sorted by (time, link-id sequence).
std::vector<std::vector<std::string>> brute_force_paths(const ScenarioDocument& doc, const std::string& origin,
                                                        const std::string& destination) {
  std::multimap<std::string, const ScenarioDocument::RawLink*> out;
  for (const auto& l : doc.links) out.emplace(l.from, &l);
  std::vector<std::pair<double, std::vector<std::string>>> found;
  std::vector<std::string> visited{origin};
  std::vector<std::string> path;
  std::function<void(const std::string&, double)> dfs = [&](const std::string& at, double cost) {
    if (at == destination) {
      found.emplace_back(cost, path);
      return;
    }
    auto [lo, hi] = out.equal_range(at);
    for (auto it = lo; it != hi; ++it) {
      const auto* l = it->second;
      if (std::find(visited.begin(), visited.end(), l->to) != visited.end()) continue;
      visited.push_back(l->to);
      path.push_back(l->id);
      dfs(l->to, cost + l->length_m / l->vmax_mps);
      path.pop_back();
      visited.pop_back();
    }
  };
  dfs(origin, 0.0);
  std::sort(found.begin(), found.end());
  std::vector<std::vector<std::string>> ids;
  for (auto& f : found) ids.push_back(f.second);
  return ids;
}

std::vector<std::vector<std::string>> ids_of(const NetworkGraph& g, const std::vector<Route>& routes) {
  std::vector<std::vector<std::string>> ids;
  for (const auto& r : routes) {
    std::vector<std::string> seq;
    for (LinkIndex l : r.links) seq.push_back(g.link(l).id);
    ids.push_back(seq);
  }
  return ids;
}

std::string link_name(int a, int b) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "L%d%d", a, b);
  return buf;
}

}  // namespace

TEST_CASE("minimal graph has one link and no intersection") {
  GraphBuilder b;
  b.node("A").node("B").link("ab", "A", "B", 100.0);
  auto g = load_network(b.doc);
  CHECK(g.link_count() == 1);
  CHECK(g.intersections().empty());
}

TEST_CASE("shipped single-intersection scenario") {
  auto doc = read_scenario_file(intersim::testing::scenario_path("single_intersection.json"));
  auto g = load_network(doc);
  REQUIRE(g.intersections().size() == 1);
  CHECK(g.node(g.intersections()[0]).id == "C");
  CHECK(g.link_count() == 8);
  CHECK(g.is_incoming(g.link_index("N_in")));
  CHECK_FALSE(g.is_incoming(g.link_index("N_out")));
  CHECK(g.geometry(g.node_index("C")).tile_size_m == doctest::Approx(0.25));
}

TEST_CASE("validation errors name the offending element") {
  GraphBuilder b;
  b.node("A").node("B").link("bad", "A", "Z", 100.0);
  try {
    load_network(b.doc);
    FAIL("expected an error");
  } catch (const NetworkError& e) {
    CHECK(e.element() == "link bad");
  }

  GraphBuilder c;
  c.node("A").node("B").link("zero", "A", "B", 0.0);
  CHECK_THROWS_AS(load_network(c.doc), NetworkError);

  GraphBuilder d;
  d.node("A").node("A");
  CHECK_THROWS_AS(load_network(d.doc), NetworkError);

  GraphBuilder e;
  e.node("A").node("B").link("ab", "A", "B", 10.0);
  e.doc.od.push_back({"B", "A", 1.0, std::nullopt});
  CHECK_THROWS_AS(load_network(e.doc), NetworkError);

  CHECK_THROWS_AS(parse_scenario(nlohmann::json::parse(R"({"nodes":[{"id":"A"}],"links":[]})")), NetworkError);
}

TEST_CASE("intersection without geometry is rejected") {
  GraphBuilder b;
  b.node("C").node("A").node("B").node("D");
  b.link("ac", "A", "C", 10).link("bc", "B", "C", 10).link("cd", "C", "D", 10);
  b.doc.default_geometry.reset();
  CHECK_THROWS_AS(load_network(b.doc), NetworkError);
  b.doc.default_geometry = GeometrySpec{};
  auto g = load_network(b.doc);
  CHECK(g.intersections().size() == 1);
  CHECK(g.geometry(g.node_index("C")).node == "C");
}

TEST_CASE("scenario documents round-trip losslessly") {
  for (const char* name : {"single_intersection.json", "single_small.json", "grid4x4.json"}) {
    std::ifstream in(intersim::testing::scenario_path(name));
    REQUIRE(in);
    auto original = nlohmann::json::parse(in);
    auto doc = parse_scenario(original);
    auto emitted = to_json(doc);
    CHECK(emitted == original);
    CHECK(to_json(parse_scenario(emitted)) == emitted);
  }
}

TEST_CASE("free-flow time") {
  GraphBuilder b;
  b.node("A").node("B").node("C");
  b.link("ab", "A", "B", 500.0, 25.0).link("bc", "B", "C", 500.0, 25.0);
  auto g = load_network(b.doc);
  std::vector<LinkIndex> one{g.link_index("ab")};
  std::vector<LinkIndex> two{g.link_index("ab"), g.link_index("bc")};
  CHECK(free_flow_time(g, one) == doctest::Approx(20.0));
  CHECK(free_flow_time(g, two) == doctest::Approx(40.0));
}

TEST_CASE("diamond graph yields both routes, shorter first") {
  GraphBuilder b;
  b.node("O").node("U").node("V").node("D");
  b.link("ou", "O", "U", 3).link("ud", "U", "D", 3).link("ov", "O", "V", 1).link("vd", "V", "D", 1);
  auto g = load_network(b.doc);
  auto routes = k_shortest_routes(g, g.node_index("O"), g.node_index("D"), 10);
  REQUIRE(routes.size() == 2);
  CHECK(route_label(g, routes[0]) == "ov>vd");
  CHECK(route_label(g, routes[1]) == "ou>ud");
  CHECK(routes[0].free_flow_s == doctest::Approx(2.0));
}

TEST_CASE("single path graph and unreachable destination") {
  GraphBuilder b;
  b.node("A").node("B").node("C").link("ab", "A", "B", 1).link("bc", "B", "C", 1);
  auto g = load_network(b.doc);
  CHECK(k_shortest_routes(g, g.node_index("A"), g.node_index("C"), 10).size() == 1);
  CHECK_THROWS_AS(k_shortest_routes(g, g.node_index("C"), g.node_index("A"), 10), NoRouteError);
}

TEST_CASE("equal-time routes are ordered by link ids") {
  GraphBuilder b;
  b.node("O").node("U").node("V").node("D");
  b.link("b1", "O", "U", 1).link("b2", "U", "D", 1).link("a1", "O", "V", 1).link("a2", "V", "D", 1);
  auto g = load_network(b.doc);
  auto routes = k_shortest_routes(g, g.node_index("O"), g.node_index("D"), 10);
  REQUIRE(routes.size() == 2);
  CHECK(route_label(g, routes[0]) == "a1>a2");
}

TEST_CASE("complete graph on five nodes matches exhaustive enumeration") {
  GraphBuilder b;
  for (int i = 0; i < 5; ++i) b.node("n" + std::to_string(i));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i != j) b.link(link_name(i, j), "n" + std::to_string(i), "n" + std::to_string(j), 1 + (i * 7 + j * 3) % 5);
    }
  }
  auto g = load_network(b.doc);
  auto routes = k_shortest_routes(g, g.node_index("n0"), g.node_index("n4"), 4);
  auto expected = brute_force_paths(b.doc, "n0", "n4");
  expected.resize(4);
  CHECK(ids_of(g, routes) == expected);
}

TEST_CASE("Yen equals brute force on random small graphs") {
  std::mt19937_64 rng(7);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    int n = std::uniform_int_distribution<int>(2, 8)(rng);
    double p = std::uniform_real_distribution<double>(0.2, 0.7)(rng);
    GraphBuilder b;
    for (int i = 0; i < n; ++i) b.node("n" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || std::bernoulli_distribution(p)(rng)) continue;
        // Small integer lengths produce many exact ties.
        b.link(link_name(i, j), "n" + std::to_string(i), "n" + std::to_string(j),
               std::uniform_int_distribution<int>(1, 3)(rng));
      }
    }
    auto g = load_network(b.doc);
    std::size_t k = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    auto expected = brute_force_paths(b.doc, "n0", "n" + std::to_string(n - 1));
    if (expected.empty()) {
      CHECK_THROWS_AS(k_shortest_routes(g, g.node_index("n0"), g.node_index("n" + std::to_string(n - 1)), k),
                      NoRouteError);
      continue;
    }
    if (expected.size() > k) expected.resize(k);
    auto routes = k_shortest_routes(g, g.node_index("n0"), g.node_index("n" + std::to_string(n - 1)), k);
    CHECK(ids_of(g, routes) == expected);
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("routes from a link start with it and never return to its tail") {
  GraphBuilder b;
  b.node("A").node("B").node("C").node("D");
  b.link("ab", "A", "B", 1).link("ba", "B", "A", 1).link("bc", "B", "C", 1).link("cd", "C", "D", 1);
  b.link("ad", "A", "D", 1).link("bd", "B", "D", 5);
  auto g = load_network(b.doc);
  auto routes = k_shortest_routes_from_link(g, g.link_index("ab"), g.node_index("D"), 10);
  REQUIRE(routes.size() == 2);
  CHECK(route_label(g, routes[0]) == "ab>bc>cd");
  CHECK(route_label(g, routes[1]) == "ab>bd");
  auto direct = k_shortest_routes_from_link(g, g.link_index("cd"), g.node_index("D"), 10);
  REQUIRE(direct.size() == 1);
  CHECK(direct[0].links.size() == 1);
}

TEST_CASE("route price sums incoming-link prices") {
  // Two intersections X and Y in series, each joining three neighbours.
  GraphBuilder b;
  b.node("O").node("X").node("Y").node("D").node("P").node("Q");
  b.link("ox", "O", "X", 1).link("xy", "X", "Y", 1).link("yd", "Y", "D", 1);
  b.link("px", "P", "X", 1).link("qy", "Q", "Y", 1);
  auto g = load_network(b.doc);
  REQUIRE(g.intersections().size() == 2);
  auto route = k_shortest_routes(g, g.node_index("O"), g.node_index("D"), 1).front();
  PriceView prices{std::vector<Money>(g.link_count(), 0.0)};
  CHECK(route_price(g, route, prices) == 0.0);
  prices.by_link[g.link_index("ox").value] = 10.0;
  prices.by_link[g.link_index("xy").value] = 25.0;
  prices.by_link[g.link_index("yd").value] = 99.0;  // leaves the network; never priced
  CHECK(route_price(g, route, prices) == doctest::Approx(35.0));
  CHECK(route_max_price(g, route, prices) == doctest::Approx(25.0));
  prices.by_link[g.link_index("ox").value] = 0.0;
  CHECK(route_price(g, route, prices) == doctest::Approx(25.0));
}

TEST_CASE("route price is monotone in each link price") {
  GraphBuilder b;
  b.node("O").node("X").node("D").node("P");
  b.link("ox", "O", "X", 1).link("xd", "X", "D", 1).link("px", "P", "X", 1);
  auto g = load_network(b.doc);
  auto route = k_shortest_routes(g, g.node_index("O"), g.node_index("D"), 1).front();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> price(0.0, 200.0);
  for (int i = 0; i < 200; ++i) {
    PriceView v{std::vector<Money>(g.link_count())};
    for (auto& p : v.by_link) p = price(rng);
    auto before = route_price(g, route, v);
    v.by_link[std::uniform_int_distribution<std::size_t>(0, g.link_count() - 1)(rng)] += price(rng);
    CHECK(route_price(g, route, v) >= before);
  }
}
