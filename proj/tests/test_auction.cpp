#include "doctest.h"

#include <random>

#include "intersim/auction/instances.hpp"
#include "intersim/auction/round.hpp"
#include "intersim/roadnet/presets.hpp"

using namespace intersim;
using namespace intersim::auction;

namespace {

WdpBid bid(std::uint64_t id, Money value, std::vector<std::uint64_t> items) { return {id, value, std::move(items)}; }

// v1 = 200 overlaps each of v2, v3, v4 (100 each), which are mutually disjoint.
BidSet pathology() {
  return BidSet({bid(1, 200, {1, 2, 3}), bid(2, 100, {1}), bid(3, 100, {2}), bid(4, 100, {3})});
}

Money brute_force_optimum(const BidSet& set) {
  Money best = 0.0;
  const std::size_t n = set.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Money v = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        if ((mask >> j & 1) && set.conflict(i, j)) ok = false;
      }
      v += set[i].value;
    }
    if (ok) best = std::max(best, v);
  }
  return best;
}

BidSet random_set(std::mt19937_64& rng, std::size_t n, std::uint64_t universe) {
  std::vector<WdpBid> bids;
  std::uniform_int_distribution<std::uint64_t> item(0, universe - 1);
  std::uniform_int_distribution<int> size(1, 4);
  std::uniform_int_distribution<int> value(0, 200);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> items;
    for (int k = size(rng); k > 0; --k) items.push_back(item(rng));
    bids.push_back(bid(i + 1, value(rng), items));
  }
  return BidSet(std::move(bids));
}

StochasticParams budget(std::uint64_t passes, Ranking r = Ranking::NetGain) {
  StochasticParams p;
  p.passes = passes;
  p.ranking = r;
  return p;
}

std::vector<std::uint64_t> ids(const BidSet& set, const WinnerSet& w) {
  std::vector<std::uint64_t> out;
  for (auto m : w.members) out.push_back(set[m].id);
  return out;
}

}  // namespace

TEST_CASE("validate_bid") {
  CHECK(validate_bid(100, 100.0).accepted);
  auto low = validate_bid(90, 100.0);
  CHECK_FALSE(low.accepted);
  CHECK(low.violation.find("90") != std::string::npos);
  CHECK(low.violation.find("100") != std::string::npos);
  CHECK(validate_bid(10, std::nullopt).accepted);
}

TEST_CASE("bid set neighbourhoods and bound") {
  auto set = pathology();
  CHECK(set.neighbours(0) == std::vector<std::uint32_t>{1, 2, 3});
  CHECK(set.neighbours(1) == std::vector<std::uint32_t>{0});
  CHECK(set.upper_bound() >= 300.0);
  CHECK_THROWS_AS(BidSet({bid(1, 5, {}), bid(2, 5, {1})}), std::invalid_argument);
  CHECK_THROWS_AS(BidSet({bid(1, -5, {1})}), std::invalid_argument);
  CHECK_THROWS_AS(BidSet({bid(1, 5, {1}), bid(1, 5, {2})}), std::invalid_argument);
}

TEST_CASE("stochastic search on small instances") {
  auto rng = make_stream(1, "test");
  SUBCASE("empty") { CHECK(wdp_stochastic(BidSet{}, budget(10), rng).members.empty()); }
  SUBCASE("single bid") {
    BidSet set({bid(7, 42, {5})});
    auto w = wdp_stochastic(set, budget(1), rng);
    CHECK(ids(set, w) == std::vector<std::uint64_t>{7});
  }
  SUBCASE("overlapping pathology resolves to the three smaller bids") {
    for (auto r : {Ranking::NetGain, Ranking::Value}) {
      auto w = wdp_stochastic(pathology(), budget(50, r), rng);
      CHECK(w.value == doctest::Approx(300));
      CHECK(w.members == std::vector<std::uint32_t>{1, 2, 3});
    }
  }
  SUBCASE("same bundle keeps the higher bid") {
    BidSet set({bid(1, 100, {9, 10}), bid(2, 60, {9, 10})});
    auto w = wdp_stochastic(set, budget(20), rng);
    CHECK(ids(set, w) == std::vector<std::uint64_t>{1});
  }
  SUBCASE("parameter checks") {
    auto p = budget(10);
    p.wp = 1.5;
    CHECK_THROWS_AS(wdp_stochastic(pathology(), p, rng), std::invalid_argument);
    CHECK_THROWS_AS(wdp_stochastic(pathology(), budget(0), rng), std::invalid_argument);
  }
}

TEST_CASE("exact oracle") {
  CHECK(wdp_exact(pathology()).value == doctest::Approx(300));
  BidSet clique({bid(1, 10, {1}), bid(2, 30, {1, 2}), bid(3, 20, {2, 1})});
  auto w = wdp_exact(clique);
  CHECK(w.members == std::vector<std::uint32_t>{1});
  CHECK(wdp_exact(BidSet{}).value == 0.0);
  CHECK(wdp_exact(BidSet{}).members.empty());

  // Equal-value optima: the lower ids win.
  BidSet tie({bid(4, 50, {1}), bid(2, 50, {1}), bid(9, 20, {2}), bid(3, 20, {2})});
  auto t = wdp_exact(tie);
  CHECK(ids(tie, t) == std::vector<std::uint64_t>{2, 3});

  std::vector<WdpBid> many;
  for (std::uint64_t i = 0; i < 25; ++i) many.push_back(bid(i, 1, {i}));
  CHECK_THROWS_AS(wdp_exact(BidSet(many)), OracleCapExceeded);
  CHECK(wdp_exact(BidSet(many), 30).value == doctest::Approx(25));
}

TEST_CASE("exact oracle agrees with subset enumeration") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto set = random_set(rng, std::uniform_int_distribution<std::size_t>(1, 14)(rng), 12);
    auto w = wdp_exact(set);
    CHECK(w.value == doctest::Approx(brute_force_optimum(set)));
    CHECK(pairwise_disjoint(set, w));
    auto bounded = wdp_exact_value_bounded(set, 1'000'000);
    REQUIRE(bounded);
    CHECK(*bounded == doctest::Approx(w.value));
    CHECK(set.upper_bound() >= w.value - 1e-9);
  }
}

TEST_CASE("winner sets are always pairwise disjoint") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 400; ++trial) {
    auto set = random_set(gen, std::uniform_int_distribution<std::size_t>(1, 40)(gen), 30);
    auto rng = make_stream(static_cast<std::uint64_t>(trial), "fuzz");
    auto p = budget(std::uniform_int_distribution<std::uint64_t>(1, 30)(gen),
                    trial % 2 ? Ranking::Value : Ranking::NetGain);
    p.wp = std::uniform_real_distribution<double>(0, 1)(gen);
    p.np = std::uniform_real_distribution<double>(0, 1)(gen);
    auto w = wdp_stochastic(set, p, rng);
    CHECK(pairwise_disjoint(set, w));
    Money sum = 0.0;
    for (auto m : w.members) sum += set[m].value;
    CHECK(w.value == doctest::Approx(sum));
  }
}

TEST_CASE("more budget never yields a worse set on the same stream") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto set = random_set(gen, 30, 25);
    Money previous = 0.0;
    for (std::uint64_t passes : {1, 2, 5, 10, 40}) {
      auto rng = make_stream(9, "budget", static_cast<std::uint64_t>(trial));
      auto w = wdp_stochastic(set, budget(passes), rng);
      CHECK(w.value >= previous);
      previous = w.value;
    }
  }
}

TEST_CASE("early stop at a known optimum leaves the result unchanged") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto set = random_set(gen, 25, 20);
    auto p = budget(200);
    auto r1 = make_stream(3, "stop", static_cast<std::uint64_t>(trial));
    auto full = wdp_stochastic(set, p, r1);
    p.known_optimum = wdp_exact_value(set, 32);
    auto r2 = make_stream(3, "stop", static_cast<std::uint64_t>(trial));
    auto early = wdp_stochastic(set, p, r2);
    CHECK(early.members == full.members);
    CHECK(early.passes <= full.passes);
  }
}

namespace {

struct RoundFixture {
  roadnet::NetworkGraph graph = roadnet::load_network(roadnet::single_intersection_document(3, 200.0));
  isect::IntersectionGeometry geo{graph, graph.node_index("C")};
  isect::ReservationTable table;
  isect::DistanceFilter filter{geo};
  std::unordered_map<VehicleId, Money> prior;
  AuctionParams params;
  RngEngine rng = make_stream(1, "round");

  int approach(const std::string& link) const { return *geo.approach_of(graph.link_index(link)); }
  Bid make(std::uint32_t v, const std::string& link, int lane, Turn turn, double t_a, double v_a, Money value) {
    return Bid{{VehicleId(v), t_a, v_a, approach(link), lane, turn, value}, value};
  }
  RoundResult run(const std::vector<Bid>& bids, double now = 0.0, std::span<const Money> reserve = {}) {
    params.wdp.passes = 200;
    return run_auction_round(bids, RoundContext{geo, table, filter, prior, reserve}, now, now + 1.0, params, rng);
  }
};

int count_confirmed(const RoundResult& r) {
  int n = 0;
  for (const auto& x : r.replies) n += isect::confirmed(x);
  return n;
}

isect::RejectReason reason(const isect::Reply& r) { return std::get<isect::Rejection>(r).reason; }

}  // namespace

TEST_CASE("auction round: one valid bid") {
  RoundFixture f;
  auto r = f.run({f.make(1, "W_in", 1, Turn::Straight, 5.0, 10.0, 80)});
  CHECK(count_confirmed(r) == 1);
  CHECK(std::get<isect::Confirmation>(r.replies[0]).payment == doctest::Approx(80));
  CHECK(f.table.find(VehicleId(1)) != nullptr);
}

TEST_CASE("auction round: crossing pathology on the real intersection") {
  RoundFixture f;
  std::vector<Bid> bids{
      f.make(1, "W_in", 1, Turn::Straight, 5.0, 10.0, 200),
      f.make(2, "N_in", 0, Turn::Straight, 5.0, 10.0, 100),
      f.make(3, "N_in", 2, Turn::Straight, 4.0, 10.0, 100),
      f.make(4, "S_in", 0, Turn::Straight, 5.5, 10.0, 100),
  };
  auto r = f.run(bids);
  CHECK(count_confirmed(r) == 3);
  CHECK_FALSE(isect::confirmed(r.replies[0]));
  CHECK(reason(r.replies[0]) == isect::RejectReason::LostAuction);
  CHECK(r.stats.value == doctest::Approx(300));
  // The loser was processed and rejected: its lane bound drops to its distance.
  CHECK(f.filter.get(f.approach("W_in"), 1) == doctest::Approx(50.0));
  CHECK(f.filter.get(f.approach("N_in"), 0) == kInfinity);
  CHECK(f.table.consistent());
}

TEST_CASE("auction round: confirmed bookings are never reallocated") {
  RoundFixture f;
  REQUIRE(count_confirmed(f.run({f.make(1, "W_in", 1, Turn::Straight, 5.0, 10.0, 10)})) == 1);
  auto r = f.run({f.make(2, "N_in", 0, Turn::Straight, 5.0, 10.0, 10000)}, 0.5);
  CHECK(reason(r.replies[0]) == isect::RejectReason::Conflict);
  CHECK(f.table.find(VehicleId(1)) != nullptr);
}

TEST_CASE("auction round: stale, filtered, violating and below-reserve bids") {
  RoundFixture f;
  auto r = f.run({f.make(1, "W_in", 1, Turn::Straight, 0.9, 10.0, 10)});
  CHECK(reason(r.replies[0]) == isect::RejectReason::Stale);

  f.filter.reject(f.approach("E_in"), 0, 30.0);
  r = f.run({f.make(2, "E_in", 0, Turn::Straight, 5.0, 10.0, 10)});
  CHECK(reason(r.replies[0]) == isect::RejectReason::FilteredByDistance);

  r = f.run({f.make(3, "W_in", 1, Turn::Straight, 5.0, 10.0, 100), f.make(4, "N_in", 0, Turn::Straight, 5.0, 10.0, 150)});
  REQUIRE(count_confirmed(r) == 1);
  r = f.run({f.make(3, "W_in", 1, Turn::Straight, 5.0, 10.0, 90)}, 1.0);
  CHECK(reason(r.replies[0]) == isect::RejectReason::BidViolation);

  std::vector<Money> reserve(f.geo.approaches().size(), 0.0);
  reserve[static_cast<std::size_t>(f.approach("N_in"))] = 120.0;
  r = f.run({f.make(5, "N_in", 1, Turn::Straight, 20.0, 10.0, 119), f.make(6, "N_in", 2, Turn::Straight, 20.0, 10.0, 120)},
            2.0, reserve);
  CHECK(reason(r.replies[0]) == isect::RejectReason::BelowReserve);
  CHECK(isect::confirmed(r.replies[1]));
}

TEST_CASE("auction manager cadence") {
  RoundFixture f;
  f.params.wdp.passes = 50;
  AuctionManager m(f.geo, f.table, f.filter, f.params, 99);
  m.submit(f.make(1, "W_in", 1, Turn::Straight, 8.0, 10.0, 50));
  CHECK(m.step(1).delivered.empty());
  auto s2 = m.step(2);
  CHECK(s2.delivered.empty());
  REQUIRE(s2.round);
  CHECK(s2.round->submitted == 1);
  CHECK(m.pending(VehicleId(1)));
  // Arrives while the round is being cleared: waits for the next round.
  m.submit(f.make(2, "E_in", 1, Turn::Straight, 9.0, 10.0, 50));
  auto s3 = m.step(3);
  REQUIRE(s3.delivered.size() == 1);
  CHECK(s3.delivered[0].first.request.vehicle == VehicleId(1));
  CHECK(isect::confirmed(s3.delivered[0].second));
  CHECK_FALSE(m.pending(VehicleId(1)));
  auto s4 = m.step(4);
  REQUIRE(s4.round);
  CHECK(s4.round->submitted == 1);
  CHECK(m.step(5).delivered.size() == 1);
}

TEST_CASE("intersection-like instances are deterministic and reach the optimum") {
  auto graph = roadnet::load_network(roadnet::single_intersection_document(3, 200.0));
  isect::IntersectionGeometry geo(graph, graph.node_index("C"));
  auto r1 = make_stream(4, "inst");
  auto r2 = make_stream(4, "inst");
  auto a = intersection_instance(geo, 30, InstanceShape{}, r1);
  auto b = intersection_instance(geo, 30, InstanceShape{}, r2);
  REQUIRE(a.size() == 30);
  CHECK(a[17].items == b[17].items);
  BidSet set(a);
  auto rng = make_stream(5, "inst");
  CHECK(wdp_stochastic(set, budget(500), rng).value == doctest::Approx(wdp_exact_value(set, 64)));
}
