#include "doctest.h"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>

#include "intersim/dynamics/dynamics.hpp"
#include "intersim/isect/reservation.hpp"
#include "test_support.hpp"

using namespace intersim;
using namespace intersim::dynamics;

namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

// IDM acceleration evaluated in 50 decimal digits, written independently of the library form.
double idm_reference(double v, double s, double dv, double vp, double a, double g, double T, double s0) {
  Big V(v), S(s), DV(dv), VP(vp), A(a), G(g), TT(T), S0(s0);
  Big star = S0 + (V * TT + V * DV / (Big(2) * boost::multiprecision::sqrt(A * G)));
  Big term = star / S;
  return static_cast<double>(A * (Big(1) - V / VP - term * term));
}

}  // namespace

TEST_CASE("IDM acceleration") {
  IdmParams p;
  CHECK(idm_acceleration(12.0, kInfinity, 0.0, 12.0, p) == doctest::Approx(0.0));
  CHECK(idm_acceleration(0.0, kInfinity, 0.0, 12.0, p) == doctest::Approx(0.3));
  // Steady-state gap s = s* / sqrt(1 - v / v_p).
  const double v = 8.0, vp = 12.0;
  const double s_star = p.min_gap + v * p.headway;
  CHECK(idm_acceleration(v, s_star / std::sqrt(1.0 - v / vp), 0.0, vp, p) == doctest::Approx(0.0).epsilon(1e-12));
  IdmParams textbook = p;
  textbook.exponent = 4.0;
  CHECK(idm_acceleration(6.0, kInfinity, 0.0, 12.0, textbook) == doctest::Approx(0.3 * (1 - 0.0625)));
}

TEST_CASE("IDM matches a high-precision evaluation") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> speed(0.0, 20.0), gap(0.5, 200.0), dv(-10.0, 10.0), vp(5.0, 20.0),
      a(0.1, 3.0), g(1.0, 6.0), T(0.5, 3.0), s0(0.5, 5.0);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    IdmParams p{a(rng), g(rng), T(rng), s0(rng), 1.0};
    const double v = speed(rng), s = gap(rng), d = dv(rng), pref = vp(rng);
    const double ours = idm_acceleration(v, s, d, pref, p);
    const double ref = idm_reference(v, s, d, pref, p.accel, p.decel, p.headway, p.min_gap);
    // The relative bound is meaningless only when the value itself cancels to nearly zero.
    if (std::abs(ref) < 1e-6) continue;
    ++checked;
    CHECK(std::abs(ours - ref) <= 1e-9 * std::abs(ref));
  }
  CHECK(checked > 950);
}

TEST_CASE("micro lane: free road") {
  IdmParams p;
  std::vector<MicroVehicle> lane{{0.0, 5.0, 12.0}};
  double last_x = 0.0;
  for (int t = 0; t < 300; ++t) {
    const double before = lane[0].v;
    micro_step(lane, p, LaneStep{});
    CHECK(lane[0].v >= before);
    CHECK(lane[0].v <= 12.0 + p.accel);
    CHECK(lane[0].x >= last_x);
    CHECK(std::fmod(lane[0].x, 0.25) == doctest::Approx(0.0));
    last_x = lane[0].x;
  }
  CHECK(lane[0].v > 11.9);
}

TEST_CASE("micro lane: followers never overlap their leaders") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    IdmParams p;
    std::vector<MicroVehicle> lane;
    double x = 300.0;
    for (int i = 0; i < 8; ++i) {
      lane.push_back({x, 14.0 * u(rng), 8.0 + 6.0 * u(rng)});
      x -= 4.0 + 0.5 + 30.0 * u(rng);
    }
    lane[0].v = 0.0;  // the head vehicle stands on the line
    for (auto& c : lane) c.must_stop = true;
    for (int t = 0; t < 50; ++t) {
      micro_step(lane, p, LaneStep{1.0, 0.25, 300.0});
      for (std::size_t i = 1; i < lane.size(); ++i) CHECK(lane[i].x + lane[i].length <= lane[i - 1].x + 1e-9);
      for (const auto& c : lane) CHECK(c.v >= 0.0);
    }
  }
}

TEST_CASE("micro lane: an unreserved vehicle stops on the line") {
  IdmParams p;
  std::vector<MicroVehicle> lane{{0.0, 13.0, 13.0, 4.0, false, true}};
  for (int t = 0; t < 400; ++t) {
    micro_step(lane, p, LaneStep{1.0, 0.25, 150.0});
    CHECK(lane[0].x <= 150.0);
  }
  CHECK(lane[0].v == 0.0);
  CHECK(lane[0].x >= 149.0);
}

TEST_CASE("arrival plans") {
  SUBCASE("cruise") {
    auto plan = plan_arrival(0.0, 100.0, 10.0, 10.0, 0.3, 3.0, 1.0);
    REQUIRE(plan);
    CHECK(plan->t_line == doctest::Approx(10.0));
    CHECK(plan->v_a == doctest::Approx(10.0));
    CHECK(plan->remaining(5.0) == doctest::Approx(50.0));
    CHECK(plan->remaining(12.0) == 0.0);
  }
  SUBCASE("accelerate to the line") {
    auto plan = plan_arrival(2.0, 50.0, 0.0, 10.0, 1.0, 3.0, 3.0);
    REQUIRE(plan);
    CHECK(plan->t_line == doctest::Approx(12.0));
    CHECK(plan->v_line == doctest::Approx(10.0));
    CHECK(plan->speed(7.0) == doctest::Approx(5.0));
  }
  SUBCASE("a vehicle standing on the line waits and launches") {
    auto plan = plan_arrival(0.0, 0.0, 0.0, 10.0, 0.3, 3.0, 3.0);
    REQUIRE(plan);
    CHECK(plan->t_line == doctest::Approx(3.0));
    CHECK(plan->v_a == doctest::Approx(3.0));
    CHECK(plan->remaining(2.0) == 0.0);
  }
  SUBCASE("a queued vehicle waits before moving up") {
    auto plan = plan_arrival(0.0, 8.0, 0.0, 10.0, 1.0, 3.0, 6.0);
    REQUIRE(plan);
    CHECK(plan->start == doctest::Approx(2.0));
    CHECK(plan->t_line == doctest::Approx(6.0));
    CHECK(plan->v_line == doctest::Approx(4.0));
    CHECK(plan->v_a == doctest::Approx(4.0));
    CHECK(plan->remaining(1.0) == doctest::Approx(8.0));
  }
  SUBCASE("a moving vehicle too close for the lead time gets none") {
    CHECK(!plan_arrival(0.0, 5.0, 10.0, 10.0, 0.3, 3.0, 3.0));
  }
  SUBCASE("plans are continuous and monotone") {
    auto plan = plan_arrival(0.0, 120.0, 4.0, 12.0, 0.3, 3.0, 0.0);
    REQUIRE(plan);
    double last = plan->distance;
    for (double t = 0.0; t <= plan->t_line + 1.0; t += 0.1) {
      CHECK(plan->remaining(t) <= last + 1e-12);
      last = plan->remaining(t);
    }
    CHECK(plan->remaining(plan->t_line) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("mesoscopic target speed and step") {
  CHECK(meso_target_speed(0.0, 500.0, 10.0, 14.0) == 10.0);
  CHECK(meso_target_speed(500.0, 500.0, 10.0, 14.0) == 14.0);
  CHECK(meso_target_speed(250.0, 500.0, 10.0, 14.0) == doctest::Approx(12.0));

  MesoParams p{2.0, 3.0};
  auto m = meso_step(100.0, 10.0, 500.0, 12.0, p, 1.0);
  CHECK(m.v == doctest::Approx(12.0));
  CHECK(m.x - 100.0 == doctest::Approx(11.0));
  auto c = meso_step(100.0, 10.0, 500.0, 10.0, p, 1.0);
  CHECK(c.x - 100.0 == doctest::Approx(10.0));
  auto o = meso_step(495.0, 10.0, 500.0, 12.0, p, 1.0);
  CHECK(o.overflow);
  CHECK(o.remainder == doctest::Approx(6.0));
  auto capped = meso_step(100.0, 10.0, 500.0, 20.0, p, 1.0);
  CHECK(capped.v == doctest::Approx(12.0));
  auto braking = meso_step(100.0, 10.0, 500.0, 0.0, p, 1.0);
  CHECK(braking.v == doctest::Approx(7.0));
  auto held = meso_step(495.0, 10.0, 500.0, 12.0, p, 1.0, 500.0);
  CHECK(held.x == 500.0);
  CHECK(held.v == 0.0);
}

TEST_CASE("link handoff keeps densities consistent") {
  intersim::testing::GraphBuilder b;
  b.node("A").node("B").node("C");
  b.link("ab", "A", "B", 500).link("bc", "B", "C", 250, 1.0, 2);
  auto g = roadnet::load_network(b.doc);
  LinkOccupancy occ(g.link_count());
  const auto ab = g.link_index("ab"), bc = g.link_index("bc");
  occ.enter(ab);
  occ.enter(ab);
  occ.enter(bc);
  occ.transfer(ab, bc);
  CHECK(occ.count(ab) == 1);
  CHECK(occ.count(bc) == 2);
  CHECK(occ.density(g, ab) == doctest::Approx(2.0));
  CHECK(occ.density(g, bc) == doctest::Approx(4.0));
  occ.leave(ab);
  CHECK_THROWS_AS(occ.leave(ab), std::logic_error);

  // Random traffic: incremental counts equal a recount of vehicle positions, and the total is conserved.
  std::mt19937_64 rng(4);
  std::vector<LinkIndex> where(50, bc);
  LinkOccupancy inc(g.link_count());
  for (std::size_t i = 0; i < where.size(); ++i) inc.enter(where[i]);
  for (int t = 0; t < 2000; ++t) {
    auto& w = where[rng() % where.size()];
    const LinkIndex to = w == ab ? bc : ab;
    inc.transfer(w, to);
    w = to;
    int on_ab = 0;
    for (auto l : where) on_ab += l == ab;
    CHECK(inc.count(ab) == on_ab);
    CHECK(inc.count(ab) + inc.count(bc) == 50);
  }
}

TEST_CASE("reference speed") {
  CHECK(reference_speed(15.0, 0.0, 10.0, 120.0) == 10.0);
  CHECK(reference_speed(15.0, 120.0, 10.0, 120.0) == 0.0);
  CHECK(reference_speed(15.0, 60.0, 20.0, 120.0) == doctest::Approx(7.5));
}

TEST_CASE("cell crossing follows the booked steps") {
  isect::TileMask mask(4);
  mask.set(0);
  isect::TileTimeSet booked{{10, mask}, {11, mask}, {12, mask}};
  CellCrossing c(10.0, 5.0, 15.0, booked, 1.0);
  CHECK(!c.advance(9.0));
  CHECK(!c.advance(10.0));
  CHECK(!c.advance(11.0));
  CHECK(!c.advance(12.0));
  CHECK(c.travelled() == doctest::Approx(10.0));
  CHECK(c.advance(13.0));
  CHECK(c.occupied_steps() == std::vector<isect::Step>{10, 11, 12});
  CHECK(c.on_schedule());

  CellCrossing late(10.0, 5.0, 15.0, isect::TileTimeSet{{10, mask}, {11, mask}}, 1.0);
  CHECK(late.advance(14.0));
  CHECK(!late.on_schedule());
}

TEST_CASE("a traversal on the real geometry consumes its booking") {
  auto g = roadnet::load_network(roadnet::read_scenario_file(intersim::testing::scenario_path("single_small.json")));
  isect::IntersectionGeometry geo(g, g.node_index("C"));
  isect::ReservationTable table;
  isect::DistanceFilter filter(geo);
  const int west = *geo.approach_of(g.link_index("W_in"));
  const int east = *geo.approach_of(g.link_index("E_in"));
  isect::ReservationRequest a{VehicleId(1), 5.0, 10.0, west, 1, Turn::Straight, std::nullopt};
  isect::ReservationRequest b{VehicleId(2), 5.0, 10.0, east, 1, Turn::Straight, std::nullopt};
  auto ra = isect::fcfs_process(a, geo, table, filter, 0.0);
  auto rb = isect::fcfs_process(b, geo, table, filter, 0.0);
  REQUIRE(isect::confirmed(ra));
  REQUIRE(isect::confirmed(rb));
  std::vector<CellCrossing> crossings;
  for (const auto* r : {&ra, &rb}) {
    const auto& conf = std::get<isect::Confirmation>(*r);
    const auto& m = geo.movement(west, 1, Turn::Straight);
    crossings.emplace_back(conf.t_a, conf.v_a, m.path.length() + geo.vehicle_length(), conf.tiles, geo.tick());
  }
  for (double now = 0.0; now < 10.0; now += 1.0) {
    for (std::size_t i = 0; i < crossings.size(); ++i) {
      if (!crossings[i].done() && crossings[i].advance(now)) isect::consume_reservation(VehicleId(i + 1), table);
    }
  }
  for (const auto& c : crossings) {
    CHECK(c.done());
    CHECK(c.on_schedule());
  }
  CHECK(table.empty());
}
