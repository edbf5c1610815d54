#pragma once

#include <optional>
#include <span>
#include <vector>

#include "intersim/isect/geometry.hpp"
#include "intersim/market/market.hpp"

namespace intersim::dynamics {

/// Car-following parameters. `decel` is the comfortable braking g.
struct IdmParams {
  double accel = 0.3;     // m/s^2
  double decel = 3.0;     // m/s^2
  double headway = 1.5;   // s
  double min_gap = 2.0;   // m
  double exponent = 1.0;  // on v / v_p; 4 is the textbook value
};

/// a [1 - (v/v_p)^e - (s*/s)^2], s* = s0 + v T + v dv / (2 sqrt(a g)). A free road is gap = +inf.
double idm_acceleration(double v, double gap, double dv, double v_pref, const IdmParams& p);

/// One vehicle in a micro lane. Positions are front-bumper distances along the lane.
struct MicroVehicle {
  double x = 0.0;
  double v = 0.0;
  double v_pref = 0.0;
  double length = 4.0;
  bool scheduled = false;  // moved to (target_x, target_v) by its arrival plan
  bool must_stop = false;  // no reservation: stop at the stop line
  double target_x = 0.0;
  double target_v = 0.0;
  bool blocked = false;    // output: a scheduled vehicle was held back by its leader
};

struct LaneStep {
  double dt = 1.0;
  double tile = 0.25;
  double stop_line = kInfinity;
};

/// Advances one lane, leader first. Car-following positions snap to the tile grid; scheduled
/// vehicles take their targets exactly. A follower never overlaps its leader and an unreserved
/// vehicle never passes the stop line.
void micro_step(std::span<MicroVehicle> lane, const IdmParams& p, const LaneStep& step);

/// Accelerate-then-cruise motion towards the stop line, optionally after standing still.
struct ArrivalPlan {
  double start = 0.0;     // motion begins (the vehicle stands still before)
  double distance = 0.0;  // to the stop line at `start`
  double v0 = 0.0;
  double accel = 0.0;
  double cruise = 0.0;
  double t_line = 0.0;    // front bumper reaches the line: the requested t_a
  double v_line = 0.0;    // physical speed there
  double v_a = 0.0;       // crossing speed, never below the launch speed

  double remaining(double t) const;
  double speed(double t) const;
};

/// Earliest plan reaching the line no sooner than `earliest`. A stopped vehicle waits; a moving one
/// that would arrive too early gets no plan and should keep braking.
std::optional<ArrivalPlan> plan_arrival(double now, double distance, double v, double cruise, double accel,
                                        double v_launch, double earliest);

/// Target speed interpolated linearly along the link from its own reference speed to the next one's.
double meso_target_speed(double x, double length, double y_current, double y_next);

struct MesoParams {
  double accel = 1.5;  // m/s^2
  double decel = 3.0;  // m/s^2
};

struct MesoMove {
  double x = 0.0;
  double v = 0.0;
  bool overflow = false;   // passed the link end
  double remainder = 0.0;  // position on the next link
};

/// Speed moves towards `target` within the accel/decel bounds, position by the trapezoid rule.
/// `limit` caps the position (stop line or queue); reaching it stops the vehicle.
MesoMove meso_step(double x, double v, double length, double target, const MesoParams& p, double dt,
                   double limit = kInfinity);

/// min(v_p, speed from the fundamental diagram at the link density, v_max).
double reference_speed(double vmax, double density, double v_pref, double jam_density);

/// Vehicle counts per link, maintained incrementally.
class LinkOccupancy {
 public:
  explicit LinkOccupancy(std::size_t links) : count_(links, 0) {}
  void enter(LinkIndex l) { ++count_.at(l.value); }
  void leave(LinkIndex l);
  void transfer(LinkIndex from, LinkIndex to) {
    leave(from);
    enter(to);
  }
  int count(LinkIndex l) const { return count_.at(l.value); }
  /// Vehicles per km per lane.
  double density(const roadnet::NetworkGraph& g, LinkIndex l) const;
  const std::vector<int>& counts() const { return count_; }

 private:
  std::vector<int> count_;
};

/// Constant-speed traversal of a booked crossing.
class CellCrossing {
 public:
  CellCrossing(double t_a, double v_a, double traverse_m, isect::TileTimeSet booked, double tick);

  /// Moves to time `now`; true once the rear bumper has cleared the box.
  bool advance(double now);
  double t_exit() const { return t_exit_; }
  double travelled() const { return travelled_; }
  bool done() const { return done_; }
  /// True while every step spent inside so far was booked.
  bool on_schedule() const { return on_schedule_; }
  const std::vector<isect::Step>& occupied_steps() const { return visited_; }

 private:
  double t_a_, v_a_, t_exit_, tick_;
  isect::TileTimeSet booked_;
  double travelled_ = 0.0;
  bool done_ = false;
  bool on_schedule_ = true;
  std::vector<isect::Step> visited_;
};

}  // namespace intersim::dynamics
