#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "intersim/roadnet/network.hpp"

namespace intersim::isect {

using TileMask = boost::dynamic_bitset<std::uint64_t>;
using Step = std::int64_t;

/// Occupied tiles per time step, ascending by step, no empty masks.
using TileTimeSet = std::vector<std::pair<Step, TileMask>>;

bool intersects(const TileTimeSet& a, const TileTimeSet& b);
std::size_t tile_step_count(const TileTimeSet& s);
/// Flattens to sorted (step << 32 | tile) items; steps must be non-negative.
std::vector<std::uint64_t> to_items(const TileTimeSet& s);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

struct Pose {
  Vec2 position;
  Vec2 heading;  // unit
};

/// Entry segment, optional tangent quarter arc, exit segment. Arclength 0 is the stop line.
class TurnPath {
 public:
  TurnPath(Vec2 entry, Vec2 entry_dir, Vec2 exit, Vec2 exit_dir);

  double length() const { return length_; }
  /// Pose at arclength s; outside [0, length] the path extends straight along the end directions.
  Pose at(double s) const;

 private:
  Vec2 entry_, entry_dir_, exit_, exit_dir_;
  double entry_len_ = 0.0;
  double arc_len_ = 0.0;
  double radius_ = 0.0;
  Vec2 centre_;
  double turn_sign_ = 0.0;  // +1 left, -1 right, 0 straight
  double length_ = 0.0;
};

struct Approach {
  LinkIndex link;
  int lanes = 1;
  Vec2 side;  // outward unit normal of the box side the road attaches to
};

struct Exit {
  LinkIndex link;
  int lanes = 1;
  Vec2 side;
};

struct Movement {
  int approach = 0;
  int lane = 0;
  Turn turn = Turn::Straight;
  int exit = 0;
  int exit_lane = 0;
  TurnPath path;
  std::vector<TileMask> samples;  // footprint every sample_spacing of front-bumper travel
};

/// Tile grid, approaches, and precomputed footprints of every legal (lane, turn) trajectory.
class IntersectionGeometry {
 public:
  IntersectionGeometry(const roadnet::NetworkGraph& g, NodeIndex node, double tick_s = 1.0);

  NodeIndex node() const { return node_; }
  double tile_size() const { return tile_; }
  int grid_dim() const { return dim_; }
  std::size_t tile_count() const { return static_cast<std::size_t>(dim_) * dim_; }
  double box_side() const { return 2.0 * half_; }
  double tick() const { return tick_; }
  double vehicle_length() const { return length_; }
  double vehicle_width() const { return width_; }
  double sample_spacing() const { return spacing_; }

  const std::vector<Approach>& approaches() const { return approaches_; }
  const std::vector<Exit>& exits() const { return exits_; }
  std::optional<int> approach_of(LinkIndex l) const;
  std::optional<int> exit_of(LinkIndex l) const;

  /// Turn needed to leave through `exit`, or nothing for a U-turn.
  std::optional<Turn> turn_between(int approach, int exit) const;
  /// Exit reached by taking `turn` from `approach`.
  std::optional<int> exit_for(int approach, Turn turn) const;
  /// Lanes from which `turn` is permitted.
  std::vector<int> lanes_for(int approach, Turn turn) const;

  /// Throws std::invalid_argument for an illegal (lane, turn) combination.
  const Movement& movement(int approach, int lane, Turn turn) const;
  bool permitted(int approach, int lane, Turn turn) const;

  /// Constant-speed traversal starting with the front bumper on the stop line at t_a.
  /// A step is occupied when any instant of it lies strictly inside the crossing interval.
  TileTimeSet trajectory_tiles(const Movement& m, double t_a, double v_a) const;
  /// Time from stop line until the rear bumper clears the box.
  double crossing_time(const Movement& m, double v_a) const { return (m.path.length() + length_) / v_a; }

  /// Tiles covered by a length x width rectangle with strictly positive overlap.
  TileMask footprint(const Pose& front, const Pose& rear) const;
  std::size_t tile_index(int col, int row) const { return static_cast<std::size_t>(row) * dim_ + col; }

 private:
  void build_movements();

  NodeIndex node_;
  double tile_ = 0.25;
  double lane_w_ = 3.0;
  double length_ = 4.0;
  double width_ = 2.0;
  double half_ = 0.0;
  int dim_ = 0;
  double tick_ = 1.0;
  double spacing_ = 0.25;
  std::vector<Approach> approaches_;
  std::vector<Exit> exits_;
  std::vector<Movement> movements_;
  std::vector<int> movement_index_;  // approach * max_lanes * 3 + lane * 3 + turn, -1 when illegal
  int max_lanes_ = 1;
};

}  // namespace intersim::isect
