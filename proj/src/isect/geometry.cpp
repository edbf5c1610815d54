#include "intersim/isect/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace intersim::isect {

namespace {

constexpr double kEps = 1e-9;

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
Vec2 rot_left(Vec2 d) { return {-d.y, d.x}; }
Vec2 rot_right(Vec2 d) { return {d.y, -d.x}; }
Vec2 rotate(Vec2 v, double phi) {
  double c = std::cos(phi), s = std::sin(phi);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
Vec2 snap(Vec2 v) {
  if (std::abs(v.x) >= std::abs(v.y)) return {v.x >= 0 ? 1.0 : -1.0, 0.0};
  return {0.0, v.y >= 0 ? 1.0 : -1.0};
}
int turn_slot(Turn t) { return static_cast<int>(t); }

}  // namespace

bool intersects(const TileTimeSet& a, const TileTimeSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      if (i->second.intersects(j->second)) return true;
      ++i;
      ++j;
    }
  }
  return false;
}

std::size_t tile_step_count(const TileTimeSet& s) {
  std::size_t n = 0;
  for (const auto& [step, mask] : s) n += mask.count();
  return n;
}

std::vector<std::uint64_t> to_items(const TileTimeSet& s) {
  std::vector<std::uint64_t> items;
  items.reserve(tile_step_count(s));
  for (const auto& [step, mask] : s) {
    if (step < 0) throw std::invalid_argument("negative step in tile-time set");
    for (auto t = mask.find_first(); t != TileMask::npos; t = mask.find_next(t)) {
      items.push_back(static_cast<std::uint64_t>(step) << 32 | static_cast<std::uint64_t>(t));
    }
  }
  return items;
}

TurnPath::TurnPath(Vec2 entry, Vec2 entry_dir, Vec2 exit, Vec2 exit_dir)
    : entry_(entry), entry_dir_(entry_dir), exit_(exit), exit_dir_(exit_dir) {
  double c = cross(entry_dir, exit_dir);
  if (std::abs(c) < kEps) {
    // Straight through, possibly with a lateral shift when lane counts differ.
    Vec2 d = exit - entry;
    entry_len_ = norm(d);
    length_ = entry_len_;
    return;
  }
  turn_sign_ = c > 0 ? 1.0 : -1.0;
  double t = dot(exit - entry, entry_dir);
  Vec2 corner = entry + t * entry_dir;
  double b = dot(exit - corner, exit_dir);
  radius_ = std::max(0.0, std::min(t, b));
  entry_len_ = t - radius_;
  arc_len_ = radius_ * std::numbers::pi / 2.0;
  Vec2 inward = turn_sign_ > 0 ? rot_left(entry_dir) : rot_right(entry_dir);
  centre_ = entry + entry_len_ * entry_dir + radius_ * inward;
  length_ = entry_len_ + arc_len_ + (b - radius_);
}

Pose TurnPath::at(double s) const {
  if (s <= 0.0) return {entry_ + s * entry_dir_, entry_dir_};
  if (s >= length_) return {exit_ + (s - length_) * exit_dir_, exit_dir_};
  if (turn_sign_ == 0.0) {
    Vec2 d = exit_ - entry_;
    double n = norm(d);
    Vec2 u = n > 0 ? (1.0 / n) * d : entry_dir_;
    return {entry_ + s * u, u};
  }
  if (s <= entry_len_) return {entry_ + s * entry_dir_, entry_dir_};
  if (s <= entry_len_ + arc_len_) {
    double phi = turn_sign_ * (s - entry_len_) / radius_;
    Vec2 inward = turn_sign_ > 0 ? rot_left(entry_dir_) : rot_right(entry_dir_);
    Vec2 spoke = rotate(-radius_ * inward, phi);
    return {centre_ + spoke, rotate(entry_dir_, phi)};
  }
  return {exit_ - (length_ - s) * exit_dir_, exit_dir_};
}

IntersectionGeometry::IntersectionGeometry(const roadnet::NetworkGraph& g, NodeIndex node, double tick_s)
    : node_(node), tick_(tick_s) {
  const auto& spec = g.geometry(node);
  tile_ = spec.tile_size_m;
  lane_w_ = spec.lane_width_m;
  length_ = spec.vehicle_length_m;
  width_ = spec.vehicle_width_m;
  spacing_ = std::min(0.25, tile_ / 2.0);
  if (!(tick_ > 0)) throw ConfigError("tick length must be positive");

  auto direction_of = [&](LinkIndex l) {
    for (const auto& ap : spec.approaches) {
      if (ap.link == g.link(l).id && ap.heading_deg) {
        double rad = *ap.heading_deg * std::numbers::pi / 180.0;
        return Vec2{std::cos(rad), std::sin(rad)};
      }
    }
    double h = g.heading(l);
    return Vec2{std::cos(h), std::sin(h)};
  };

  std::vector<LinkIndex> in = g.in_links(node);
  std::vector<LinkIndex> out = g.out_links(node);
  auto by_rank = [&](LinkIndex a, LinkIndex b) { return g.link_rank(a) < g.link_rank(b); };
  std::sort(in.begin(), in.end(), by_rank);
  std::sort(out.begin(), out.end(), by_rank);
  const std::string where = "intersection " + g.node(node).id;
  for (LinkIndex l : in) {
    Vec2 side = -1.0 * snap(direction_of(l));
    for (const auto& a : approaches_) {
      if (a.side == side) throw roadnet::NetworkError(where, "two approaches on one side");
    }
    approaches_.push_back({l, g.link(l).lanes, side});
  }
  for (LinkIndex l : out) {
    Vec2 side = snap(direction_of(l));
    for (const auto& e : exits_) {
      if (e.side == side) throw roadnet::NetworkError(where, "two exits on one side");
    }
    exits_.push_back({l, g.link(l).lanes, side});
  }
  int widest = 1;
  for (const auto& a : approaches_) widest = std::max(widest, a.lanes);
  for (const auto& e : exits_) widest = std::max(widest, e.lanes);
  max_lanes_ = widest;
  half_ = widest * lane_w_;
  dim_ = static_cast<int>(std::ceil(2.0 * half_ / tile_ - kEps));
  build_movements();
}

std::optional<int> IntersectionGeometry::approach_of(LinkIndex l) const {
  for (std::size_t i = 0; i < approaches_.size(); ++i) {
    if (approaches_[i].link == l) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> IntersectionGeometry::exit_of(LinkIndex l) const {
  for (std::size_t i = 0; i < exits_.size(); ++i) {
    if (exits_[i].link == l) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<Turn> IntersectionGeometry::turn_between(int approach, int exit) const {
  Vec2 d = -1.0 * approaches_.at(approach).side;
  Vec2 m = exits_.at(exit).side;
  if (m == d) return Turn::Straight;
  if (m == rot_left(d)) return Turn::Left;
  if (m == rot_right(d)) return Turn::Right;
  return std::nullopt;
}

std::optional<int> IntersectionGeometry::exit_for(int approach, Turn turn) const {
  for (std::size_t e = 0; e < exits_.size(); ++e) {
    if (turn_between(approach, static_cast<int>(e)) == turn) return static_cast<int>(e);
  }
  return std::nullopt;
}

std::vector<int> IntersectionGeometry::lanes_for(int approach, Turn turn) const {
  std::vector<int> lanes;
  for (int lane = 0; lane < approaches_.at(approach).lanes; ++lane) {
    if (permitted(approach, lane, turn)) lanes.push_back(lane);
  }
  return lanes;
}

bool IntersectionGeometry::permitted(int approach, int lane, Turn turn) const {
  if (approach < 0 || approach >= static_cast<int>(approaches_.size())) return false;
  if (lane < 0 || lane >= approaches_[approach].lanes) return false;
  return movement_index_[(approach * max_lanes_ + lane) * 3 + turn_slot(turn)] >= 0;
}

const Movement& IntersectionGeometry::movement(int approach, int lane, Turn turn) const {
  if (!permitted(approach, lane, turn)) {
    throw std::invalid_argument("illegal movement: approach " + std::to_string(approach) + " lane " +
                                std::to_string(lane) + " turn " + to_string(turn));
  }
  return movements_[movement_index_[(approach * max_lanes_ + lane) * 3 + turn_slot(turn)]];
}

void IntersectionGeometry::build_movements() {
  movement_index_.assign(approaches_.size() * max_lanes_ * 3, -1);
  for (int a = 0; a < static_cast<int>(approaches_.size()); ++a) {
    const auto& ap = approaches_[a];
    Vec2 d0 = -1.0 * ap.side;
    for (int lane = 0; lane < ap.lanes; ++lane) {
      for (Turn turn : {Turn::Left, Turn::Straight, Turn::Right}) {
        auto e = exit_for(a, turn);
        if (!e) continue;
        // Lane 0 is the left-most lane, next to the centre line.
        if (turn == Turn::Left && lane != 0) continue;
        if (turn == Turn::Right && lane != ap.lanes - 1) continue;
        const auto& ex = exits_[*e];
        int exit_lane = turn == Turn::Left ? 0 : turn == Turn::Right ? ex.lanes - 1 : std::min(lane, ex.lanes - 1);
        Vec2 entry = half_ * ap.side + (lane + 0.5) * lane_w_ * rot_right(d0);
        Vec2 exit = half_ * ex.side + (exit_lane + 0.5) * lane_w_ * rot_right(ex.side);
        Movement m{a, lane, turn, *e, exit_lane, TurnPath(entry, d0, exit, ex.side), {}};
        double travel = m.path.length() + length_;
        auto n = static_cast<std::size_t>(std::ceil(travel / spacing_ - kEps));
        m.samples.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
          double s = std::min(travel, static_cast<double>(i) * spacing_);
          m.samples.push_back(footprint(m.path.at(s), m.path.at(s - length_)));
        }
        movement_index_[(a * max_lanes_ + lane) * 3 + turn_slot(turn)] = static_cast<int>(movements_.size());
        movements_.push_back(std::move(m));
      }
    }
  }
}

TileMask IntersectionGeometry::footprint(const Pose& front, const Pose& rear) const {
  TileMask mask(tile_count());
  Vec2 axis = front.position - rear.position;
  double chord = norm(axis);
  Vec2 u = chord > kEps ? (1.0 / chord) * axis : front.heading;
  Vec2 v = rot_left(u);
  Vec2 c = 0.5 * (front.position + rear.position);
  // Stretched by one sample spacing so consecutive samples sweep without gaps.
  double hl = 0.5 * (length_ + spacing_);
  double hw = 0.5 * width_;
  double ex = hl * std::abs(u.x) + hw * std::abs(v.x);
  double ey = hl * std::abs(u.y) + hw * std::abs(v.y);
  auto lo = [&](double p) { return std::max(0, static_cast<int>(std::floor((p + half_) / tile_))); };
  auto hi = [&](double p) { return std::min(dim_ - 1, static_cast<int>(std::floor((p + half_) / tile_))); };
  for (int row = lo(c.y - ey); row <= hi(c.y + ey); ++row) {
    double y0 = -half_ + row * tile_;
    double y1 = std::min(half_, y0 + tile_);
    for (int col = lo(c.x - ex); col <= hi(c.x + ex); ++col) {
      double x0 = -half_ + col * tile_;
      double x1 = std::min(half_, x0 + tile_);
      if (std::min(x1, c.x + ex) - std::max(x0, c.x - ex) <= kEps) continue;
      if (std::min(y1, c.y + ey) - std::max(y0, c.y - ey) <= kEps) continue;
      Vec2 tc{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
      double hx = 0.5 * (x1 - x0), hy = 0.5 * (y1 - y0);
      double pu = hx * std::abs(u.x) + hy * std::abs(u.y);
      double pv = hx * std::abs(v.x) + hy * std::abs(v.y);
      if (std::abs(dot(tc - c, u)) >= hl + pu - kEps) continue;
      if (std::abs(dot(tc - c, v)) >= hw + pv - kEps) continue;
      mask.set(tile_index(col, row));
    }
  }
  return mask;
}

TileTimeSet IntersectionGeometry::trajectory_tiles(const Movement& m, double t_a, double v_a) const {
  if (!(v_a > 0)) throw std::invalid_argument("arrival speed must be positive");
  TileTimeSet out;
  const double travel = m.path.length() + length_;
  const double t_exit = t_a + travel / v_a;
  const auto first = static_cast<Step>(std::floor(t_a / tick_));
  const auto last = static_cast<Step>(std::ceil(t_exit / tick_)) - 1;
  const std::size_t n = m.samples.size() - 1;
  for (Step k = first; k <= last; ++k) {
    double s0 = std::max(0.0, (k * tick_ - t_a) * v_a);
    double s1 = std::min(travel, ((k + 1) * tick_ - t_a) * v_a);
    auto i0 = std::min(n, static_cast<std::size_t>(std::floor(s0 / spacing_)));
    auto i1 = std::min(n, static_cast<std::size_t>(std::ceil(s1 / spacing_)));
    TileMask mask(tile_count());
    for (auto i = i0; i <= i1; ++i) mask |= m.samples[i];
    if (mask.any()) out.emplace_back(k, std::move(mask));
  }
  return out;
}

}  // namespace intersim::isect
