#include "intersim/engine/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "intersim/dynamics/dynamics.hpp"
#include "intersim/engine/metrics.hpp"
#include "intersim/isect/reservation.hpp"
#include "intersim/market/market.hpp"

namespace intersim::engine {

using roadnet::Route;

Network::Network(roadnet::ScenarioDocument doc, double tick_s)
    : doc_(std::move(doc)), graph_(roadnet::load_network(doc_)), micro_(doc_.model != "meso") {
  if (doc_.model != "micro" && doc_.model != "meso") throw ConfigError("model must be 'micro' or 'meso'");
  geo_.resize(graph_.node_count());
  for (NodeIndex n : graph_.intersections()) {
    geo_[n.value] = std::make_unique<isect::IntersectionGeometry>(graph_, n, tick_s);
  }
}

driver::RouteCache& Network::routes(std::size_t k) {
  for (auto& [key, cache] : caches_) {
    if (key == k) return *cache;
  }
  caches_.emplace_back(k, std::make_unique<driver::RouteCache>(graph_, k));
  return *caches_.back().second;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// A scheduled vehicle further than this behind its plan has lost its slot.
constexpr double kScheduleSlackM = 0.5;
// Micro vehicle length; matches the default intersection footprint.
constexpr double kVehicleLength = 4.0;

enum class Phase { Waiting, OnLink, Crossing, Done };
enum class Booking { None, Pending, Confirmed };

struct Vehicle {
  VehicleId id;
  driver::DriverProfile profile;
  bool tracked = false;
  bool fixed_route = false;
  Route route;
  std::size_t leg = 0;  // index of the current link in route.links
  std::vector<LinkIndex> driven;
  Phase phase = Phase::Waiting;
  double x = 0.0;  // front bumper along the current link
  double v = 0.0;
  int lane = 0;    // queue lane on the current link
  int spawn_lane = 0;

  Booking booking = Booking::None;
  std::optional<dynamics::ArrivalPlan> plan;
  double requested_t_a = 0.0;
  double requested_v_a = 0.0;
  double path_m = 0.0;  // length of the requested movement through the box
  std::uint32_t node = 0;  // intersection approached or being crossed
  isect::TileTimeSet tiles;
  std::optional<dynamics::CellCrossing> crossing;
  int exit_lane = 0;
  Money last_bid = 0.0;

  double spawn_t = 0.0;
  double finish_t = kNaN;
  int requests = 0;
  int rejections = 0;
};

struct IntersectionState {
  NodeIndex node;
  const isect::IntersectionGeometry* geo = nullptr;
  isect::ReservationTable table;
  std::unique_ptr<isect::DistanceFilter> filter;
  std::unique_ptr<auction::AuctionManager> manager;
  std::vector<LinkIndex> incoming;
  double d_cap = 0.0;
  long requests = 0;
  long rejections = 0;
  Money revenue = 0.0;
};

struct Source {
  std::size_t od = 0;
  NodeIndex origin, destination;
  double rate_per_min = 0.0;
};

std::string fmt_route(const roadnet::NetworkGraph& g, std::span<const LinkIndex> links) {
  Route r;
  r.links.assign(links.begin(), links.end());
  return roadnet::route_label(g, r);
}

class Simulation {
 public:
  Simulation(Network& net, const ScenarioConfig& cfg, bool ghost)
      : net_(net),
        g_(net.graph()),
        cfg_(cfg),
        ghost_(ghost),
        occupancy_(g_.link_count()),
        spawn_rng_(make_stream(cfg.seed, "spawn")),
        od_rng_(make_stream(cfg.seed, "od")),
        profile_rng_(make_stream(cfg.seed, "profiles")),
        lane_rng_(make_stream(cfg.seed, "lanes")),
        tracked_rng_(make_stream(cfg.seed, "tracked")) {
    queues_.resize(g_.link_count());
    waiting_.resize(g_.link_count());
    for (std::uint32_t i = 0; i < g_.link_count(); ++i) {
      const int lanes = net_.micro() ? g_.link(LinkIndex(i)).lanes : 1;
      queues_[i].resize(lanes);
      waiting_[i].resize(lanes);
      departed_.emplace_back(lanes, -1);
    }
    inbound_.assign(g_.link_count(), 0);
    isect_of_node_.assign(g_.node_count(), -1);
    for (NodeIndex n : g_.intersections()) {
      auto s = std::make_unique<IntersectionState>();
      s->node = n;
      s->geo = &net_.geometry(n);
      s->filter = std::make_unique<isect::DistanceFilter>(*s->geo);
      for (LinkIndex l : g_.in_links(n)) {
        s->incoming.push_back(l);
        s->d_cap = std::max(s->d_cap, g_.link(l).length_m);
      }
      if (cfg_.auctioned()) {
        s->manager = std::make_unique<auction::AuctionManager>(*s->geo, s->table, *s->filter, cfg_.auction,
                                                               splitmix64(cfg_.seed ^ (0x9e37ull * (n.value + 1))));
      }
      isect_of_node_[n.value] = static_cast<int>(isects_.size());
      isects_.push_back(std::move(s));
    }
    if (cfg_.priced()) board_.emplace(g_, cfg_.market);
    prices_.by_link.assign(g_.link_count(), 0.0);
    rule_ = cfg_.mode == Mode::Cta     ? driver::ChoiceRule::Utility
            : cfg_.mode == Mode::CaCta ? driver::ChoiceRule::Budget
                                       : driver::ChoiceRule::ShortestTime;
    if (!ghost_) build_sources();
  }

  /// Ghost runs: one vehicle, fixed route, departing at time 0.
  void add_fixed(const Route& route, const driver::DriverProfile& profile, int lane) {
    Vehicle v = make_vehicle(profile);
    v.fixed_route = true;
    v.route = route;
    v.lane = v.spawn_lane = entry_lane(v, lane);
    enqueue(std::move(v));
  }

  RunResults run();
  /// Vehicle rows, with ghost runs for the delay baselines when enabled.
  void fill_vehicle_rows(RunResults& r);
  double single_travel_time() const {
    return vehicles_.empty() || vehicles_[0].phase != Phase::Done ? kNaN : vehicles_[0].finish_t - vehicles_[0].spawn_t;
  }

 private:
  // ---- setup and spawning
  void build_sources();
  Vehicle make_vehicle(const driver::DriverProfile& profile);
  void spawn(double t);
  void spawn_one(std::size_t source, double t, const ScriptedVehicle* script);
  void enqueue(Vehicle v);
  void insert_waiting(double t);

  // ---- intersections
  IntersectionState& isect(NodeIndex n) { return *isects_.at(isect_of_node_.at(n.value)); }
  void update_market(double t);
  void deliver_replies(long tick, double t);
  void issue_requests(double t);
  void try_request(Vehicle& v, LinkIndex l, double t);
  void release(Vehicle& v, IntersectionState& s);
  void confirm(Vehicle& v, const isect::Confirmation& c, IntersectionState& s);
  void unconfirm(Vehicle& v);
  bool exit_has_room(LinkIndex next, double arrival, double t) const;

  // ---- motion
  void move(double t0, double t1);
  void move_micro_lane(LinkIndex l, int lane, double t1, std::vector<std::uint32_t>& to_cross,
                       std::vector<std::pair<std::uint32_t, double>>& overflow);
  void move_meso_link(LinkIndex l, double t1, std::vector<std::uint32_t>& to_cross,
                      std::vector<std::pair<std::uint32_t, double>>& overflow);
  void start_crossing(Vehicle& v, double t1);
  void advance_crossing(Vehicle& v, double t1);
  void enter_link(Vehicle& v, LinkIndex l, int lane, double x, double t1);
  void finish(Vehicle& v, double t);
  void abandon_schedule(Vehicle& v);
  /// Restores the queue invariant: only a prefix of each queue holds bookings.
  void cancel_behind_unbooked();
  double gap_behind(LinkIndex l, const Vehicle& leader) const;
  std::vector<std::uint32_t>& queue(LinkIndex l, int lane) { return queues_[l.value][lane]; }
  /// The current link ends at an intersection the route crosses.
  bool needs_reservation(const Vehicle& v) const {
    return v.leg + 1 < v.route.links.size() && g_.is_incoming(v.route.links[v.leg]);
  }
  int entry_lane(const Vehicle& v, int preferred);
  /// Earliest conflict-free arrival behind a vehicle booked (or crossing) from the same queue.
  double following_arrival(const Vehicle& leader, double v_follow, double tile) const;
  /// The booked vehicle directly ahead in v's queue, or the last one to leave it while still in the box.
  const Vehicle* booked_leader(const Vehicle& v, LinkIndex l) const;

  // ---- metrics
  void sample(double t);
  void record_messages(const isect::ReservationRequest& r, const isect::Reply* reply, NodeIndex n);

  Network& net_;
  const roadnet::NetworkGraph& g_;
  ScenarioConfig cfg_;
  bool ghost_;
  dynamics::LinkOccupancy occupancy_;
  RngEngine spawn_rng_, od_rng_, profile_rng_, lane_rng_, tracked_rng_;

  std::vector<Vehicle> vehicles_;
  std::vector<std::vector<std::vector<std::uint32_t>>> queues_;  // link, lane -> front first
  std::vector<std::vector<std::deque<std::uint32_t>>> waiting_;  // link, lane -> spawned, not inserted
  std::vector<std::vector<int>> departed_;                       // link, lane -> last vehicle into the box
  std::vector<int> inbound_;                                     // link -> confirmed vehicles heading onto it
  std::vector<std::uint32_t> crossing_;                          // vehicles inside a box
  std::vector<std::unique_ptr<IntersectionState>> isects_;
  std::vector<int> isect_of_node_;
  std::optional<market::PriceBoard> board_;
  roadnet::PriceView prices_;
  driver::ChoiceRule rule_;

  std::vector<Source> sources_;
  bool aggregate_ = false;
  double aggregate_rate_ = 0.0;
  std::vector<ScriptedVehicle> script_;
  std::size_t next_script_ = 0;
  std::size_t tracked_count_ = 0;
  std::size_t waiting_count_ = 0;
  std::size_t active_ = 0;
  double moving_avg_ = 0.0;
  std::size_t finished_ = 0;
  std::vector<std::pair<double, std::uint32_t>> finished_this_tick_;

  RunResults out_;
};

void Simulation::build_sources() {
  const auto& doc = net_.document();
  for (std::size_t i = 0; i < doc.od.size(); ++i) {
    const auto& e = doc.od[i];
    Source s{i, g_.node_index(e.origin), g_.node_index(e.destination), 0.0};
    if (e.rate_per_min) s.rate_per_min = *e.rate_per_min;
    if (e.count) s.rate_per_min = *e.count / cfg_.window_s * 60.0;
    sources_.push_back(s);
  }
  if (cfg_.lambda_per_min) {
    if (cfg_.lambda_per_pair) {
      for (auto& s : sources_) s.rate_per_min = *cfg_.lambda_per_min;
    } else {
      aggregate_ = true;
      aggregate_rate_ = *cfg_.lambda_per_min;
    }
  }
  script_ = cfg_.scripted;
  std::stable_sort(script_.begin(), script_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

Vehicle Simulation::make_vehicle(const driver::DriverProfile& profile) {
  Vehicle v;
  v.id = VehicleId(static_cast<std::uint32_t>(vehicles_.size() + 1));
  v.profile = profile;
  return v;
}

void Simulation::spawn(double t) {
  if (t < cfg_.window_s) {
    if (aggregate_) {
      for (std::size_t k : spawn_poisson(aggregate_rate_, sources_.size(), spawn_rng_, od_rng_, cfg_.tick_s)) {
        spawn_one(k, t, nullptr);
      }
    } else {
      for (std::size_t k = 0; k < sources_.size(); ++k) {
        if (sources_[k].rate_per_min <= 0.0) continue;
        const int n = std::poisson_distribution<int>(sources_[k].rate_per_min * cfg_.tick_s / 60.0)(spawn_rng_);
        for (int i = 0; i < n; ++i) spawn_one(k, t, nullptr);
      }
    }
  }
  while (next_script_ < script_.size() && script_[next_script_].t <= t + 1e-9) {
    spawn_one(0, t, &script_[next_script_]);
    ++next_script_;
  }
}

void Simulation::spawn_one(std::size_t source, double t, const ScriptedVehicle* script) {
  NodeIndex origin, destination;
  if (script) {
    origin = g_.node_index(script->origin);
    destination = g_.node_index(script->destination);
  } else {
    origin = sources_[source].origin;
    destination = sources_[source].destination;
  }
  auto profile = driver::sample_driver(profile_rng_, origin, destination, cfg_.population);
  bool tracked = false;
  if (cfg_.tracked_share > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(tracked_rng_) < cfg_.tracked_share) {
    tracked = true;
    profile.valuation = cfg_.tracked_endowments[tracked_count_++ % cfg_.tracked_endowments.size()];
  }
  if (script) {
    if (script->speed_kmh) profile.preferred_speed = *script->speed_kmh * kKmhToMps;
    if (script->bid) profile.valuation = *script->bid;
  }
  Vehicle v = make_vehicle(profile);
  v.tracked = tracked;
  v.spawn_t = t;
  v.route = driver::choose_initial_route(net_.routes(cfg_.k_routes), prices_, profile, rule_);
  v.lane = 0;
  if (net_.micro() && v.route.links.size() >= 2 && g_.is_incoming(v.route.links[0])) {
    const auto& geo = net_.geometry(g_.link(v.route.links[0]).to);
    const int approach = *geo.approach_of(v.route.links[0]);
    const auto turn = geo.turn_between(approach, *geo.exit_of(v.route.links[1]));
    const auto lanes = geo.lanes_for(approach, *turn);
    if (script && script->lane) {
      if (!geo.permitted(approach, *script->lane, *turn)) throw ConfigError("scripted vehicle: lane not permitted");
      v.lane = *script->lane;
    } else {
      v.lane = lanes[std::uniform_int_distribution<std::size_t>(0, lanes.size() - 1)(lane_rng_)];
    }
  }
  v.spawn_lane = v.lane;
  enqueue(std::move(v));
}

void Simulation::enqueue(Vehicle v) {
  const LinkIndex first = v.route.links.front();
  waiting_[first.value][v.lane].push_back(v.id.value - 1);
  vehicles_.push_back(std::move(v));
  ++waiting_count_;
  ++out_.spawned;
}

double Simulation::gap_behind(LinkIndex l, const Vehicle& leader) const {
  if (net_.micro()) return leader.x - kVehicleLength - cfg_.idm.min_gap;
  const auto& link = g_.link(l);
  return leader.x - 1000.0 / (cfg_.market.diagram.jam_density * link.lanes);
}

void Simulation::insert_waiting(double t) {
  for (std::uint32_t l = 0; l < waiting_.size(); ++l) {
    for (int lane = 0; lane < static_cast<int>(waiting_[l].size()); ++lane) {
      auto& w = waiting_[l][lane];
      if (w.empty()) continue;
      auto& q = queues_[l][lane];
      if (!q.empty() && gap_behind(LinkIndex(l), vehicles_[q.back()]) < 0.0) continue;
      Vehicle& v = vehicles_[w.front()];
      w.pop_front();
      --waiting_count_;
      ++active_;
      v.phase = Phase::OnLink;
      v.x = 0.0;
      v.v = std::min(v.profile.preferred_speed, g_.link(LinkIndex(l)).vmax_mps);
      v.driven.push_back(LinkIndex(l));
      q.push_back(v.id.value - 1);
      occupancy_.enter(LinkIndex(l));
      (void)t;
    }
  }
}

void Simulation::update_market(double t) {
  // Demand counts the vehicles on a link that still have to cross the intersection at its end.
  // Under reserve prices it is demand at the current price: drivers valuing a crossing below the
  // reserve do not count.
  std::vector<double> demand(g_.link_count(), 0.0);
  for (const auto& lanes : queues_) {
    for (const auto& q : lanes) {
      for (std::uint32_t idx : q) {
        const Vehicle& v = vehicles_[idx];
        if (!needs_reservation(v)) continue;
        const LinkIndex l = v.route.links[v.leg];
        if (cfg_.mode == Mode::CaCta && v.profile.valuation < prices_.at(l)) continue;
        demand[l.value] += 1.0;
      }
    }
  }
  board_->update(demand);
  prices_ = board_->view();
  if (ghost_) return;
  for (LinkIndex l : board_->priced_links()) {
    const auto& st = board_->state(l);
    out_.prices.push_back({t, g_.node(g_.link(l).to).id, g_.link(l).id, st.price, st.demand, st.supply.exact});
  }
}

void Simulation::release(Vehicle& v, IntersectionState& s) {
  s.table.remove(v.id);
}

void Simulation::confirm(Vehicle& v, const isect::Confirmation& c, IntersectionState& s) {
  v.booking = Booking::Confirmed;
  v.tiles = c.tiles;
  v.profile.wallet += c.payment;
  s.revenue += c.payment;
  out_.spending += c.payment;
  out_.revenue += c.payment;
  ++inbound_[v.route.links[v.leg + 1].value];
}

void Simulation::unconfirm(Vehicle& v) {
  v.booking = Booking::None;
  --inbound_[v.route.links[v.leg + 1].value];
}

bool Simulation::exit_has_room(LinkIndex next, double arrival, double t) const {
  // Room for this vehicle behind the predicted tail and every vehicle already booked into the link.
  const auto& link = g_.link(next);
  const double spacing = 1000.0 / (cfg_.market.diagram.jam_density * link.lanes);
  const auto& q = queues_[next.value][0];
  const int booked = inbound_[next.value];
  // The link never holds more than it can at jam density.
  if ((occupancy_.count(next) + booked + 1) * spacing > link.length_m + 1e-9) return false;
  const double tail = q.empty() ? link.length_m : vehicles_[q.back()].x + vehicles_[q.back()].v * (arrival - t);
  return std::min(tail, link.length_m) >= spacing * (booked + 1);
}

void Simulation::cancel_behind_unbooked() {
  for (auto& sp : isects_) {
    for (LinkIndex l : sp->incoming) {
      for (auto& q : queues_[l.value]) {
        bool gap = false;
        for (std::uint32_t idx : q) {
          Vehicle& v = vehicles_[idx];
          if (!gap) {
            gap = !v.plan && needs_reservation(v);
            continue;
          }
          // A slot planned behind a leader that is no longer booked cannot be honoured.
          if (v.booking == Booking::Confirmed) {
            release(v, isect(NodeIndex(v.node)));
            unconfirm(v);
            ++out_.cancellations;
          }
          v.booking = Booking::None;
          v.plan.reset();
        }
      }
    }
  }
}

void Simulation::abandon_schedule(Vehicle& v) {
  if (v.booking == Booking::Confirmed) {
    release(v, isect(NodeIndex(v.node)));
    unconfirm(v);
    ++out_.violations;
  }
  v.plan.reset();
}

void Simulation::deliver_replies(long tick, double t) {
  for (auto& sp : isects_) {
    auto& s = *sp;
    if (!s.manager) continue;
    std::vector<Money> reserve;
    if (cfg_.mode == Mode::CaCta) {
      for (const auto& a : s.geo->approaches()) reserve.push_back(prices_.at(a.link));
    }
    auto step = s.manager->step(tick, reserve);
    for (auto& [bid, reply] : step.delivered) {
      Vehicle& v = vehicles_.at(bid.request.vehicle.value - 1);
      // Replies to superseded bids never touch the vehicle's current bid.
      const bool current =
          v.booking == Booking::Pending && v.node == s.node.value && v.requested_t_a == bid.request.t_a;
      const bool expected = current && v.plan;
      if (cfg_.log_messages && !ghost_) record_messages(bid.request, &reply, s.node);
      if (const auto* c = std::get_if<isect::Confirmation>(&reply)) {
        if (expected) {
          confirm(v, *c, s);
        } else {
          s.table.remove(v.id);
          if (current) v.booking = Booking::None;
        }
      } else {
        ++s.rejections;
        ++v.rejections;
        if (current) {
          v.booking = Booking::None;
          v.plan.reset();
        }
      }
    }
    if (step.round && !ghost_) out_.auctions.push_back({t, g_.node(s.node).id, *step.round});
  }
}

void Simulation::issue_requests(double t) {
  for (auto& sp : isects_) {
    for (LinkIndex l : sp->incoming) {
      for (auto& q : queues_[l.value]) {
        for (std::uint32_t idx : q) {
          Vehicle& v = vehicles_[idx];
          if (v.booking == Booking::Confirmed) continue;
          // Bids are pipelined: a follower may bid behind a leader whose own bid is still pending.
          if (v.booking == Booking::Pending && v.plan && cfg_.auctioned()) continue;
          if (v.booking == Booking::None && v.phase == Phase::OnLink) try_request(v, l, t);
          break;
        }
      }
    }
  }
}

double Simulation::following_arrival(const Vehicle& leader, double v_follow, double tile) const {
  const double tick = cfg_.tick_s;
  // Footprints are quantised to tiles, so bodies closer than a tile may share one.
  const double margin = kVehicleLength + tile;
  const double t_l = leader.requested_t_a;
  const double v_l = leader.requested_v_a;
  // Equal speeds: the follower's dilated front stays behind the leader's dilated rear.
  double bound = t_l + tick + margin / v_l;
  if (v_follow > v_l) {
    // A faster follower reaches the far side of the box only after the leader's rear has left it.
    const double leader_clear = t_l + (leader.path_m + kVehicleLength) / v_l;
    bound = std::max(bound, leader_clear + tick - std::max(0.0, leader.path_m - tile) / v_follow);
  }
  return bound;
}

const Vehicle* Simulation::booked_leader(const Vehicle& v, LinkIndex l) const {
  const int lane = net_.micro() ? v.lane : 0;
  const auto& q = queues_[l.value][lane];
  const auto it = std::find(q.begin(), q.end(), v.id.value - 1);
  if (it != q.begin()) {
    const Vehicle& ahead = vehicles_[*(it - 1)];
    return ahead.plan ? &ahead : nullptr;
  }
  const int gone = departed_[l.value][lane];
  if (gone >= 0 && vehicles_[gone].phase == Phase::Crossing) return &vehicles_[gone];
  return nullptr;
}

void Simulation::try_request(Vehicle& v, LinkIndex l, double t) {
  if (v.leg + 1 >= v.route.links.size()) return;
  const LinkIndex next = v.route.links[v.leg + 1];
  const NodeIndex n = g_.link(l).to;
  auto& s = isect(n);
  const auto& geo = *s.geo;
  const int approach = *geo.approach_of(l);
  const auto exit = geo.exit_of(next);
  if (!exit) return;
  const auto turn = geo.turn_between(approach, *exit);
  if (!turn) return;
  int lane = v.lane;
  if (!net_.micro()) {
    const auto lanes = geo.lanes_for(approach, *turn);
    lane = lanes[v.id.value % lanes.size()];
  }
  if (!geo.permitted(approach, lane, *turn)) return;
  const auto& link = g_.link(l);
  const double accel = net_.micro() ? cfg_.idm.accel : cfg_.meso.accel;
  const double decel = net_.micro() ? cfg_.idm.decel : cfg_.meso.decel;
  const double path = geo.movement(approach, lane, *turn).path.length();
  double cruise = std::min(v.profile.preferred_speed, link.vmax_mps);
  const Vehicle* leader = booked_leader(v, l);
  // A follower never plans to cruise faster than the booked vehicle ahead of it on the link.
  if (leader && leader->plan) cruise = std::min(cruise, leader->plan->cruise);
  const double earliest = t + cfg_.request_lead_s();
  auto plan = dynamics::plan_arrival(t, link.length_m - v.x, v.v, cruise, accel, cfg_.v_launch, earliest);
  if (!plan) return;
  {
    // Behind a scheduled leader in the same queue, arrive late enough that the two tick-dilated
    // crossings cannot overlap, so the request does not collide with the leader's own booking.
    if (leader) {
      const double bound = following_arrival(*leader, plan->v_a, geo.tile_size());
      if (plan->t_line < bound) {
        plan = dynamics::plan_arrival(t, link.length_m - v.x, v.v, cruise, accel, cfg_.v_launch, bound);
        if (plan && plan->t_line < following_arrival(*leader, plan->v_a, geo.tile_size())) {
          plan = dynamics::plan_arrival(t, link.length_m - v.x, v.v, cruise, accel, cfg_.v_launch,
                                        following_arrival(*leader, plan->v_a, geo.tile_size()));
        }
        if (!plan) return;
      }
    }
  }
  const auto& movement = geo.movement(approach, lane, *turn);
  auto bundle = geo.trajectory_tiles(movement, plan->t_line, plan->v_a);
  if (leader) {
    // Tile quantisation can still put the two bundles in one tile; slide the arrival until they are disjoint.
    for (int i = 0; isect::intersects(bundle, leader->tiles); ++i) {
      if (i == 40) return;
      plan = dynamics::plan_arrival(t, link.length_m - v.x, v.v, cruise, accel, cfg_.v_launch,
                                    plan->t_line + 0.25 * cfg_.tick_s);
      if (!plan) return;
      bundle = geo.trajectory_tiles(movement, plan->t_line, plan->v_a);
    }
  }
  if (!net_.micro() && !exit_has_room(next, plan->t_line, t)) return;
  if (cfg_.auctioned()) {
    // The vehicle follows its plan while the bid is pending and must still be able to stop if it loses.
    const double reply = t + (cfg_.auction.round_ticks + 1) * cfg_.tick_s;
    const double vr = plan->speed(reply);
    if (plan->remaining(reply) + 1e-9 < vr * vr / (2.0 * decel)) return;
  }
  isect::ReservationRequest r{v.id, plan->t_line, plan->v_a, approach, lane, *turn, std::nullopt};
  ++v.requests;
  ++s.requests;
  v.node = n.value;
  if (cfg_.auctioned()) {
    // Drivers bid their valuation; a lane head priced out after committing to the link has no
    // other way forward and raises its bid to the reserve.
    const bool head = queue(l, net_.micro() ? v.lane : 0).front() == v.id.value - 1;
    Money value = driver::bid_value(v.profile, cfg_.mode == Mode::CaCta && head ? prices_.at(l) : 0.0);
    value = std::max(value, v.last_bid);
    r.bid = value;
    v.last_bid = value;
    s.manager->submit(auction::Bid{r, value, t});
    v.booking = Booking::Pending;
    v.plan = plan;
    v.requested_t_a = plan->t_line;
    v.requested_v_a = plan->v_a;
    v.path_m = path;
    v.tiles = std::move(bundle);
    if (cfg_.log_messages && !ghost_) record_messages(r, nullptr, n);
    return;
  }
  const Money price = cfg_.mode == Mode::Cta ? prices_.at(l) : 0.0;
  auto reply = isect::fcfs_process(r, geo, s.table, *s.filter, t, price);
  if (cfg_.log_messages && !ghost_) record_messages(r, &reply, n);
  if (const auto* c = std::get_if<isect::Confirmation>(&reply)) {
    v.plan = plan;
    v.requested_t_a = plan->t_line;
    v.requested_v_a = plan->v_a;
    v.path_m = path;
    confirm(v, *c, s);
  } else {
    ++v.rejections;
    ++s.rejections;
  }
}

void Simulation::record_messages(const isect::ReservationRequest& r, const isect::Reply* reply, NodeIndex n) {
  std::ostringstream os;
  const std::string manager = g_.node(n).id;
  if (reply) {
    isect::log_reply(os, *reply, manager);
  } else {
    isect::log_request(os, r, manager);
  }
  out_.messages.push_back(os.str());
}

void Simulation::move_micro_lane(LinkIndex l, int lane, double t1, std::vector<std::uint32_t>& to_cross,
                                 std::vector<std::pair<std::uint32_t, double>>& overflow) {
  auto& q = queue(l, lane);
  if (q.empty()) return;
  const auto& link = g_.link(l);
  std::vector<dynamics::MicroVehicle> cars;
  cars.reserve(q.size());
  for (std::uint32_t idx : q) {
    const Vehicle& v = vehicles_[idx];
    dynamics::MicroVehicle c;
    c.x = v.x;
    c.v = v.v;
    c.v_pref = std::min(v.profile.preferred_speed, link.vmax_mps);
    c.length = kVehicleLength;
    c.scheduled = v.plan.has_value();
    c.must_stop = needs_reservation(v) && !c.scheduled;
    if (c.scheduled) {
      c.target_x = link.length_m - v.plan->remaining(t1);
      c.target_v = v.plan->speed(t1);
    }
    cars.push_back(c);
  }
  const double tile = g_.is_incoming(l) ? net_.geometry(link.to).tile_size() : 0.25;
  dynamics::micro_step(cars, cfg_.idm, dynamics::LaneStep{cfg_.tick_s, tile, link.length_m});
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vehicle& v = vehicles_[q[i]];
    const double before = v.x;
    v.x = cars[i].x;
    v.v = cars[i].v;
    if (v.plan && cars[i].blocked && v.x < cars[i].target_x - kScheduleSlackM) abandon_schedule(v);
    if (v.plan && v.plan->t_line <= t1 + 1e-9) {
      if (v.booking == Booking::Confirmed && v.x >= link.length_m - 1e-6) {
        to_cross.push_back(q[i]);
      } else if (v.booking == Booking::Pending) {
        v.plan.reset();  // the answer is late: hold on the line until it arrives
        v.x = std::min(v.x, link.length_m);
        v.v = 0.0;
      }
    }
    if (!needs_reservation(v) && v.x >= link.length_m) {
      const double frac = v.x > before ? (link.length_m - before) / (v.x - before) : 1.0;
      overflow.emplace_back(q[i], t1 - cfg_.tick_s * (1.0 - frac));
    }
  }
}

void Simulation::move_meso_link(LinkIndex l, double t1, std::vector<std::uint32_t>& to_cross,
                                std::vector<std::pair<std::uint32_t, double>>& overflow) {
  auto& q = queue(l, 0);
  if (q.empty()) return;
  const auto& link = g_.link(l);
  const double jam = cfg_.market.diagram.jam_density;
  const double density = occupancy_.density(g_, l);
  const double spacing = 1000.0 / (jam * link.lanes);
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vehicle& v = vehicles_[q[i]];
    const double before = v.x;
    double limit = kInfinity;
    double lead_v = kInfinity;
    if (i > 0) {
      limit = vehicles_[q[i - 1]].x - spacing;
      lead_v = vehicles_[q[i - 1]].v;
    }
    if (v.plan) {
      double x = link.length_m - v.plan->remaining(t1);
      double speed = v.plan->speed(t1);
      if (x > limit) {
        x = limit;
        speed = std::min(speed, lead_v);
        if (x < link.length_m - v.plan->remaining(t1) - kScheduleSlackM) abandon_schedule(v);
      }
      v.x = std::max(v.x, x);
      v.v = speed;
    } else {
      // Greenshields speed is zero at jam density; the crawl floor lets a jammed link still discharge.
      const double crawl = std::min(cfg_.v_launch, link.vmax_mps);
      const double y_cur =
          std::max(crawl, dynamics::reference_speed(link.vmax_mps, density, v.profile.preferred_speed, jam));
      double y_next = y_cur;
      if (v.leg + 1 < v.route.links.size()) {
        const LinkIndex nl = v.route.links[v.leg + 1];
        y_next = std::max(crawl, dynamics::reference_speed(g_.link(nl).vmax_mps, occupancy_.density(g_, nl),
                                                           v.profile.preferred_speed, jam));
      }
      double target = dynamics::meso_target_speed(v.x, link.length_m, y_cur, y_next);
      double stop = limit;
      if (needs_reservation(v)) stop = std::min(stop, link.length_m);
      if (std::isfinite(stop)) target = std::min(target, std::sqrt(2.0 * cfg_.meso.decel * std::max(0.0, stop - v.x)));
      auto m = dynamics::meso_step(v.x, v.v, link.length_m, target, cfg_.meso, cfg_.tick_s, stop);
      v.x = m.x;
      v.v = m.v;
    }
    if (v.plan && v.plan->t_line <= t1 + 1e-9) {
      if (v.booking == Booking::Confirmed && v.x >= link.length_m - 1e-6) {
        to_cross.push_back(q[i]);
      } else if (v.booking == Booking::Pending) {
        v.plan.reset();
        v.x = std::min(v.x, link.length_m);
        v.v = 0.0;
      }
    }
    if (!needs_reservation(v) && v.x >= link.length_m) {
      const double frac = v.x > before ? (link.length_m - before) / (v.x - before) : 1.0;
      overflow.emplace_back(q[i], t1 - cfg_.tick_s * (1.0 - frac));
    }
  }
}

void Simulation::start_crossing(Vehicle& v, double t1) {
  const LinkIndex l = v.route.links[v.leg];
  auto& q = queue(l, v.lane);
  q.erase(std::find(q.begin(), q.end(), v.id.value - 1));
  occupancy_.leave(l);
  const auto& geo = net_.geometry(g_.link(l).to);
  const auto& req_link = v.route.links[v.leg + 1];
  const int approach = *geo.approach_of(l);
  const auto turn = *geo.turn_between(approach, *geo.exit_of(req_link));
  int lane = v.lane;
  if (!net_.micro()) {
    const auto lanes = geo.lanes_for(approach, turn);
    lane = lanes[v.id.value % lanes.size()];
  }
  const auto& m = geo.movement(approach, lane, turn);
  v.exit_lane = net_.micro() ? m.exit_lane : 0;
  v.phase = Phase::Crossing;
  v.crossing.emplace(v.plan->t_line, v.plan->v_a, m.path.length() + geo.vehicle_length(), v.tiles, geo.tick());
  v.v = v.plan->v_a;
  v.plan.reset();
  crossing_.push_back(v.id.value - 1);
  departed_[l.value][v.lane] = static_cast<int>(v.id.value - 1);
  (void)t1;
}

void Simulation::advance_crossing(Vehicle& v, double t1) {
  if (!v.crossing->advance(t1)) return;
  auto& s = isect(NodeIndex(v.node));
  if (s.table.find(v.id)) isect::consume_reservation(v.id, s.table);
  if (s.manager) s.manager->forget(v.id);
  unconfirm(v);
  v.last_bid = 0.0;
  const double beyond = v.v * (t1 - v.crossing->t_exit()) + kVehicleLength;
  v.crossing.reset();
  crossing_.erase(std::find(crossing_.begin(), crossing_.end(), v.id.value - 1));
  ++v.leg;
  enter_link(v, v.route.links[v.leg], v.exit_lane, beyond, t1);
}

int Simulation::entry_lane(const Vehicle& v, int preferred) {
  if (!net_.micro()) return 0;
  const LinkIndex l = v.route.links[v.leg];
  preferred = std::clamp(preferred, 0, g_.link(l).lanes - 1);
  if (!needs_reservation(v)) return preferred;
  const auto& geo = net_.geometry(g_.link(l).to);
  const int approach = *geo.approach_of(l);
  const auto turn = geo.turn_between(approach, *geo.exit_of(v.route.links[v.leg + 1]));
  if (geo.permitted(approach, preferred, *turn)) return preferred;
  const auto lanes = geo.lanes_for(approach, *turn);
  // Nearest permitted lane; lower index on ties.
  return *std::min_element(lanes.begin(), lanes.end(),
                           [&](int a, int b) { return std::abs(a - preferred) < std::abs(b - preferred); });
}

void Simulation::enter_link(Vehicle& v, LinkIndex l, int lane, double x, double t1) {
  v.phase = Phase::OnLink;
  v.driven.push_back(l);
  if (!v.fixed_route && rule_ != driver::ChoiceRule::ShortestTime) {
    auto r = driver::reevaluate_route(net_.routes(cfg_.k_routes), l, prices_, v.profile, rule_);
    if (r) {
      v.route.links.resize(v.leg);
      v.route.links.insert(v.route.links.end(), r->links.begin(), r->links.end());
    }
  }
  lane = entry_lane(v, lane);
  v.lane = lane;
  auto& q = queue(l, lane);
  if (!q.empty()) {
    const Vehicle& tail = vehicles_[q.back()];
    const double gap = net_.micro() ? kVehicleLength
                                    : 1000.0 / (cfg_.market.diagram.jam_density * g_.link(l).lanes);
    x = std::min(x, tail.x - gap);
  }
  v.x = x;
  q.push_back(v.id.value - 1);
  occupancy_.enter(l);
  const auto& link = g_.link(l);
  if (v.x >= link.length_m && !needs_reservation(v)) {
    // Passed straight through a short link within the tick.
    q.pop_back();
    occupancy_.leave(l);
    if (v.leg + 1 >= v.route.links.size()) {
      finish(v, t1);
    } else {
      ++v.leg;
      enter_link(v, v.route.links[v.leg], lane, v.x - link.length_m, t1);
    }
  }
}

void Simulation::finish(Vehicle& v, double t) {
  v.phase = Phase::Done;
  v.finish_t = t;
  --active_;
  finished_this_tick_.emplace_back(t, v.id.value - 1);
}

void Simulation::move(double t0, double t1) {
  (void)t0;
  std::vector<std::uint32_t> to_cross;
  std::vector<std::pair<std::uint32_t, double>> overflow;
  for (std::uint32_t l = 0; l < g_.link_count(); ++l) {
    if (net_.micro()) {
      for (int lane = 0; lane < static_cast<int>(queues_[l].size()); ++lane) {
        move_micro_lane(LinkIndex(l), lane, t1, to_cross, overflow);
      }
    } else {
      move_meso_link(LinkIndex(l), t1, to_cross, overflow);
    }
  }
  // Vehicles already inside a box move first so that new arrivals cannot overtake them on the exit link.
  auto inside = crossing_;
  std::sort(inside.begin(), inside.end());
  for (std::uint32_t idx : inside) advance_crossing(vehicles_[idx], t1);
  for (std::uint32_t idx : to_cross) {
    Vehicle& v = vehicles_[idx];
    start_crossing(v, t1);
    advance_crossing(v, t1);
  }
  for (auto [idx, when] : overflow) {
    Vehicle& v = vehicles_[idx];
    const LinkIndex l = v.route.links[v.leg];
    auto& q = queue(l, v.lane);
    q.erase(std::find(q.begin(), q.end(), idx));
    occupancy_.leave(l);
    if (v.leg + 1 >= v.route.links.size()) {
      finish(v, when);
    } else {
      const double rest = v.x - g_.link(l).length_m;
      ++v.leg;
      enter_link(v, v.route.links[v.leg], v.lane, rest, t1);
    }
  }
}

void Simulation::sample(double t) {
  if (ghost_) return;
  for (std::uint32_t l = 0; l < g_.link_count(); ++l) {
    out_.links.push_back({t, g_.link(LinkIndex(l)).id, occupancy_.count(LinkIndex(l)),
                          occupancy_.density(g_, LinkIndex(l))});
  }
  for (const auto& sp : isects_) {
    const auto& s = *sp;
    double vehicles = 0.0, lane_km = 0.0, peak = 0.0;
    for (LinkIndex l : s.incoming) {
      vehicles += occupancy_.count(l);
      lane_km += g_.link(l).length_m / 1000.0 * g_.link(l).lanes;
      peak = std::max(peak, occupancy_.density(g_, l));
    }
    double d_sum = 0.0;
    int lanes = 0;
    for (const auto& per_approach : s.filter->values()) {
      for (double d : per_approach) {
        d_sum += std::min(d, s.d_cap);
        ++lanes;
      }
    }
    out_.intersections.push_back({t, g_.node(s.node).id, lane_km > 0 ? vehicles / lane_km : 0.0, peak,
                                  lanes ? d_sum / lanes : 0.0, s.requests, s.rejections, s.revenue});
  }
}

RunResults Simulation::run() {
  out_.config = cfg_;
  out_.scenario = net_.document().name;
  const double dt = cfg_.tick_s;
  const double horizon = cfg_.window_s + cfg_.horizon_extra_s;
  double next_market = 0.0;
  double next_sample = 0.0;
  long tick = 0;
  double t = 0.0;
  for (;; ++tick) {
    t = tick * dt;
    const bool demand_left = t < cfg_.window_s && !ghost_;
    if (!demand_left && active_ == 0 && waiting_count_ == 0 && next_script_ >= script_.size()) {
      break;
    }
    if (t >= horizon) {
      out_.partial = active_ > 0 || waiting_count_ > 0;
      break;
    }
    if (!ghost_) spawn(t);
    insert_waiting(t);
    if (board_ && t >= next_market - 1e-9) {
      update_market(t);
      next_market += cfg_.market.cadence_s;
    }
    if (t >= next_sample - 1e-9) {
      sample(t);
      next_sample += cfg_.density_cadence_s;
    }
    deliver_replies(tick, t);
    cancel_behind_unbooked();
    issue_requests(t);
    move(t, t + dt);
    std::sort(finished_this_tick_.begin(), finished_this_tick_.end());
    for (auto [when, idx] : finished_this_tick_) {
      const Vehicle& v = vehicles_[idx];
      const double travel = when - v.spawn_t;
      moving_avg_ = moving_average_update(moving_avg_, travel, finished_++);
      if (!ghost_) out_.moving_average.push_back({when, v.id.value, travel, moving_avg_});
    }
    finished_this_tick_.clear();
    if (tick % 600 == 0) {
      for (auto& sp : isects_) sp->table.prune_before(static_cast<isect::Step>(std::floor(t / dt)) - 1);
    }
  }
  out_.ticks = tick;
  out_.end_s = t;
  out_.completed = finished_;
  return std::move(out_);
}

void Simulation::fill_vehicle_rows(RunResults& r) {
  std::map<std::tuple<std::vector<std::uint32_t>, int, double>, double> cache;
  auto ghost = [&](const Route& route, const Vehicle& v) {
    std::vector<std::uint32_t> key;
    for (LinkIndex l : route.links) key.push_back(l.value);
    const int lane = net_.micro() ? v.spawn_lane : 0;
    auto [it, fresh] = cache.try_emplace({key, lane, v.profile.preferred_speed}, 0.0);
    if (fresh) it->second = ghost_travel_time(net_, cfg_, route, v.profile, lane);
    return it->second;
  };
  for (const Vehicle& v : vehicles_) {
    VehicleRow row;
    row.id = v.id.value;
    row.origin = g_.node(v.profile.origin).id;
    row.destination = g_.node(v.profile.destination).id;
    row.spawn_s = v.spawn_t;
    row.bid = v.profile.valuation;
    row.spent = v.profile.wallet;
    row.tracked = v.tracked;
    row.completed = v.phase == Phase::Done;
    row.requests = v.requests;
    row.rejections = v.rejections;
    row.route = fmt_route(g_, v.phase == Phase::Done ? std::span<const LinkIndex>(v.driven)
                                                     : std::span<const LinkIndex>(v.route.links));
    row.finish_s = row.travel_s = row.unhindered_s = row.delay_s = row.shortest_s = row.normalized_delay = kNaN;
    if (row.completed) {
      row.finish_s = v.finish_t;
      row.travel_s = v.finish_t - v.spawn_t;
      if (cfg_.ghost) {
        Route driven;
        driven.links = v.driven;
        row.unhindered_s = ghost(driven, v);
        const auto& shortest = net_.routes(cfg_.k_routes).from_node(v.profile.origin, v.profile.destination);
        row.shortest_s = ghost(shortest.front(), v);
        row.delay_s = delay(row.travel_s, row.unhindered_s);
        if (row.shortest_s > 0.0) row.normalized_delay = normalized_delay(row.travel_s, row.shortest_s);
      }
    }
    r.vehicles.push_back(std::move(row));
  }
}

}  // namespace

RunResults run(Network& net, const ScenarioConfig& config) {
  Simulation sim(net, config, false);
  RunResults r = sim.run();
  // Ghost runs happen after the main run and draw from no shared stream.
  sim.fill_vehicle_rows(r);
  return r;
}

RunResults run(const roadnet::ScenarioDocument& doc, const ScenarioConfig& config) {
  Network net(doc, config.tick_s);
  return run(net, config);
}

double ghost_travel_time(Network& net, const ScenarioConfig& config, const Route& route,
                         const driver::DriverProfile& profile, int lane) {
  ScenarioConfig c = config;
  c.mode = Mode::Fcfs;
  c.lambda_per_min.reset();
  c.scripted.clear();
  c.tracked_share = 0.0;
  c.log_messages = false;
  c.ghost = false;
  Simulation sim(net, c, true);
  sim.add_fixed(route, profile, lane);
  sim.run();
  return sim.single_travel_time();
}

}  // namespace intersim::engine
