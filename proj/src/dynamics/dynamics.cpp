#include "intersim/dynamics/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace intersim::dynamics {

double idm_acceleration(double v, double gap, double dv, double v_pref, const IdmParams& p) {
  const double free = 1.0 - std::pow(v / v_pref, p.exponent);
  if (std::isinf(gap)) return p.accel * free;
  const double s_star = p.min_gap + v * p.headway + v * dv / (2.0 * std::sqrt(p.accel * p.decel));
  const double ratio = s_star / gap;
  return p.accel * (free - ratio * ratio);
}

void micro_step(std::span<MicroVehicle> lane, const IdmParams& p, const LaneStep& step) {
  const std::vector<MicroVehicle> before(lane.begin(), lane.end());
  for (std::size_t i = 0; i < lane.size(); ++i) {
    auto& c = lane[i];
    c.blocked = false;
    if (c.scheduled) {
      double x_new = c.target_x, v_new = c.target_v;
      if (i > 0 && x_new > lane[i - 1].x - lane[i - 1].length) {
        x_new = lane[i - 1].x - lane[i - 1].length;
        v_new = std::min(v_new, lane[i - 1].v);
        c.blocked = true;
      }
      c.x = std::max(c.x, x_new);
      c.v = v_new;
      continue;
    }
    double acc = idm_acceleration(c.v, kInfinity, 0.0, c.v_pref, p);
    if (i > 0) {
      const auto& lead = before[i - 1];
      const double gap = lead.x - lead.length - c.x;
      acc = gap > 1e-6 ? std::min(acc, idm_acceleration(c.v, gap, c.v - lead.v, c.v_pref, p)) : -kInfinity;
    }
    if (c.must_stop) {
      // A virtual standing obstacle min_gap beyond the line makes the equilibrium stop on the line.
      const double gap = step.stop_line + p.min_gap - c.x;
      acc = gap > 1e-6 ? std::min(acc, idm_acceleration(c.v, gap, c.v, c.v_pref, p)) : -kInfinity;
    }
    const double v_new = std::max(0.0, c.v + acc * step.dt);
    double x_new = c.x + 0.5 * (c.v + v_new) * step.dt;
    x_new = std::round(x_new / step.tile) * step.tile;
    double v_out = v_new;
    if (i > 0) {
      const double limit = lane[i - 1].x - lane[i - 1].length;
      if (x_new > limit) {
        x_new = limit;
        v_out = std::min(v_out, lane[i - 1].v);
      }
    }
    if (c.must_stop && x_new >= step.stop_line) {
      x_new = step.stop_line;
      v_out = 0.0;
    }
    c.x = std::max(c.x, x_new);
    c.v = v_out;
  }
}

namespace {

// Distance and speed after `s` seconds of accelerate-then-cruise motion.
struct Kinematics {
  double v0, accel, cruise;

  double ramp() const { return accel > 0.0 ? (cruise - v0) / accel : 0.0; }
  double covered(double s) const {
    const double r = ramp();
    if (s <= r) return v0 * s + 0.5 * accel * s * s;
    return v0 * r + 0.5 * accel * r * r + cruise * (s - r);
  }
  double speed(double s) const { return s <= ramp() ? v0 + accel * s : cruise; }
  // Time to cover d; infinite if the vehicle never moves.
  double time_for(double d) const {
    if (d <= 0.0) return 0.0;
    const double r = ramp();
    const double dr = v0 * r + 0.5 * accel * r * r;
    if (d <= dr) return accel > 0.0 ? (std::sqrt(v0 * v0 + 2.0 * accel * d) - v0) / accel : d / v0;
    return cruise > 0.0 ? r + (d - dr) / cruise : kInfinity;
  }
};

}  // namespace

double ArrivalPlan::remaining(double t) const {
  if (t <= start) return distance;
  return std::max(0.0, distance - Kinematics{v0, accel, cruise}.covered(t - start));
}

double ArrivalPlan::speed(double t) const {
  if (t <= start) return v0;
  if (t >= t_line) return v_line;
  return Kinematics{v0, accel, cruise}.speed(t - start);
}

std::optional<ArrivalPlan> plan_arrival(double now, double distance, double v, double cruise, double accel,
                                        double v_launch, double earliest) {
  ArrivalPlan plan;
  plan.distance = std::max(0.0, distance);
  plan.v0 = v;
  plan.cruise = std::max(cruise, v);
  plan.accel = plan.cruise > v ? accel : 0.0;
  Kinematics k{plan.v0, plan.accel, plan.cruise};
  const double tau = k.time_for(plan.distance);
  if (!std::isfinite(tau)) return std::nullopt;
  plan.start = now;
  if (now + tau < earliest) {
    if (v > 1e-9) return std::nullopt;
    plan.start = earliest - tau;
  }
  plan.t_line = plan.start + tau;
  plan.v_line = k.speed(tau);
  plan.v_a = std::max(plan.v_line, v_launch);
  if (!(plan.v_a > 0.0)) return std::nullopt;
  return plan;
}

double meso_target_speed(double x, double length, double y_current, double y_next) {
  const double f = std::clamp(x / length, 0.0, 1.0);
  return (1.0 - f) * y_current + f * y_next;
}

MesoMove meso_step(double x, double v, double length, double target, const MesoParams& p, double dt, double limit) {
  MesoMove m;
  const double dv = std::clamp(target - v, -p.decel * dt, p.accel * dt);
  m.v = std::max(0.0, v + dv);
  m.x = x + 0.5 * (v + m.v) * dt;
  if (m.x >= limit) {
    m.x = std::max(x, limit);
    m.v = 0.0;
  }
  if (m.x >= length) {
    m.overflow = true;
    m.remainder = m.x - length;
  }
  return m;
}

double reference_speed(double vmax, double density, double v_pref, double jam_density) {
  market::FundamentalDiagram fd{jam_density, vmax};
  return std::min({v_pref, market::speed_density(density, fd), vmax});
}

void LinkOccupancy::leave(LinkIndex l) {
  if (count_.at(l.value) == 0) throw std::logic_error("link occupancy would become negative");
  --count_[l.value];
}

double LinkOccupancy::density(const roadnet::NetworkGraph& g, LinkIndex l) const {
  const auto& link = g.link(l);
  return count(l) / (link.length_m / 1000.0 * link.lanes);
}

CellCrossing::CellCrossing(double t_a, double v_a, double traverse_m, isect::TileTimeSet booked, double tick)
    : t_a_(t_a), v_a_(v_a), t_exit_(t_a + traverse_m / v_a), tick_(tick), booked_(std::move(booked)) {}

bool CellCrossing::advance(double now) {
  if (done_ || now < t_a_) return done_;
  travelled_ = v_a_ * (std::min(now, t_exit_) - t_a_);
  // Record every step the vehicle has been inside up to `now`.
  const auto first = static_cast<isect::Step>(std::floor(t_a_ / tick_));
  const double upto = std::min(now, t_exit_);
  for (auto k = visited_.empty() ? first : visited_.back() + 1; k * tick_ < upto; ++k) {
    if ((k + 1) * tick_ <= t_a_) continue;
    visited_.push_back(k);
    const bool booked = std::any_of(booked_.begin(), booked_.end(), [&](const auto& e) { return e.first == k; });
    on_schedule_ = on_schedule_ && booked;
  }
  done_ = now >= t_exit_;
  return done_;
}

}  // namespace intersim::dynamics
