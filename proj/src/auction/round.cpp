#include "intersim/auction/round.hpp"

#include <algorithm>
#include <sstream>

namespace intersim::auction {

using isect::Confirmation;
using isect::RejectReason;
using isect::Rejection;

BidCheck validate_bid(Money value, std::optional<Money> prior) {
  if (!prior || value >= *prior) return {};
  std::ostringstream msg;
  msg << "resubmitted bid " << value << " is below the withdrawn bid " << *prior;
  return {false, msg.str()};
}

RoundResult run_auction_round(std::span<const Bid> bids, RoundContext ctx, double now, double announce,
                              const AuctionParams& params, RngEngine& rng) {
  RoundResult out;
  out.stats.submitted = bids.size();
  out.replies.resize(bids.size());
  std::vector<char> decided(bids.size(), 0);
  auto reject = [&](std::size_t i, RejectReason why, double d, std::string detail = {}) {
    out.replies[i] = Rejection{bids[i].request.vehicle, why, d, std::move(detail)};
    decided[i] = 1;
  };

  // Only the latest bid of a vehicle counts; earlier ones are withdrawn.
  std::unordered_map<VehicleId, std::size_t> latest;
  for (std::size_t i = 0; i < bids.size(); ++i) latest[bids[i].request.vehicle] = i;

  struct DistanceUpdate {
    int approach, lane;
    double d;
  };
  std::vector<DistanceUpdate> rejected_updates;
  std::vector<std::size_t> contenders;
  std::vector<isect::TileTimeSet> tiles(bids.size());

  for (std::size_t i = 0; i < bids.size(); ++i) {
    const auto& r = bids[i].request;
    if (latest[r.vehicle] != i) {
      reject(i, RejectReason::Stale, 0.0, "superseded");
      continue;
    }
    if (r.t_a <= announce) {
      reject(i, RejectReason::Stale, 0.0);
      continue;
    }
    isect::validate_request(r, ctx.geometry, now);
    const double d = isect::reservation_distance(r, bids[i].sent.value_or(now));
    if (d > ctx.filter.get(r.approach, r.lane)) {
      reject(i, RejectReason::FilteredByDistance, d);
      continue;
    }
    auto prior_it = ctx.prior_bids.find(r.vehicle);
    auto check = validate_bid(bids[i].value, prior_it == ctx.prior_bids.end()
                                                 ? std::nullopt
                                                 : std::optional<Money>(prior_it->second));
    if (!check.accepted) {
      reject(i, RejectReason::BidViolation, d, check.violation);
      continue;
    }
    ctx.prior_bids[r.vehicle] = bids[i].value;
    if (!ctx.reserve.empty() && bids[i].value < ctx.reserve[static_cast<std::size_t>(r.approach)]) {
      reject(i, RejectReason::BelowReserve, d);
      continue;
    }
    if (auto old = ctx.table.remove(r.vehicle)) out.withdrawn.push_back(std::move(*old));
    tiles[i] = ctx.geometry.trajectory_tiles(ctx.geometry.movement(r.approach, r.lane, r.turn), r.t_a, r.v_a);
    // Confirmed bookings are never reallocated.
    if (ctx.table.conflicts(tiles[i], r.vehicle)) {
      reject(i, RejectReason::Conflict, d);
      rejected_updates.push_back({r.approach, r.lane, d});
      continue;
    }
    contenders.push_back(i);
  }

  std::vector<WdpBid> wdp_bids;
  wdp_bids.reserve(contenders.size());
  for (auto i : contenders) {
    wdp_bids.push_back({bids[i].request.vehicle.value, bids[i].value, isect::to_items(tiles[i])});
  }
  BidSet set(std::move(wdp_bids));
  out.stats.contested = set.size();
  out.stats.upper_bound = set.upper_bound();
  WinnerSet winners;
  if (!set.empty()) {
    if (params.wall_clock) {
      winners = wdp_stochastic_timed(set, params.wall_seconds, params.wdp, rng);
    } else {
      StochasticParams p = params.wdp;
      if (set.size() <= params.early_stop_cap) p.known_optimum = wdp_exact_value(set, params.early_stop_cap);
      winners = wdp_stochastic(set, p, rng);
    }
  }
  out.stats.winners = winners.members.size();
  out.stats.value = winners.value;

  std::vector<char> won(set.size(), 0);
  for (auto m : winners.members) won[m] = 1;
  std::vector<std::pair<int, int>> confirmed_lanes;
  for (std::size_t k = 0; k < contenders.size(); ++k) {
    auto i = contenders[k];
    const auto& r = bids[i].request;
    const double d = isect::reservation_distance(r, bids[i].sent.value_or(now));
    if (won[k]) {
      out.replies[i] = Confirmation{r.vehicle, r.t_a, r.v_a, tiles[i], bids[i].value};
      ctx.table.book(isect::Reservation{r, std::move(tiles[i]), bids[i].value});
      confirmed_lanes.emplace_back(r.approach, r.lane);
    } else {
      reject(i, RejectReason::LostAuction, d);
      rejected_updates.push_back({r.approach, r.lane, d});
    }
  }
  // A lane with both winners and losers keeps the losers' bound.
  for (auto [a, l] : confirmed_lanes) ctx.filter.confirm(a, l);
  for (const auto& u : rejected_updates) ctx.filter.reject(u.approach, u.lane, u.d);
  return out;
}

AuctionManager::AuctionManager(const isect::IntersectionGeometry& geometry, isect::ReservationTable& table,
                               isect::DistanceFilter& filter, AuctionParams params, std::uint64_t seed)
    : geometry_(geometry), table_(table), filter_(filter), params_(params), seed_(seed) {
  if (params_.round_ticks < 2) throw ConfigError("auction rounds need at least two ticks");
}

void AuctionManager::submit(const Bid& bid) { queue_.push_back(bid); }

bool AuctionManager::pending(VehicleId v) const {
  auto mine = [&](const auto& x) { return x.request.vehicle == v; };
  if (std::any_of(queue_.begin(), queue_.end(), mine)) return true;
  return std::any_of(outbox_.begin(), outbox_.end(), [&](const Announcement& a) { return mine(a.bid); });
}

void AuctionManager::withdraw(VehicleId v) {
  std::erase_if(queue_, [&](const Bid& b) { return b.request.vehicle == v; });
}

AuctionManager::Step AuctionManager::step(std::int64_t tick, std::span<const Money> reserve) {
  Step out;
  while (!outbox_.empty() && outbox_.front().tick <= tick) {
    out.delivered.emplace_back(std::move(outbox_.front().bid), std::move(outbox_.front().reply));
    outbox_.pop_front();
  }
  if (tick % params_.round_ticks != 0 || queue_.empty()) return out;
  std::vector<Bid> round;
  round.swap(queue_);
  const double now = static_cast<double>(tick) * geometry_.tick();
  const double announce = now + geometry_.tick();
  RngEngine rng = make_stream(seed_, "wdp", rounds_++);
  RoundContext ctx{geometry_, table_, filter_, prior_bids_, reserve};
  auto result = run_auction_round(round, ctx, now, announce, params_, rng);
  for (std::size_t i = 0; i < round.size(); ++i) {
    outbox_.push_back({tick + 1, round[i], std::move(result.replies[i])});
  }
  out.withdrawn = std::move(result.withdrawn);
  out.round = result.stats;
  return out;
}

}  // namespace intersim::auction
