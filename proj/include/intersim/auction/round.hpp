#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "intersim/auction/wdp.hpp"
#include "intersim/isect/reservation.hpp"

namespace intersim::auction {

/// A reservation request carrying a bid value; the bundle is derived by the manager.
struct Bid {
  isect::ReservationRequest request;
  Money value = 0.0;
  /// When the request was sent; its reservation distance is measured then. Defaults to the round time.
  std::optional<double> sent;
};

struct BidCheck {
  bool accepted = true;
  std::string violation;
};

/// A resubmitted bid must not be worth less than the one it replaces.
BidCheck validate_bid(Money value, std::optional<Money> prior);

struct AuctionParams {
  StochasticParams wdp;
  bool wall_clock = false;
  double wall_seconds = 1.0;
  /// Rounds at or below this size first compute the exact optimum so the search can stop early.
  std::size_t early_stop_cap = 32;
  int round_ticks = 2;
};

struct RoundStats {
  std::size_t submitted = 0;
  std::size_t contested = 0;  // bids that reached winner determination
  std::size_t winners = 0;
  Money value = 0.0;
  Money upper_bound = 0.0;
};

struct RoundResult {
  std::vector<isect::Reply> replies;  // one per submitted bid, in input order
  std::vector<isect::Reservation> withdrawn;
  RoundStats stats;
};

struct RoundContext {
  const isect::IntersectionGeometry& geometry;
  isect::ReservationTable& table;
  isect::DistanceFilter& filter;
  /// Last accepted bid value per vehicle; updated by the round.
  std::unordered_map<VehicleId, Money>& prior_bids;
  /// Reserve price per approach; empty when there is none.
  std::span<const Money> reserve = {};
};

/// One auction round at time `now`; replies become visible at `announce`.
/// Bids whose arrival is not after `announce` are stale.
RoundResult run_auction_round(std::span<const Bid> bids, RoundContext ctx, double now, double announce,
                              const AuctionParams& params, RngEngine& rng);

/// Collects bids, clears a round every `round_ticks` ticks and announces one tick later.
/// Bids arriving while a round is being cleared wait for the next round.
class AuctionManager {
 public:
  AuctionManager(const isect::IntersectionGeometry& geometry, isect::ReservationTable& table,
                 isect::DistanceFilter& filter, AuctionParams params, std::uint64_t seed);

  void submit(const Bid& bid);
  bool pending(VehicleId v) const;
  /// Drops a queued or undelivered bid of `v`, if any.
  void withdraw(VehicleId v);
  /// Forgets the bid history of a vehicle that has left.
  void forget(VehicleId v) { prior_bids_.erase(v); }

  struct Step {
    std::vector<std::pair<Bid, isect::Reply>> delivered;
    std::vector<isect::Reservation> withdrawn;
    std::optional<RoundStats> round;
  };
  /// Advances to tick `tick` (time tick * tick length); clears a round when due.
  Step step(std::int64_t tick, std::span<const Money> reserve = {});

 private:
  const isect::IntersectionGeometry& geometry_;
  isect::ReservationTable& table_;
  isect::DistanceFilter& filter_;
  AuctionParams params_;
  std::uint64_t seed_;
  std::uint64_t rounds_ = 0;
  std::vector<Bid> queue_;
  struct Announcement {
    std::int64_t tick;
    Bid bid;
    isect::Reply reply;
  };
  std::deque<Announcement> outbox_;
  std::unordered_map<VehicleId, Money> prior_bids_;
};

}  // namespace intersim::auction
