#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "intersim/rng.hpp"
#include "intersim/types.hpp"

namespace intersim::auction {

/// Winner-determination view of one bid: an id, a value and a sorted item bundle.
struct WdpBid {
  std::uint64_t id = 0;
  Money value = 0.0;
  std::vector<std::uint64_t> items;
};

/// Bids of one round with the item index that yields neighbourhoods.
class BidSet {
 public:
  BidSet() = default;
  /// Throws std::invalid_argument on duplicate ids, negative values or empty bundles.
  explicit BidSet(std::vector<WdpBid> bids);

  std::size_t size() const { return bids_.size(); }
  bool empty() const { return bids_.empty(); }
  const WdpBid& operator[](std::size_t i) const { return bids_[i]; }
  const std::vector<WdpBid>& bids() const { return bids_; }
  /// Bids sharing at least one item with bid i, ascending, excluding i.
  const std::vector<std::uint32_t>& neighbours(std::size_t i) const { return neighbours_[i]; }
  bool conflict(std::size_t i, std::size_t j) const;
  /// Greedy clique-cover upper bound on any conflict-free subset's value.
  Money upper_bound() const { return upper_bound_; }

 private:
  std::vector<WdpBid> bids_;
  std::vector<std::vector<std::uint32_t>> neighbours_;
  Money upper_bound_ = 0.0;
};

struct WinnerSet {
  std::vector<std::uint32_t> members;  // indices into the bid set, ascending
  Money value = 0.0;
  std::uint64_t passes = 0;  // outer passes actually run
};

/// How "highest" is judged among bids outside the candidate set.
enum class Ranking {
  Value,    // raw bid value
  NetGain,  // candidate-set value after inserting the bid and evicting its neighbours
};

struct StochasticParams {
  std::uint64_t passes = 1;  // outer passes of |B| steps each
  double wp = 0.15;
  double np = 0.5;
  Ranking ranking = Ranking::NetGain;
  /// Stop as soon as the best set reaches this value; the result is unchanged since
  /// only strictly better sets replace the best one.
  std::optional<Money> known_optimum;
};

/// Stochastic local search over conflict-free subsets; returns the best set seen.
WinnerSet wdp_stochastic(const BidSet& bids, const StochasticParams& params, RngEngine& rng);

/// Same search driven by wall-clock time instead of a pass count.
WinnerSet wdp_stochastic_timed(const BidSet& bids, double seconds, const StochasticParams& params, RngEngine& rng);

class OracleCapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Maximum-value conflict-free subset by branch and bound. Among optimal subsets the one
/// preferring lower bid ids (include-first in ascending id order) is returned.
WinnerSet wdp_exact(const BidSet& bids, std::size_t cap = 24);
/// Optimal value only; skips the tie-breaking pass.
Money wdp_exact_value(const BidSet& bids, std::size_t cap = 24);
/// Optimal value if the search finishes within `node_limit` branch nodes (at most 256 bids).
std::optional<Money> wdp_exact_value_bounded(const BidSet& bids, std::uint64_t node_limit);

bool pairwise_disjoint(const BidSet& bids, const WinnerSet& w);

}  // namespace intersim::auction
