#include "intersim/auction/wdp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace intersim::auction {

namespace {

double tolerance(Money scale) { return 1e-9 * std::max<Money>(1.0, scale); }

// Fixed-width bit set with fast first-bit search for the branch and bound.
constexpr std::size_t kMaxOracleBids = 256;
struct Bits {
  std::array<std::uint64_t, kMaxOracleBids / 64> w{};

  void set(std::size_t i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { w[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool any() const {
    for (auto x : w) {
      if (x) return true;
    }
    return false;
  }
  std::size_t first() const {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k]) return k * 64 + static_cast<std::size_t>(std::countr_zero(w[k]));
    }
    return kMaxOracleBids;
  }
  Bits operator&(const Bits& o) const {
    Bits r;
    for (std::size_t k = 0; k < w.size(); ++k) r.w[k] = w[k] & o.w[k];
    return r;
  }
  Bits minus(const Bits& o) const {
    Bits r;
    for (std::size_t k = 0; k < w.size(); ++k) r.w[k] = w[k] & ~o.w[k];
    return r;
  }
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < w.size(); ++k) {
      for (auto x = w[k]; x; x &= x - 1) f(k * 64 + static_cast<std::size_t>(std::countr_zero(x)));
    }
  }
};

// Branch and bound over bids renumbered by descending value (ties: ascending id).
class Oracle {
 public:
  explicit Oracle(const BidSet& bids, std::size_t cap) : n_(bids.size()) {
    if (n_ > cap || n_ > kMaxOracleBids) {
      throw OracleCapExceeded("exact oracle limited to " + std::to_string(std::min(cap, kMaxOracleBids)) +
                              " bids, got " + std::to_string(n_));
    }
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0u);
    std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (bids[a].value != bids[b].value) return bids[a].value > bids[b].value;
      return bids[a].id < bids[b].id;
    });
    std::vector<std::uint32_t> pos(n_);
    for (std::uint32_t k = 0; k < n_; ++k) pos[order_[k]] = k;
    value_.resize(n_);
    id_.resize(n_);
    adj_.resize(n_);
    for (std::uint32_t k = 0; k < n_; ++k) {
      value_[k] = bids[order_[k]].value;
      id_[k] = bids[order_[k]].id;
      for (auto j : bids.neighbours(order_[k])) adj_[k].set(pos[j]);
    }
    for (std::size_t k = 0; k < n_; ++k) all_.set(k);
  }

  Money optimum() {
    best_ = 0.0;
    expand(all_, 0.0);
    return best_;
  }

  std::optional<Money> optimum_within(std::uint64_t node_limit) {
    node_limit_ = node_limit;
    Money v = optimum();
    if (nodes_ > node_limit_) return std::nullopt;
    return v;
  }

  WinnerSet tie_broken(Money opt) {
    opt_ = opt;
    found_ = false;
    chosen_.clear();
    search(all_, 0.0);
    WinnerSet w;
    for (auto k : result_) w.members.push_back(order_[k]);
    std::sort(w.members.begin(), w.members.end());
    for (auto k : result_) w.value += value_[k];
    return w;
  }

 private:
  Money bound(Bits rest) const {
    Money b = 0.0;
    while (rest.any()) {
      auto v = rest.first();
      b += value_[v];
      rest.reset(v);
      Bits common = rest & adj_[v];
      while (common.any()) {
        auto u = common.first();
        rest.reset(u);
        common.reset(u);
        common = common & adj_[u];
      }
    }
    return b;
  }

  void expand(const Bits& cand, Money cur) {
    if (++nodes_ > node_limit_) return;
    if (!cand.any()) {
      if (cur > best_ + tolerance(best_)) best_ = cur;
      return;
    }
    if (cur + bound(cand) <= best_ + tolerance(best_)) return;
    auto v = cand.first();
    Bits without = cand;
    without.reset(v);
    expand(without.minus(adj_[v]), cur + value_[v]);
    expand(without, cur);
  }

  void search(const Bits& cand, Money cur) {
    if (found_) return;
    if (!cand.any()) {
      if (cur >= opt_ - tolerance(opt_)) {
        found_ = true;
        result_ = chosen_;
      }
      return;
    }
    if (cur + bound(cand) < opt_ - tolerance(opt_)) return;
    std::size_t v = kMaxOracleBids;
    cand.for_each([&](std::size_t k) {
      if (v == kMaxOracleBids || id_[k] < id_[v]) v = k;
    });
    Bits without = cand;
    without.reset(v);
    chosen_.push_back(static_cast<std::uint32_t>(v));
    search(without.minus(adj_[v]), cur + value_[v]);
    chosen_.pop_back();
    search(without, cur);
  }

  std::size_t n_;
  std::vector<std::uint32_t> order_;
  std::vector<Money> value_;
  std::vector<std::uint64_t> id_;
  std::vector<Bits> adj_;
  Bits all_;
  Money best_ = 0.0;
  std::uint64_t nodes_ = 0;
  std::uint64_t node_limit_ = std::numeric_limits<std::uint64_t>::max();
  Money opt_ = 0.0;
  bool found_ = false;
  std::vector<std::uint32_t> chosen_, result_;
};

// One run of the local search; `keep_going` is polled once per pass.
template <typename KeepGoing>
WinnerSet search(const BidSet& bids, const StochasticParams& params, RngEngine& rng, KeepGoing&& keep_going) {
  const double wp = params.wp, np = params.np;
  WinnerSet best;
  const std::size_t n = bids.size();
  if (n == 0) return best;
  std::vector<char> in_a(n, 0);
  std::vector<std::uint64_t> age(n, 0);
  // Value of candidate-set members that inserting the bid would evict.
  std::vector<Money> loss(n, 0.0);
  const bool by_gain = params.ranking == Ranking::NetGain;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto score = [&](std::uint32_t i) { return by_gain ? bids[i].value - loss[i] : bids[i].value; };
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    Money sa = score(a), sb = score(b);
    if (sa != sb) return sa > sb;
    if (age[a] != age[b]) return age[a] > age[b];
    return bids[a].id < bids[b].id;
  };
  const Money goal = params.known_optimum ? *params.known_optimum : bids.upper_bound();
  auto enter = [&](std::uint32_t i, double sign) {
    if (!by_gain) return;
    for (auto j : bids.neighbours(i)) loss[j] += sign * bids[i].value;
  };

  for (std::uint64_t pass = 0; keep_going(pass); ++pass) {
    best.passes = pass + 1;
    std::fill(in_a.begin(), in_a.end(), 0);
    std::fill(loss.begin(), loss.end(), 0.0);
    std::size_t a_size = 0;
    Money a_value = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      if (a_size == n) break;
      std::uint32_t pick;
      if (unit(rng) < wp) {
        auto k = std::uniform_int_distribution<std::size_t>(0, n - a_size - 1)(rng);
        pick = 0;
        for (std::uint32_t i = 0; i < n; ++i) {
          if (in_a[i]) continue;
          if (k-- == 0) {
            pick = i;
            break;
          }
        }
      } else {
        std::optional<std::uint32_t> hi, second;
        for (std::uint32_t i = 0; i < n; ++i) {
          if (in_a[i]) continue;
          if (!hi || better(i, *hi)) {
            second = hi;
            hi = i;
          } else if (!second || better(i, *second)) {
            second = i;
          }
        }
        pick = *hi;
        if (second && age[*hi] < age[*second] && unit(rng) < np) pick = *second;
      }
      for (auto j : bids.neighbours(pick)) {
        if (in_a[j]) {
          in_a[j] = 0;
          --a_size;
          a_value -= bids[j].value;
          enter(j, -1.0);
        }
      }
      in_a[pick] = 1;
      ++a_size;
      a_value += bids[pick].value;
      enter(pick, +1.0);
      for (auto& x : age) ++x;
      age[pick] = 0;
      if (a_value > best.value + tolerance(best.value)) {
        best.members.clear();
        best.value = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
          if (in_a[i]) {
            best.members.push_back(i);
            best.value += bids[i].value;
          }
        }
        a_value = best.value;
        if (best.value >= goal - tolerance(goal)) {
          best.passes = pass + 1;
          return best;
        }
      }
    }
  }
  return best;
}

}  // namespace

BidSet::BidSet(std::vector<WdpBid> bids) : bids_(std::move(bids)) {
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_item;
  std::unordered_set<std::uint64_t> ids;
  for (std::uint32_t i = 0; i < bids_.size(); ++i) {
    auto& b = bids_[i];
    if (!ids.insert(b.id).second) throw std::invalid_argument("duplicate bid id " + std::to_string(b.id));
    if (!(b.value >= 0)) throw std::invalid_argument("bid value must be non-negative");
    if (b.items.empty()) throw std::invalid_argument("bid bundle must be non-empty");
    std::sort(b.items.begin(), b.items.end());
    b.items.erase(std::unique(b.items.begin(), b.items.end()), b.items.end());
    for (auto item : b.items) by_item[item].push_back(i);
  }
  neighbours_.resize(bids_.size());
  for (auto& [item, holders] : by_item) {
    for (auto a : holders) {
      for (auto b : holders) {
        if (a != b) neighbours_[a].push_back(b);
      }
    }
  }
  for (auto& n : neighbours_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }

  std::vector<std::uint32_t> order(bids_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return bids_[a].value > bids_[b].value; });
  std::vector<char> covered(bids_.size(), 0);
  for (auto v : order) {
    if (covered[v]) continue;
    covered[v] = 1;
    upper_bound_ += bids_[v].value;
    std::vector<std::uint32_t> clique{v};
    for (auto u : order) {
      if (covered[u]) continue;
      bool joins = std::all_of(clique.begin(), clique.end(), [&](auto c) { return conflict(u, c); });
      if (joins) {
        covered[u] = 1;
        clique.push_back(u);
      }
    }
  }
}

bool BidSet::conflict(std::size_t i, std::size_t j) const {
  const auto& n = neighbours_[i];
  return std::binary_search(n.begin(), n.end(), static_cast<std::uint32_t>(j));
}

WinnerSet wdp_stochastic(const BidSet& bids, const StochasticParams& p, RngEngine& rng) {
  if (p.wp < 0 || p.wp > 1 || p.np < 0 || p.np > 1) throw std::invalid_argument("wp and np must lie in [0, 1]");
  if (p.passes == 0) throw std::invalid_argument("budget must be positive");
  return search(bids, p, rng, [&](std::uint64_t pass) { return pass < p.passes; });
}

WinnerSet wdp_stochastic_timed(const BidSet& bids, double seconds, const StochasticParams& p, RngEngine& rng) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(seconds);
  return search(bids, p, rng, [&](std::uint64_t) { return clock::now() < deadline; });
}

WinnerSet wdp_exact(const BidSet& bids, std::size_t cap) {
  Oracle oracle(bids, cap);
  return oracle.tie_broken(oracle.optimum());
}

Money wdp_exact_value(const BidSet& bids, std::size_t cap) {
  Oracle oracle(bids, cap);
  return oracle.optimum();
}

std::optional<Money> wdp_exact_value_bounded(const BidSet& bids, std::uint64_t node_limit) {
  if (bids.size() > kMaxOracleBids) return std::nullopt;
  Oracle oracle(bids, kMaxOracleBids);
  return oracle.optimum_within(node_limit);
}

bool pairwise_disjoint(const BidSet& bids, const WinnerSet& w) {
  for (std::size_t a = 0; a < w.members.size(); ++a) {
    for (std::size_t b = a + 1; b < w.members.size(); ++b) {
      const auto& x = bids[w.members[a]].items;
      const auto& y = bids[w.members[b]].items;
      auto i = x.begin();
      auto j = y.begin();
      while (i != x.end() && j != y.end()) {
        if (*i < *j) {
          ++i;
        } else if (*j < *i) {
          ++j;
        } else {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace intersim::auction
