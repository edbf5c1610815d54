#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace intersim {

/// Index-like identifier that cannot be mixed up with another identifier kind.
template <typename Tag, typename Rep = std::uint32_t>
struct StrongId {
  Rep value{};

  constexpr StrongId() = default;
  constexpr explicit StrongId(Rep v) : value(v) {}

  friend constexpr auto operator<=>(StrongId, StrongId) = default;
  friend std::ostream& operator<<(std::ostream& os, StrongId id) { return os << id.value; }
};

struct NodeTag {};
struct LinkTag {};
struct VehicleTag {};

using NodeIndex = StrongId<NodeTag>;
using LinkIndex = StrongId<LinkTag>;
using VehicleId = StrongId<VehicleTag>;

// Monetary amounts are expressed in cents.
using Money = double;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kKmhToMps = 1.0 / 3.6;

enum class Turn { Left, Straight, Right };

const char* to_string(Turn turn);
Turn turn_from_string(const std::string& text);

/// Thrown for malformed scenario documents and configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace intersim

template <typename Tag, typename Rep>
struct std::hash<intersim::StrongId<Tag, Rep>> {
  std::size_t operator()(intersim::StrongId<Tag, Rep> id) const noexcept {
    return std::hash<Rep>{}(id.value);
  }
};
