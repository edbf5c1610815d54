#include "intersim/rng.hpp"

#include "intersim/types.hpp"

namespace intersim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngEngine make_stream(std::uint64_t master_seed, std::string_view name, std::uint64_t index) {
  // FNV-1a over the stream name keeps the mapping stable across platforms.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = splitmix64(master_seed ^ splitmix64(h ^ splitmix64(index)));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(index)};
  return RngEngine(seq);
}

const char* to_string(Turn turn) {
  switch (turn) {
    case Turn::Left:
      return "LEFT";
    case Turn::Straight:
      return "STRAIGHT";
    case Turn::Right:
      return "RIGHT";
  }
  return "?";
}

Turn turn_from_string(const std::string& text) {
  if (text == "LEFT" || text == "left") return Turn::Left;
  if (text == "STRAIGHT" || text == "straight") return Turn::Straight;
  if (text == "RIGHT" || text == "right") return Turn::Right;
  throw ConfigError("unknown turn type '" + text + "'");
}

}  // namespace intersim
