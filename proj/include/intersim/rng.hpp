#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace intersim {

using RngEngine = std::mt19937_64;

/// Derives an independent, reproducible stream from a master seed and a stream name.
/// The same (seed, name, index) triple always yields the same engine state.
RngEngine make_stream(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace intersim
