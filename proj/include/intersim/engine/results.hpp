#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "intersim/engine/engine.hpp"

namespace intersim::engine {

inline constexpr const char* kVersion = "0.1.0";

/// Deterministic run summary: configuration echo, seed, counts, partial flag. No timestamps.
nlohmann::json manifest(const RunResults& r);

/// Writes vehicles.csv, links.csv, intersections.csv, prices.csv, auctions.csv,
/// moving_average.csv, manifest.json and, when messages were logged, messages.log into `dir`.
void write_results(const RunResults& r, const std::filesystem::path& dir);

/// Output root: INTERSIM_OUT when set, else "out".
std::filesystem::path default_output_root();

}  // namespace intersim::engine
