#pragma once

#include "intersim/roadnet/network.hpp"

namespace intersim::roadnet {

/// Four-arm intersection "C" with arms N, E, S, W; links "<arm>_in" and "<arm>_out".
ScenarioDocument single_intersection_document(int lanes, double approach_m, double vmax_mps = 50.0 / 3.6);

/// 4x4 grid of single-lane two-way 500 m links (nodes G<row><col>) with boundary zones
/// W<row>, E<row>, N<col>, S<col>, two heavy crossing flows and light background flows.
ScenarioDocument grid_document();

}  // namespace intersim::roadnet
