#include "intersim/roadnet/presets.hpp"

#include <cmath>

namespace intersim::roadnet {

namespace {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

ScenarioDocument single_intersection_document(int lanes, double approach_m, double vmax_mps) {
  ScenarioDocument doc;
  doc.name = "single-intersection";
  doc.nodes.push_back({"C", 0.0, 0.0});
  const std::pair<const char*, std::pair<double, double>> arms[] = {
      {"N", {0.0, approach_m}}, {"E", {approach_m, 0.0}}, {"S", {0.0, -approach_m}}, {"W", {-approach_m, 0.0}}};
  for (const auto& [id, xy] : arms) doc.nodes.push_back({id, xy.first, xy.second});
  const double vmax = round4(vmax_mps);
  for (const auto& [id, xy] : arms) {
    const std::string arm = id;
    doc.links.push_back({arm + "_in", arm, "C", approach_m, vmax, lanes, approach_m});
    doc.links.push_back({arm + "_out", "C", arm, approach_m, vmax, lanes, approach_m});
  }
  doc.intersections.push_back(GeometrySpec{"C", 0.25, 3.0, 4.0, 2.0, {}});
  for (const auto& o : arms) {
    for (const auto& d : arms) {
      if (o.first != d.first) doc.od.push_back({o.first, d.first, std::nullopt, std::nullopt});
    }
  }
  return doc;
}

ScenarioDocument grid_document() {
  constexpr int n = 4;
  constexpr double spacing = 500.0;
  constexpr double zone = 250.0;
  const double vmax = round4(50.0 / 3.6);
  ScenarioDocument doc;
  doc.name = "grid-4x4";
  doc.model = "meso";
  auto gid = [](int i, int j) { return "G" + std::to_string(i) + std::to_string(j); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) doc.nodes.push_back({gid(i, j), j * spacing, -i * spacing});
  }
  auto add = [&](const std::string& a, const std::string& b, double length) {
    doc.links.push_back({a + "_" + b, a, b, length, vmax, 1, 500.0});
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j + 1 < n) {
        add(gid(i, j), gid(i, j + 1), spacing);
        add(gid(i, j + 1), gid(i, j), spacing);
      }
      if (i + 1 < n) {
        add(gid(i, j), gid(i + 1, j), spacing);
        add(gid(i + 1, j), gid(i, j), spacing);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (auto [side, j, dx] : {std::tuple{"W", 0, -zone}, std::tuple{"E", n - 1, zone}}) {
      std::string z = side + std::to_string(i);
      doc.nodes.push_back({z, j * spacing + dx, -i * spacing});
      add(z, gid(i, j), zone);
      add(gid(i, j), z, zone);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (auto [side, i, dy] : {std::tuple{"N", 0, zone}, std::tuple{"S", n - 1, -zone}}) {
      std::string z = side + std::to_string(j);
      doc.nodes.push_back({z, j * spacing, -i * spacing + dy});
      add(z, gid(i, j), zone);
      add(gid(i, j), z, zone);
    }
  }
  doc.default_geometry = GeometrySpec{"", 5.0, 3.0, 4.0, 2.0, {}};
  doc.od.push_back({"W1", "E2", std::nullopt, 15.0});
  doc.od.push_back({"N1", "S2", std::nullopt, 15.0});
  for (auto [o, d] : {std::pair{"W0", "E3"}, {"E0", "W3"}, {"N3", "S0"}, {"S3", "N0"}, {"W3", "N3"}, {"S0", "E0"}}) {
    doc.od.push_back({o, d, std::nullopt, 0.5});
  }
  return doc;
}

}  // namespace intersim::roadnet
