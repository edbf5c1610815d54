#include "intersim/cli/table.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace intersim::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t find_column(const std::vector<std::string>& header, std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double parse(const std::string& s) {
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

}  // namespace

CsvTable CsvTable::read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": missing header");
  t.header_ = split(line);
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header_.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": expected " +
                               std::to_string(t.header_.size()) + " fields");
    }
    t.rows_.push_back(std::move(row));
  }
  return t;
}

std::size_t CsvTable::column(std::string_view name) const { return find_column(header_, name); }

double CsvTable::num(std::size_t row, std::size_t col) const { return parse(rows_.at(row).at(col)); }

std::size_t SummaryTable::column(std::string_view col) const { return find_column(header, col); }

double SummaryTable::num(std::size_t row, std::string_view col) const { return parse(rows.at(row).at(column(col))); }

void SummaryTable::write_csv(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / (name + ".csv"));
  if (!os) throw std::runtime_error("cannot write " + (dir / (name + ".csv")).string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void SummaryTable::print(std::ostream& os) const {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  os << "== " << name << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << cells[i];
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace intersim::cli
