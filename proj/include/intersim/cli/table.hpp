#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace intersim::cli {

/// A header-row CSV file as written by the engine: comma separated, no quoting.
class CsvTable {
 public:
  /// Throws std::runtime_error if the file is missing or a row has the wrong width.
  static CsvTable read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  /// Throws std::out_of_range for an unknown column.
  std::size_t column(std::string_view name) const;
  const std::string& at(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  double num(std::size_t row, std::size_t col) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// A derived table with a name, written as <name>.csv and printed aligned.
struct SummaryTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  /// Throws std::out_of_range for an unknown column.
  std::size_t column(std::string_view col) const;
  double num(std::size_t row, std::string_view col) const;
  void write_csv(const std::filesystem::path& dir) const;
  void print(std::ostream& os) const;
};

/// Fixed "%.6f" formatting, shared by every stored number.
std::string fmt(double v);

}  // namespace intersim::cli
