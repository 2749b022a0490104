#pragma once

// CSV output: one "# schema:" comment line, a header row, then rows. Numbers
// are written as %.16e (17 significant digits), so a rerun is byte-identical.

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "switchlab/errors.hpp"
#include "switchlab/simulator.hpp"

namespace switchlab::io {

inline constexpr int kCsvSchemaVersion = 1;

[[nodiscard]] inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

using Cell = std::variant<double, long long, std::string>;

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::string_view schema, std::vector<std::string> columns)
      : os_(os), width_(columns.size()) {
    os_ << "# schema: switchlab." << schema << " v" << kCsvSchemaVersion << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << '\n';
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != width_) throw DimensionMismatch("csv row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os_ << format_number(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              os_ << v;
            } else {
              // commas and quotes would break the column layout
              for (char c : v) os_ << (c == ',' || c == '"' || c == '\n' ? ';' : c);
            }
          },
          cells[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t width_;
};

/// Columns t, x1..xd, mode, log_radius, theta_lift.
inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  const std::size_t d = rec.samples.empty() ? 2 : rec.samples.front().x.size();
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < d; ++i) cols.push_back("x" + std::to_string(i + 1));
  cols.insert(cols.end(), {"mode", "log_radius", "theta_lift"});
  CsvWriter w(os, "trajectory", cols);
  for (const auto& s : rec.samples) {
    std::vector<Cell> cells{s.t};
    for (double x : s.x) cells.emplace_back(x);
    cells.emplace_back(static_cast<long long>(s.mode));
    cells.emplace_back(s.log_radius);
    cells.emplace_back(s.theta);
    w.row(cells);
  }
}

/// Single-column sample buffer.
inline void write_samples_csv(std::ostream& os, std::string_view schema, std::string_view column,
                              const std::vector<double>& v) {
  CsvWriter w(os, schema, {std::string(column)});
  for (double x : v) w.row({x});
}

}  // namespace switchlab::io
