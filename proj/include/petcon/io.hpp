#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "petcon/analysis.hpp"
#include "petcon/engine.hpp"
#include "petcon/errors.hpp"

namespace petcon {

/// Shortest decimal rendering that round-trips a double exactly
/// (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Trajectory table: one row per breakpoint, columns t, x_1..x_n.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << (i + 1);
  os << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << format_double(traj.states[k](i));
    os << "\n";
  }
}

/// Event log: one row per broadcast, columns agent (1-based), l, t = l*h.
inline void write_events_csv(std::ostream& os, const std::vector<Event>& events, double h) {
  os << "agent,l,t\n";
  for (const auto& e : events)
    os << (e.agent + 1) << "," << e.step << "," << format_double(static_cast<double>(e.step) * h)
       << "\n";
}

/// Storage-function series: columns l, t, V, bound.
inline void write_lyapunov_csv(std::ostream& os, const std::vector<LyapunovSample>& series,
                               double bound) {
  os << "l,t,V,bound\n";
  for (const auto& s : series)
    os << s.step << "," << format_double(s.t) << "," << format_double(s.value) << ","
       << format_double(bound) << "\n";
}

/// A parsed numeric CSV: the header row verbatim plus all-double data rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Parses comma-separated numeric data as written by the writers above.
/// Throws ParseError on empty input, non-numeric cells, or ragged rows.
inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (lineno == 1) {
      table.header = cells;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw ParseError("csv line " + std::to_string(lineno) + ": non-numeric cell '" + c + "'");
      }
      if (used != c.size())
        throw ParseError("csv line " + std::to_string(lineno) + ": non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ParseError("csv: empty input");
  return table;
}

}  // namespace petcon
