#pragma once

// Numeric result tables with metadata; CSV (17 significant digits) and JSON.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vhmv/config.hpp"
#include "vhmv/errors.hpp"

namespace vhmv {

struct ResultTable {
  std::string name;
  std::string label_column;  // optional leading text column
  std::vector<std::string> labels;
  std::vector<std::string> columns;
  std::vector<double> data;  // row-major
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }
  double at(std::size_t r, std::size_t c) const { return data.at(r * columns.size() + c); }

  std::size_t index(const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == column) return c;
    throw DomainError("no column '" + column + "' in table " + name);
  }

  std::vector<double> column(const std::string& column) const {
    const std::size_t c = index(column);
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
    return out;
  }

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns.size()) throw DomainError("row width does not match the header of " + name);
    if (!label_column.empty()) throw DomainError("table " + name + " needs a label per row");
    data.insert(data.end(), row.begin(), row.end());
  }

  void add_row(const std::string& label, const std::vector<double>& row) {
    if (label_column.empty()) throw DomainError("table " + name + " has no label column");
    if (row.size() != columns.size()) throw DomainError("row width does not match the header of " + name);
    labels.push_back(label);
    data.insert(data.end(), row.begin(), row.end());
  }

  std::string meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    return {};
  }
};

using ResultSet = std::vector<ResultTable>;

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not a number: '" + s + "'");
  return x;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline void check_text(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) throw DomainError("table text may not contain , \" or newlines");
}

}  // namespace detail

inline void write_csv(std::ostream& os, const ResultTable& t) {
  for (const auto& [k, v] : t.metadata) os << "# " << k << ": " << v << '\n';
  bool first = true;
  auto cell = [&](const std::string& s) {
    if (!first) os << ',';
    os << s;
    first = false;
  };
  if (!t.label_column.empty()) cell(t.label_column);
  for (const auto& c : t.columns) {
    detail::check_text(c);
    cell(c);
  }
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    first = true;
    if (!t.label_column.empty()) {
      detail::check_text(t.labels[r]);
      cell(t.labels[r]);
    }
    for (std::size_t c = 0; c < t.columns.size(); ++c) cell(detail::format_double(t.at(r, c)));
    os << '\n';
  }
}

/// Inverse of write_csv. A first header cell not found among `label_columns` is numeric.
inline ResultTable read_csv(std::istream& is, const std::string& name = {},
                            const std::vector<std::string>& label_columns = {"check", "variant"}) {
  ResultTable t;
  t.name = name;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) throw ConfigError("malformed metadata line: " + line);
      t.metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    auto cells = detail::split(line);
    if (!header) {
      header = true;
      if (!cells.empty() && std::find(label_columns.begin(), label_columns.end(), cells[0]) != label_columns.end()) {
        t.label_column = cells[0];
        cells.erase(cells.begin());
      }
      t.columns = cells;
      continue;
    }
    const std::size_t offset = t.label_column.empty() ? 0 : 1;
    if (cells.size() != t.columns.size() + offset) throw ConfigError("row width does not match the header");
    if (offset) t.labels.push_back(cells[0]);
    for (std::size_t c = offset; c < cells.size(); ++c) t.data.push_back(detail::parse_double(cells[c]));
  }
  if (!header) throw ConfigError("table has no header row");
  return t;
}

inline json to_json(const ResultTable& t) {
  json meta = json::object();
  for (const auto& [k, v] : t.metadata) meta[k] = v;
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const double x = t.at(r, c);
      if (std::isfinite(x)) row.push_back(x);
      else row.push_back(nullptr);  // JSON has no NaN or infinity
    }
    rows.push_back(std::move(row));
  }
  json out{{"name", t.name}, {"metadata", meta}, {"columns", t.columns}, {"rows", rows}};
  if (!t.label_column.empty()) {
    out["label_column"] = t.label_column;
    out["labels"] = t.labels;
  }
  return out;
}

inline std::string file_name(const ResultTable& t, OutputFormat f) {
  return t.name + (f == OutputFormat::Json ? ".json" : ".csv");
}

/// Writes each table to dir/<name>.<ext> and returns the paths.
inline std::vector<std::string> write_tables(const ResultSet& tables, const std::string& dir, OutputFormat f) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> paths;
  for (const auto& t : tables) {
    const auto path = (std::filesystem::path(dir) / file_name(t, f)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    if (f == OutputFormat::Json) out << to_json(t).dump(2) << '\n';
    else write_csv(out, t);
    if (!out) throw ConfigError("write failed for " + path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace vhmv
