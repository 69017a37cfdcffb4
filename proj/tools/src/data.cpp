#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "app.hpp"
#include "qmar/error.hpp"

namespace qmar::app {

std::string_view to_string(Transform t) noexcept {
  return t == Transform::none ? "none" : "annualized_log_diff";
}

Transform parse_transform(std::string_view name) {
  if (name == "none") return Transform::none;
  if (name == "annualized_log_diff") return Transform::annualized_log_diff;
  throw ConfigError("transform must be 'none' or 'annualized_log_diff', got '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

Column read_column(std::istream& in, const std::string& column) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw DataError("input is empty; expected a header row", 1);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line);
  std::size_t index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) {
      index = i;
      break;
    }
  if (index == header.size()) {
    std::size_t parsed = 0;
    const auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), parsed);
    if (ec != std::errc() || ptr != column.data() + column.size() || parsed >= header.size())
      throw DataError("column '" + column + "' not found in header", 1);
    index = parsed;
  }

  Column out;
  out.name = header[index];
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto fields = split(line);
    if (index >= fields.size())
      throw DataError("row " + std::to_string(row) + ": missing column '" + out.name + "'", row);
    const std::string& cell = fields[index];
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
      throw DataError("row " + std::to_string(row) + ": cannot parse '" + cell + "' as a finite decimal", row);
    out.values.push_back(v);
    out.rows.push_back(row);
  }
  return out;
}

std::vector<double> apply_transform(const Column& column, Transform transform) {
  if (transform == Transform::none) return column.values;
  std::vector<double> out;
  for (std::size_t i = 0; i < column.values.size(); ++i) {
    if (!(column.values[i] > 0.0))
      throw DataError("row " + std::to_string(column.rows[i]) + ": price " + format_number(column.values[i]) +
                          " is not positive; annualized_log_diff needs P > 0",
                      column.rows[i]);
    if (i > 0) out.push_back(400.0 * (std::log(column.values[i]) - std::log(column.values[i - 1])));
  }
  return out;
}

std::vector<double> ingest(const DatasetSpec& dataset) {
  std::ifstream in(dataset.path);
  if (!in) throw DataError("cannot open input file '" + dataset.path + "'");
  try {
    return apply_transform(read_column(in, dataset.column), dataset.transform);
  } catch (const DataError& e) {
    throw DataError(dataset.path + ": " + e.what(), e.row());
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_series_csv(std::ostream& out, std::span<const double> series) {
  out << "t,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) out << (i + 1) << ',' << format_number(series[i]) << '\n';
}

}  // namespace qmar::app
