#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmar/models.hpp"
#include "qmar/srar.hpp"

namespace qmar::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Name of the variable that sets the default worker count.
inline constexpr const char* kJobsEnv = "QMAR_JOBS";

std::string_view version() noexcept;

enum class Transform { none, annualized_log_diff };
std::string_view to_string(Transform t) noexcept;
Transform parse_transform(std::string_view name);

struct DatasetSpec {
  std::string path;
  std::string column = "value";  // header name, or a 0-based index when no header matches
  Transform transform = Transform::none;
  std::string frequency;  // free text, carried into reports
};

/// One numeric column of a comma-separated file with a header row. Errors
/// carry the 1-based file row (header = row 1).
struct Column {
  std::vector<double> values;
  std::vector<std::size_t> rows;
  std::string name;
};
Column read_column(std::istream& in, const std::string& column);

/// annualized_log_diff: 400 (ln P_t - ln P_{t-1}), first point dropped.
std::vector<double> apply_transform(const Column& column, Transform transform);

std::vector<double> ingest(const DatasetSpec& dataset);

/// "%.17g": round-trips exactly through ingest.
std::string format_number(double v);
void write_series_csv(std::ostream& out, std::span<const double> series);

struct TableCell {
  std::string label;  // "0.10" ... or "aggregate"
  std::optional<double> tau;
  Verdict winner = Verdict::tie;
  std::string model;  // MAR(p,0), MAR(0,p) or tie
};

struct Identification {
  std::size_t p = 1;
  std::optional<OrderSelection> order;  // set when p was selected by HQ
  SelectionReport report;
  std::vector<TableCell> cells;
  std::optional<std::vector<TableCell>> restricted_cells;
};

/// Quantile levels reported as identification-table cells.
std::vector<double> table_taus();

/// p from HQ (p_max) unless given; 5 per-quantile cells plus the aggregate.
Identification run_identification(std::span<const double> series, std::optional<std::size_t> p,
                                  std::span<const double> grid, bool include_restricted, std::size_t p_max = 8,
                                  AggregateMethod method = AggregateMethod::grid_mean);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qmar::app
