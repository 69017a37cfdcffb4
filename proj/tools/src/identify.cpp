#include <cstdio>
#include <string>

#include "app.hpp"

namespace qmar::app {

std::vector<double> table_taus() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }

namespace {

std::string model_label(Verdict v, std::size_t p) {
  const std::string q = std::to_string(p);
  if (v == Verdict::causal) return "MAR(" + q + ",0)";
  if (v == Verdict::noncausal) return "MAR(0," + q + ")";
  return "tie";
}

std::vector<TableCell> cells_of(const SelectionBlock& at_taus, const SelectionBlock& aggregate,
                                const std::vector<double>& taus, std::size_t p) {
  std::vector<TableCell> cells;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    char label[16];
    std::snprintf(label, sizeof label, "%.2f", taus[i]);
    cells.push_back({label, taus[i], at_taus.per_tau_winner[i], model_label(at_taus.per_tau_winner[i], p)});
  }
  cells.push_back({"aggregate", std::nullopt, aggregate.aggregate_winner, model_label(aggregate.aggregate_winner, p)});
  return cells;
}

}  // namespace

Identification run_identification(std::span<const double> series, std::optional<std::size_t> p,
                                  std::span<const double> grid, bool include_restricted, std::size_t p_max,
                                  AggregateMethod method) {
  Identification out;
  if (p) {
    out.p = *p;
  } else {
    out.order = hannan_quinn(series, p_max);
    out.p = out.order->order;
  }
  SelectOptions options;
  options.method = method;
  options.include_restricted = include_restricted;
  out.report = select_model(series, out.p, grid, options);

  const std::vector<double> taus = table_taus();
  const SelectionBlock cells = compare_directions(series, out.p, taus, false, options);
  out.cells = cells_of(cells, out.report.unrestricted, taus, out.p);
  if (include_restricted) {
    const SelectionBlock rcells = compare_directions(series, out.p, taus, true, options);
    out.restricted_cells = cells_of(rcells, *out.report.restricted, taus, out.p);
  }
  return out;
}

}  // namespace qmar::app
