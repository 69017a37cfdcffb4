#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qmar/distributions.hpp"
#include "qmar/models.hpp"
#include "qmar/simulate.hpp"
#include "qmar/srar.hpp"

namespace qmar {

struct MarDgp {
  MarSpec spec;
  DistributionSpec innovation;
};
using Dgp = std::variant<MarDgp, RegimeSpec>;

/// Purely causal MAR(r,0) -> causal, purely noncausal MAR(0,s) and the
/// two-regime process -> noncausal. Mixed specs throw DomainError.
Direction true_direction(const Dgp& dgp);

/// Draws one retained path of length T for replicate seed `seed`.
std::vector<double> simulate_dgp(const Dgp& dgp, std::size_t T, std::size_t burn_in, std::uint64_t seed);

struct McConfig {
  std::size_t n_reps = 2000;
  std::size_t T = 200;
  Dgp dgp = MarDgp{};
  std::size_t p_fit = 1;
  std::vector<double> grid = default_grid();
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t burn_in = 200;
  AggregateMethod method = AggregateMethod::grid_mean;
  bool include_restricted = false;
  /// Grid points at 0 or 1 are reported but excluded from the aggregate.
  /// When set, append them to the grid.
  bool include_endpoints = false;
  /// Completed replicates are appended here and reloaded on the next run.
  std::optional<std::string> checkpoint;

  /// Grid actually fitted (with endpoints when requested).
  std::vector<double> fitted_grid() const;
  void validate() const;
};

struct FrequencyCell {
  double tau = 0.0;  // unused for the aggregate cell
  std::size_t correct = 0;
  std::size_t ties = 0;
  std::size_t total = 0;
  double frequency = 0.0;
  double standard_error = 0.0;  // sqrt(f (1 - f) / total)
};

struct FrequencyBlock {
  std::vector<FrequencyCell> per_tau;
  FrequencyCell aggregate;
  std::size_t failed = 0;
};

struct FrequencyTable {
  Direction truth = Direction::causal;
  std::size_t n_reps = 0;
  std::size_t T = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  FrequencyBlock unrestricted;
  std::optional<FrequencyBlock> restricted;
};

/// Replicate i uses replicate_seed(cfg.seed, i). A replicate whose fits throw
/// is counted as failed; NumericalError when failures reach 1% of n_reps.
FrequencyTable run_selection_frequencies(const McConfig& cfg);

struct BindingConfig {
  double tau = 0.5;
  std::vector<double> coefficients;
  DistributionSpec innovation = DistributionSpec::student_t(3.0);
  std::size_t n_reps = 1000;
  std::size_t T = 600;
  std::uint64_t seed = 0;
  std::size_t burn_in = 200;
  std::size_t parallelism = 1;
  /// Cells whose replicate standard deviation exceeds this are non-convergent.
  double dispersion_threshold = 0.25;

  void validate() const;
};

struct BindingCell {
  double coefficient = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  double standard_error = 0.0;
  std::size_t n_ok = 0;
  std::size_t failed = 0;
  bool non_convergent = false;
};

struct BindingGrid {
  double tau = 0.5;
  std::vector<BindingCell> cells;
};

/// For each coefficient c: simulate y_t = c y_{t+1} + eps_t, fit the causal
/// QCAR(1) at tau and average the lag estimate. Replicate i of every cell
/// uses replicate_seed(cfg.seed, i).
BindingGrid run_binding_function(const BindingConfig& cfg);

/// Runs body(i) for i in [0, n) over `workers` threads. The first exception
/// thrown by any call is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body);

}  // namespace qmar

#include "qmar/detail/parallel_for.hpp"
