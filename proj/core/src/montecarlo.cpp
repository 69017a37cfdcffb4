#include "qmar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include "qmar/error.hpp"
#include "qmar/rng.hpp"

namespace qmar {

Direction true_direction(const Dgp& dgp) {
  if (std::holds_alternative<RegimeSpec>(dgp)) return Direction::noncausal;
  const MarSpec& spec = std::get<MarDgp>(dgp).spec;
  if (spec.r() > 0 && spec.s() == 0) return Direction::causal;
  if (spec.s() > 0 && spec.r() == 0) return Direction::noncausal;
  throw DomainError("selection experiments need a purely causal or purely noncausal DGP");
}

std::vector<double> simulate_dgp(const Dgp& dgp, std::size_t T, std::size_t burn_in, std::uint64_t seed) {
  SimConfig cfg;
  cfg.total_length = T + 2 * burn_in;
  cfg.burn_in = burn_in;
  cfg.seed = seed;
  if (const auto* regime = std::get_if<RegimeSpec>(&dgp)) return simulate_two_regime(*regime, cfg);
  const MarDgp& mar = std::get<MarDgp>(dgp);
  cfg.innovation = mar.innovation;
  return simulate_mar_matrix(mar.spec, cfg);
}

std::vector<double> McConfig::fitted_grid() const {
  std::vector<double> out;
  if (include_endpoints && (grid.empty() || grid.front() > 0.0)) out.push_back(0.0);
  out.insert(out.end(), grid.begin(), grid.end());
  if (include_endpoints && (grid.empty() || grid.back() < 1.0)) out.push_back(1.0);
  return out;
}

void McConfig::validate() const {
  if (n_reps < 1) throw DomainError("n_reps must be at least 1");
  if (p_fit < 1) throw DomainError("p_fit must be at least 1");
  if (T <= 2 * p_fit + 2) throw DomainError("T is too small for p_fit");
  validate_grid(fitted_grid());
  if (std::none_of(grid.begin(), grid.end(), [](double t) { return t > 0.0 && t < 1.0; }))
    throw DomainError("grid needs at least one point inside (0,1)");
  if (const auto* regime = std::get_if<RegimeSpec>(&dgp)) {
    regime->validate();
  } else {
    const MarDgp& mar = std::get<MarDgp>(dgp);
    mar.spec.validate();
    mar.innovation.validate();
  }
  true_direction(dgp);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe(const DistributionSpec& d) {
  return std::string(to_string(d.kind)) + "," + num(d.nu) + "," + num(d.gamma) + "," + num(d.mu) + "," +
         num(d.sigma) + "," + (d.demeaned ? "1" : "0");
}

std::string describe(const McConfig& cfg) {
  std::ostringstream os;
  os << "reps=" << cfg.n_reps << " T=" << cfg.T << " p=" << cfg.p_fit << " seed=" << cfg.seed
     << " burn_in=" << cfg.burn_in << " method=" << to_string(cfg.method)
     << " restricted=" << cfg.include_restricted << " endpoints=" << cfg.include_endpoints << " grid=";
  for (double t : cfg.grid) os << num(t) << ';';
  if (const auto* regime = std::get_if<RegimeSpec>(&cfg.dgp)) {
    os << " regime=" << num(regime->tau_star) << ',' << num(regime->beta1) << ',' << num(regime->beta2) << ','
       << describe(regime->innovation_quantile);
  } else {
    const MarDgp& mar = std::get<MarDgp>(cfg.dgp);
    os << " mar=";
    for (double v : mar.spec.pi) os << num(v) << ';';
    os << '|';
    for (double v : mar.spec.phi) os << num(v) << ';';
    os << '|' << num(mar.spec.intercept) << ',' << describe(mar.innovation);
  }
  return os.str();
}

char code(Verdict v) {
  switch (v) {
    case Verdict::causal: return 'c';
    case Verdict::noncausal: return 'n';
    case Verdict::tie: break;
  }
  return 't';
}

std::optional<Verdict> decode(char c) {
  if (c == 'c') return Verdict::causal;
  if (c == 'n') return Verdict::noncausal;
  if (c == 't') return Verdict::tie;
  return std::nullopt;
}

// One replicate: verdicts per grid point followed by the aggregate verdict.
struct Record {
  bool done = false;
  bool ok = false;
  std::vector<Verdict> unrestricted;
  bool restricted_ok = false;
  std::vector<Verdict> restricted;
};

std::vector<Verdict> verdicts(const SelectionBlock& block) {
  std::vector<Verdict> out = block.per_tau_winner;
  out.push_back(block.aggregate_winner);
  return out;
}

std::string encode(const std::vector<Verdict>& v) {
  std::string s;
  for (Verdict x : v) s += code(x);
  return s;
}

bool parse_verdicts(const std::string& text, std::size_t width, std::vector<Verdict>& out) {
  if (text.size() != width) return false;
  out.clear();
  for (char c : text) {
    const auto v = decode(c);
    if (!v) return false;
    out.push_back(*v);
  }
  return true;
}

constexpr const char* kCheckpointHeader = "# qmar checkpoint v1 ";

void load_checkpoint(const std::string& path, const std::string& fingerprint, std::vector<Record>& records,
                     std::size_t width) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  if (!std::getline(in, line)) return;
  if (line != kCheckpointHeader + fingerprint)
    throw ConfigError("checkpoint '" + path + "' was written by a different configuration");
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::size_t index = 0;
    std::string status, u, r;
    if (!(is >> index >> status >> u >> r) || index >= records.size()) continue;  // torn tail line
    Record rec;
    rec.done = true;
    if (status == "ok") {
      rec.ok = true;
      if (!parse_verdicts(u, width, rec.unrestricted)) continue;
      rec.restricted_ok = r != "-";
      if (rec.restricted_ok && !parse_verdicts(r, width, rec.restricted)) continue;
    } else if (status != "failed") {
      continue;
    }
    records[index] = std::move(rec);
  }
}

FrequencyCell make_cell(double tau, std::size_t correct, std::size_t ties, std::size_t total) {
  FrequencyCell cell;
  cell.tau = tau;
  cell.correct = correct;
  cell.ties = ties;
  cell.total = total;
  if (total > 0) {
    cell.frequency = static_cast<double>(correct) / static_cast<double>(total);
    cell.standard_error = std::sqrt(cell.frequency * (1.0 - cell.frequency) / static_cast<double>(total));
  }
  return cell;
}

FrequencyBlock tabulate(const std::vector<Record>& records, const std::vector<double>& grid, Verdict truth,
                        bool restricted) {
  const std::size_t width = grid.size() + 1;
  std::vector<std::size_t> correct(width, 0), ties(width, 0);
  std::size_t total = 0;
  FrequencyBlock block;
  for (const Record& rec : records) {
    const bool ok = restricted ? rec.ok && rec.restricted_ok : rec.ok;
    if (!ok) {
      ++block.failed;
      continue;
    }
    ++total;
    const auto& v = restricted ? rec.restricted : rec.unrestricted;
    for (std::size_t j = 0; j < width; ++j) {
      if (v[j] == truth) ++correct[j];
      if (v[j] == Verdict::tie) ++ties[j];
    }
  }
  for (std::size_t j = 0; j < grid.size(); ++j) block.per_tau.push_back(make_cell(grid[j], correct[j], ties[j], total));
  block.aggregate = make_cell(0.0, correct[grid.size()], ties[grid.size()], total);
  return block;
}

bool over_budget(std::size_t failed, std::size_t n) { return failed > 0 && failed * 100 >= n; }

}  // namespace

FrequencyTable run_selection_frequencies(const McConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = cfg.fitted_grid();
  const std::size_t width = grid.size() + 1;
  const Direction truth = true_direction(cfg.dgp);
  const Verdict truth_verdict = truth == Direction::causal ? Verdict::causal : Verdict::noncausal;

  std::vector<Record> records(cfg.n_reps);
  const std::string fingerprint = describe(cfg);
  std::ofstream checkpoint;
  std::mutex checkpoint_mutex;
  if (cfg.checkpoint) {
    load_checkpoint(*cfg.checkpoint, fingerprint, records, width);
    const bool fresh = !std::ifstream(*cfg.checkpoint).good();
    checkpoint.open(*cfg.checkpoint, std::ios::app);
    if (!checkpoint) throw ConfigError("cannot open checkpoint '" + *cfg.checkpoint + "'");
    if (fresh) checkpoint << kCheckpointHeader << fingerprint << '\n' << std::flush;
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cfg.n_reps; ++i)
    if (!records[i].done) pending.push_back(i);

  SelectOptions options;
  options.method = cfg.method;

  parallel_for(pending.size(), cfg.parallelism, [&](std::size_t k) {
    const std::size_t i = pending[k];
    Record rec;
    rec.done = true;
    try {
      const std::vector<double> y = simulate_dgp(cfg.dgp, cfg.T, cfg.burn_in, replicate_seed(cfg.seed, i));
      rec.unrestricted = verdicts(compare_directions(y, cfg.p_fit, grid, false, options));
      rec.ok = true;
      if (cfg.include_restricted) {
        try {
          rec.restricted = verdicts(compare_directions(y, cfg.p_fit, grid, true, options));
          rec.restricted_ok = true;
        } catch (const Error&) {
          rec.restricted_ok = false;
        }
      }
    } catch (const StationarityError&) {
      throw;
    } catch (const Error&) {
      rec.ok = false;
    }
    if (checkpoint.is_open()) {
      std::lock_guard lock(checkpoint_mutex);
      checkpoint << i << ' ' << (rec.ok ? "ok" : "failed") << ' ' << (rec.ok ? encode(rec.unrestricted) : "-")
                 << ' ' << (rec.restricted_ok ? encode(rec.restricted) : "-") << '\n'
                 << std::flush;
    }
    records[i] = std::move(rec);
  });

  FrequencyTable table;
  table.truth = truth;
  table.n_reps = cfg.n_reps;
  table.T = cfg.T;
  table.seed = cfg.seed;
  table.grid = grid;
  table.unrestricted = tabulate(records, grid, truth_verdict, false);
  if (over_budget(table.unrestricted.failed, cfg.n_reps))
    throw NumericalError(std::to_string(table.unrestricted.failed) + " of " + std::to_string(cfg.n_reps) +
                         " replicates failed (budget is below 1%)");
  if (cfg.include_restricted) {
    table.restricted = tabulate(records, grid, truth_verdict, true);
    if (over_budget(table.restricted->failed, cfg.n_reps))
      throw NumericalError(std::to_string(table.restricted->failed) + " of " + std::to_string(cfg.n_reps) +
                           " restricted replicates failed (budget is below 1%)");
  }
  return table;
}

void BindingConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0,1]");
  if (coefficients.empty()) throw DomainError("coefficient grid is empty");
  for (double c : coefficients)
    if (!(c > -1.0 && c < 1.0)) throw DomainError("binding coefficients must lie in (-1,1)");
  if (n_reps < 2) throw DomainError("n_reps must be at least 2");
  if (T < 5) throw DomainError("T must be at least 5");
  if (!(dispersion_threshold > 0.0)) throw DomainError("dispersion threshold must be positive");
  innovation.validate();
}

BindingGrid run_binding_function(const BindingConfig& cfg) {
  cfg.validate();
  const std::size_t cells = cfg.coefficients.size();
  std::vector<double> estimate(cells * cfg.n_reps, std::numeric_limits<double>::quiet_NaN());
  const ModelSpec model{Direction::causal, 1, false};

  parallel_for(cells * cfg.n_reps, cfg.parallelism, [&](std::size_t job) {
    const std::size_t cell = job / cfg.n_reps;
    const std::size_t rep = job % cfg.n_reps;
    MarDgp dgp;
    if (cfg.coefficients[cell] != 0.0) dgp.spec.phi = {cfg.coefficients[cell]};
    dgp.innovation = cfg.innovation;
    try {
      std::vector<double> y;
      if (dgp.spec.phi.empty()) {
        y = sample(cfg.innovation, cfg.T, replicate_seed(cfg.seed, rep));
      } else {
        y = simulate_dgp(dgp, cfg.T, cfg.burn_in, replicate_seed(cfg.seed, rep));
      }
      estimate[job] = fit_qar(y, model, cfg.tau).theta(1);
    } catch (const StationarityError&) {
      throw;
    } catch (const Error&) {
    }
  });

  BindingGrid grid;
  grid.tau = cfg.tau;
  for (std::size_t c = 0; c < cells; ++c) {
    BindingCell cell;
    cell.coefficient = cfg.coefficients[c];
    double sum = 0.0;
    for (std::size_t r = 0; r < cfg.n_reps; ++r) {
      const double v = estimate[c * cfg.n_reps + r];
      if (std::isnan(v)) {
        ++cell.failed;
        continue;
      }
      sum += v;
      ++cell.n_ok;
    }
    if (cell.n_ok >= 2) {
      cell.mean = sum / static_cast<double>(cell.n_ok);
      double ss = 0.0;
      for (std::size_t r = 0; r < cfg.n_reps; ++r) {
        const double v = estimate[c * cfg.n_reps + r];
        if (!std::isnan(v)) ss += (v - cell.mean) * (v - cell.mean);
      }
      cell.std_dev = std::sqrt(ss / static_cast<double>(cell.n_ok - 1));
      cell.standard_error = cell.std_dev / std::sqrt(static_cast<double>(cell.n_ok));
    }
    cell.non_convergent = cell.n_ok < 2 || !(cell.std_dev <= cfg.dispersion_threshold) ||
                          over_budget(cell.failed, cfg.n_reps);
    grid.cells.push_back(cell);
  }
  return grid;
}

}  // namespace qmar
