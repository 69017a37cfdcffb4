#include "app.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmar/distributions.hpp"
#include "qmar/error.hpp"
#include "qmar/montecarlo.hpp"
#include "qmar/rng.hpp"
#include "qmar/simulate.hpp"

#ifndef QMAR_VERSION
#define QMAR_VERSION "0.0.0"
#endif

namespace qmar::app {

std::string_view version() noexcept { return QMAR_VERSION; }

namespace {

using json = nlohmann::ordered_json;

// ---- option groups --------------------------------------------------------

struct DistOpts {
  std::string kind = "gaussian";
  double nu = 3.0;
  double gamma = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
  bool demeaned = false;

  DistributionSpec spec() const {
    DistributionSpec d;
    d.kind = parse_dist_kind(kind);
    d.nu = nu;
    d.gamma = gamma;
    d.mu = mu;
    d.sigma = sigma;
    d.demeaned = demeaned;
    d.validate();
    return d;
  }
};

void add_dist(CLI::App* app, DistOpts& d, const std::string& what) {
  app->add_option("--dist", d.kind, what + " law: gaussian, student_t, cauchy, skewed_t, uniform01")
      ->capture_default_str();
  app->add_option("--nu", d.nu, "degrees of freedom (student_t, skewed_t)")->capture_default_str();
  app->add_option("--gamma", d.gamma, "skewing parameter (skewed_t)")->capture_default_str();
  app->add_option("--mu", d.mu, "location")->capture_default_str();
  app->add_option("--sigma", d.sigma, "scale")->capture_default_str();
  app->add_flag("--demeaned", d.demeaned, "subtract the mean (skewed_t)");
}

json dist_json(const DistOpts& d) {
  return json{{"kind", d.kind}, {"nu", d.nu}, {"gamma", d.gamma}, {"mu", d.mu}, {"sigma", d.sigma},
              {"demeaned", d.demeaned}};
}

struct DataOpts {
  std::string input;
  std::string column = "value";
  std::string transform = "none";
  std::string frequency;

  DatasetSpec spec() const { return {input, column, parse_transform(transform), frequency}; }
};

void add_data(CLI::App* app, DataOpts& d) {
  app->add_option("-i,--input", d.input, "CSV file with a header row")->required();
  app->add_option("--column", d.column, "column name, or 0-based index")->capture_default_str();
  app->add_option("--transform", d.transform, "none or annualized_log_diff")->capture_default_str();
  app->add_option("--frequency", d.frequency, "free-text frequency label");
}

json data_json(const DataOpts& d) {
  return json{{"input", d.input}, {"column", d.column}, {"transform", d.transform}, {"frequency", d.frequency}};
}

std::vector<double> load(const DataOpts& d) { return ingest(d.spec()); }

// ---- reports --------------------------------------------------------------

std::string shortest(double x) {
  char buf[32];
  for (int digits = 1; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string toml_value(const json& v) {
  if (v.is_string()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return shortest(v.get<double>());
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_value(v[i]);
    return s + "]";
  }
  return v.dump();
}

/// Flattens {a: 1, dist: {kind: x}} to `a = 1`, `dist = "x"`, ... using the
/// option names the parser accepts.
void flatten(const json& config, std::string& out) {
  for (const auto& [key, value] : config.items()) {
    if (value.is_null() || (value.is_array() && value.empty())) continue;
    if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) {
        if (v2.is_null() || (v2.is_string() && v2.get<std::string>().empty())) continue;
        const std::string name = k2 == "kind" ? "dist" : k2;
        out += name + " = " + toml_value(v2) + "\n";
      }
      continue;
    }
    out += key + " = " + toml_value(value) + "\n";
  }
}

json solver_conventions() {
  return json{{"algorithm", "exact basis-exchange simplex over observations"},
              {"endpoint_shift", kEndpointShift},
              {"rank_tolerance", kRankTolerance},
              {"tie_relative_threshold", 1e-12},
              {"rng", "counter-based splitmix64, version " + std::to_string(UniformStream::kVersion)},
              {"replicate_seed", "base xor replicate index"}};
}

json envelope(const std::string& command, const json& config, std::optional<std::uint64_t> seed,
              const std::vector<double>& grid) {
  std::string toml = "[" + command + "]\n";
  flatten(config, toml);
  json j;
  j["tool"] = "qmar";
  j["version"] = std::string(version());
  j["command"] = command;
  j["config"] = config;
  j["config_toml"] = toml;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["grid"] = grid;
  j["solver"] = solver_conventions();
  return j;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json fit_json(const QuantileFit& fit) {
  json j;
  j["tau"] = fit.tau;
  j["tau_effective"] = fit.tau_effective;
  j["theta"] = std::vector<double>(fit.theta.data(), fit.theta.data() + fit.theta.size());
  j["srar"] = fit.srar;
  j["n_effective"] = fit.n_effective;
  j["status"] = std::string(to_string(fit.status));
  j["basis_rows"] = fit.basis;
  j["iterations"] = fit.iterations;
  return j;
}

json curve_json(const SrarCurve& c) {
  return json{{"values", c.values}, {"intercepts", c.intercepts}, {"n_effective", c.n_effective}};
}

json block_json(const SelectionBlock& b) {
  json winners = json::array();
  for (Verdict v : b.per_tau_winner) winners.push_back(std::string(to_string(v)));
  json j;
  j["per_tau_winner"] = winners;
  j["aggregate_causal"] = b.aggregate_causal;
  j["aggregate_noncausal"] = b.aggregate_noncausal;
  j["aggregate_winner"] = std::string(to_string(b.aggregate_winner));
  j["causal"] = curve_json(b.causal);
  j["noncausal"] = curve_json(b.noncausal);
  return j;
}

json report_json(const SelectionReport& r) {
  json j;
  j["p"] = r.p;
  j["method"] = std::string(to_string(r.method));
  j["unrestricted"] = block_json(r.unrestricted);
  j["restricted"] = r.restricted ? block_json(*r.restricted) : json(nullptr);
  return j;
}

json order_json(const OrderSelection& o) {
  return json{{"order", o.order}, {"criterion", o.criterion}, {"sigma2", o.sigma2}, {"n_effective", o.n_effective}};
}

std::size_t default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::vector<double> parse_grid(const std::vector<double>& grid) {
  std::vector<double> g = grid.empty() ? default_grid() : grid;
  validate_grid(g);
  return g;
}

// ---- subcommands ----------------------------------------------------------

struct SimulateOpts {
  std::string process = "mar";
  std::vector<double> pi;
  std::vector<double> phi;
  double intercept = 0.0;
  double tau_star = 0.7;
  double beta1 = 0.2;
  double beta2 = 0.8;
  std::size_t length = 200;
  std::size_t burn_in = 200;
  std::uint64_t seed = 0;
  std::string method = "matrix";
  DistOpts dist;
  std::string output;
  std::string report;

  json config() const {
    json j;
    j["process"] = process;
    j["pi"] = pi;
    j["phi"] = phi;
    j["intercept"] = intercept;
    j["tau-star"] = tau_star;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["length"] = length;
    j["burn-in"] = burn_in;
    j["seed"] = seed;
    j["method"] = method;
    j["innovation"] = dist_json(dist);
    return j;
  }
};

void add_process(CLI::App* s, std::string& process, std::vector<double>& pi, std::vector<double>& phi,
                 double& intercept, double& tau_star, double& beta1, double& beta2) {
  s->add_option("--process", process, "mar or two_regime")->capture_default_str();
  s->add_option("--pi", pi, "lag coefficients, comma separated")->delimiter(',');
  s->add_option("--phi", phi, "lead coefficients, comma separated")->delimiter(',');
  s->add_option("--intercept", intercept, "intercept")->capture_default_str();
  s->add_option("--tau-star", tau_star, "two_regime threshold")->capture_default_str();
  s->add_option("--beta1", beta1, "two_regime coefficient below the threshold")->capture_default_str();
  s->add_option("--beta2", beta2, "two_regime coefficient above the threshold")->capture_default_str();
}

Dgp make_dgp(const std::string& process, const std::vector<double>& pi, const std::vector<double>& phi,
             double intercept, double tau_star, double beta1, double beta2, const DistOpts& dist) {
  if (process == "mar") {
    MarDgp dgp{MarSpec{pi, phi, intercept}, dist.spec()};
    dgp.spec.validate();
    return dgp;
  }
  if (process == "two_regime") {
    RegimeSpec regime{tau_star, beta1, beta2, dist.spec()};
    regime.validate();
    return regime;
  }
  throw ConfigError("process must be 'mar' or 'two_regime', got '" + process + "'");
}

int cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  const Dgp dgp = make_dgp(o.process, o.pi, o.phi, o.intercept, o.tau_star, o.beta1, o.beta2, o.dist);
  SimConfig cfg;
  cfg.total_length = o.length + 2 * o.burn_in;
  cfg.burn_in = o.burn_in;
  cfg.seed = o.seed;
  std::vector<double> y;
  if (const auto* regime = std::get_if<RegimeSpec>(&dgp)) {
    y = simulate_two_regime(*regime, cfg);
  } else {
    const auto& mar = std::get<MarDgp>(dgp);
    cfg.innovation = mar.innovation;
    if (o.method == "matrix")
      y = simulate_mar_matrix(mar.spec, cfg);
    else if (o.method == "recursive")
      y = simulate_mar_recursive(mar.spec, cfg);
    else
      throw ConfigError("method must be 'matrix' or 'recursive', got '" + o.method + "'");
  }
  std::ostringstream csv;
  write_series_csv(csv, y);
  emit(o.output, csv.str(), out);
  if (!o.report.empty()) {
    json j = envelope("simulate", o.config(), o.seed, {});
    j["result"] = json{{"length", y.size()}, {"total_length", cfg.total_length}};
    emit(o.report, dump(j), out);
  }
  return kExitOk;
}

struct FitOpts {
  DataOpts data;
  std::string direction = "causal";
  std::size_t p = 1;
  bool restricted = false;
  std::vector<double> taus{0.5};
  bool aml = false;
  std::string output;

  json config() const {
    json j;
    j["data"] = data_json(data);
    j["direction"] = direction;
    j["p"] = p;
    j["restricted"] = restricted;
    j["tau"] = taus;
    j["aml"] = aml;
    return j;
  }
};

int cmd_fit(const FitOpts& o, std::ostream& out) {
  const ModelSpec model{parse_direction(o.direction), o.p, o.restricted};
  model.validate();
  const auto y = load(o.data);
  json fits = json::array();
  for (double tau : o.taus) fits.push_back(fit_json(fit_qar(y, model, tau)));
  json j = envelope("fit", o.config(), std::nullopt, o.taus);
  j["result"]["observations"] = y.size();
  j["result"]["fits"] = fits;
  if (o.aml) {
    const std::size_t r = model.direction == Direction::causal ? o.p : 0;
    const std::size_t s = model.direction == Direction::causal ? 0 : o.p;
    const AmlFit a = fit_aml_t(y, r, s);
    j["result"]["aml"] = json{{"pi", a.params.pi},       {"phi", a.params.phi},
                              {"alpha", a.params.alpha}, {"sigma", a.params.sigma},
                              {"nu", a.params.nu},       {"loglik", a.loglik},
                              {"evaluations", a.evaluations}};
  }
  emit(o.output, dump(j), out);
  return kExitOk;
}

struct OrderOpts {
  DataOpts data;
  std::size_t p_max = 8;
  std::string output;

  json config() const { return json{{"data", data_json(data)}, {"p-max", p_max}}; }
};

int cmd_order(const OrderOpts& o, std::ostream& out) {
  const auto y = load(o.data);
  json j = envelope("order", o.config(), std::nullopt, {});
  j["result"] = order_json(hannan_quinn(y, o.p_max));
  emit(o.output, dump(j), out);
  return kExitOk;
}

struct CurveOpts {
  DataOpts data;
  std::optional<std::size_t> p;
  std::size_t p_max = 8;
  std::vector<double> grid;
  bool restricted = false;
  std::string method = "grid_mean";
  bool aggregate_endpoints = false;
  std::string output;
  std::string report;
  std::string curves;
  std::string name;

  json config() const {
    json j;
    j["data"] = data_json(data);
    j["p"] = p ? json(*p) : json(nullptr);
    j["p-max"] = p_max;
    j["grid"] = parse_grid(grid);
    j["restricted"] = restricted;
    j["method"] = method;
    j["aggregate-endpoints"] = aggregate_endpoints;
    j["name"] = name;
    return j;
  }
};

std::string curve_csv(const SelectionReport& r) {
  std::ostringstream os;
  os << "tau,srar_causal,srar_noncausal";
  if (r.restricted) os << ",srar_rcausal,srar_rnoncausal";
  os << '\n';
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    os << format_number(r.grid[i]) << ',' << format_number(r.unrestricted.causal.values[i]) << ','
       << format_number(r.unrestricted.noncausal.values[i]);
    if (r.restricted)
      os << ',' << format_number(r.restricted->causal.values[i]) << ','
         << format_number(r.restricted->noncausal.values[i]);
    os << '\n';
  }
  return os.str();
}

std::size_t resolve_p(const CurveOpts& o, std::span<const double> y, std::optional<OrderSelection>& order) {
  if (o.p) return *o.p;
  order = hannan_quinn(y, o.p_max);
  return order->order;
}

SelectOptions select_options(const CurveOpts& o, bool restricted) {
  SelectOptions s;
  s.method = parse_aggregate_method(o.method);
  s.include_restricted = restricted;
  s.aggregate_endpoints = o.aggregate_endpoints;
  return s;
}

int cmd_srar(const CurveOpts& o, std::ostream& out) {
  const auto grid = parse_grid(o.grid);
  const auto y = load(o.data);
  std::optional<OrderSelection> order;
  const std::size_t p = resolve_p(o, y, order);
  const SelectionReport r = select_model(y, p, grid, select_options(o, o.restricted));
  emit(o.output, curve_csv(r), out);
  if (!o.report.empty()) {
    json j = envelope("srar", o.config(), std::nullopt, grid);
    j["result"]["p"] = p;
    j["result"]["order_selection"] = order ? order_json(*order) : json(nullptr);
    emit(o.report, dump(j), out);
  }
  return kExitOk;
}

int cmd_select(const CurveOpts& o, std::ostream& out) {
  const auto grid = parse_grid(o.grid);
  const auto y = load(o.data);
  std::optional<OrderSelection> order;
  const std::size_t p = resolve_p(o, y, order);
  const SelectionReport r = select_model(y, p, grid, select_options(o, o.restricted));
  json j = envelope("select", o.config(), std::nullopt, grid);
  j["result"] = report_json(r);
  j["result"]["order_selection"] = order ? order_json(*order) : json(nullptr);
  emit(o.output, dump(j), out);
  if (!o.curves.empty()) emit(o.curves, curve_csv(r), out);
  return kExitOk;
}

json cells_json(const std::vector<TableCell>& cells) {
  json a = json::array();
  for (const auto& c : cells)
    a.push_back(json{{"cell", c.label}, {"winner", std::string(to_string(c.winner))}, {"model", c.model}});
  return a;
}

int cmd_identify(const CurveOpts& o, std::ostream& out) {
  const auto grid = parse_grid(o.grid);
  const auto y = load(o.data);
  Identification id;
  try {
    id = run_identification(y, o.p, grid, o.restricted, o.p_max, parse_aggregate_method(o.method));
  } catch (const DegeneracyError& e) {
    throw DegeneracyError("dataset '" + o.data.input + "' column '" + o.data.column + "': " + e.what() +
                              "; hint: the series is constant or collinear after the transform; check the column "
                              "and transform, or pass a smaller --p",
                          e.dependent_columns());
  }
  json j = envelope("identify", o.config(), std::nullopt, grid);
  json& r = j["result"];
  r["series"] = o.name.empty() ? o.data.column : o.name;
  r["observations"] = y.size();
  r["p"] = id.p;
  r["order_selection"] = id.order ? order_json(*id.order) : json(nullptr);
  r["table"] = cells_json(id.cells);
  r["restricted_table"] = id.restricted_cells ? cells_json(*id.restricted_cells) : json(nullptr);
  r["selection"] = report_json(id.report);
  emit(o.output, dump(j), out);
  if (!o.curves.empty()) emit(o.curves, curve_csv(id.report), out);
  return kExitOk;
}

struct MonteCarloOpts {
  std::string process = "mar";
  std::vector<double> pi;  // causal AR(1) with pi = 0.5 when neither pi nor phi is given
  std::vector<double> phi;
  double intercept = 1.0;
  double tau_star = 0.7;
  double beta1 = 0.2;
  double beta2 = 0.8;
  DistOpts dist;
  std::size_t reps = 2000;
  std::size_t length = 200;
  std::size_t p_fit = 1;
  std::vector<double> grid;
  std::uint64_t seed = 0;
  std::size_t burn_in = 200;
  std::string method = "grid_mean";
  bool restricted = false;
  bool endpoints = false;
  std::string checkpoint;
  std::size_t jobs = 0;
  std::string output;
  std::string report;

  json config() const {
    json j;
    j["process"] = process;
    j["pi"] = pi;
    j["phi"] = phi;
    j["intercept"] = intercept;
    j["tau-star"] = tau_star;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["innovation"] = dist_json(dist);
    j["reps"] = reps;
    j["length"] = length;
    j["p-fit"] = p_fit;
    j["grid"] = parse_grid(grid);
    j["seed"] = seed;
    j["burn-in"] = burn_in;
    j["method"] = method;
    j["restricted"] = restricted;
    j["endpoints"] = endpoints;
    return j;
  }
};

json freq_cell_json(const FrequencyCell& c) {
  return json{{"frequency", c.frequency}, {"standard_error", c.standard_error}, {"correct", c.correct},
              {"ties", c.ties},           {"total", c.total}};
}

json freq_block_json(const FrequencyBlock& b, const std::vector<double>& grid) {
  json rows = json::array();
  for (std::size_t i = 0; i < b.per_tau.size(); ++i) {
    json row = freq_cell_json(b.per_tau[i]);
    row["tau"] = grid[i];
    rows.push_back(row);
  }
  return json{{"per_tau", rows}, {"aggregate", freq_cell_json(b.aggregate)}, {"failed", b.failed}};
}

int cmd_montecarlo(MonteCarloOpts o, std::ostream& out) {
  if (o.process == "mar" && o.pi.empty() && o.phi.empty()) o.pi = {0.5};
  McConfig cfg;
  cfg.dgp = make_dgp(o.process, o.pi, o.phi, o.intercept, o.tau_star, o.beta1, o.beta2, o.dist);
  cfg.n_reps = o.reps;
  cfg.T = o.length;
  cfg.p_fit = o.p_fit;
  cfg.grid = parse_grid(o.grid);
  cfg.seed = o.seed;
  cfg.burn_in = o.burn_in;
  cfg.method = parse_aggregate_method(o.method);
  cfg.include_restricted = o.restricted;
  cfg.include_endpoints = o.endpoints;
  cfg.parallelism = o.jobs ? o.jobs : default_jobs();
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  const FrequencyTable t = run_selection_frequencies(cfg);

  std::ostringstream csv;
  csv << "quantile,frequency,std_error,correct,ties,total";
  if (t.restricted) csv << ",restricted_frequency,restricted_std_error";
  csv << '\n';
  auto row = [&](const std::string& label, const FrequencyCell& c, const FrequencyCell* r) {
    csv << label << ',' << format_number(c.frequency) << ',' << format_number(c.standard_error) << ',' << c.correct
        << ',' << c.ties << ',' << c.total;
    if (r) csv << ',' << format_number(r->frequency) << ',' << format_number(r->standard_error);
    csv << '\n';
  };
  for (std::size_t i = 0; i < t.grid.size(); ++i)
    row(format_number(t.grid[i]), t.unrestricted.per_tau[i], t.restricted ? &t.restricted->per_tau[i] : nullptr);
  row("aggregate", t.unrestricted.aggregate, t.restricted ? &t.restricted->aggregate : nullptr);
  emit(o.output, csv.str(), out);

  if (!o.report.empty()) {
    json j = envelope("montecarlo", o.config(), o.seed, t.grid);
    j["result"]["truth"] = std::string(to_string(t.truth));
    j["result"]["n_reps"] = t.n_reps;
    j["result"]["T"] = t.T;
    j["result"]["unrestricted"] = freq_block_json(t.unrestricted, t.grid);
    j["result"]["restricted"] = t.restricted ? freq_block_json(*t.restricted, t.grid) : json(nullptr);
    emit(o.report, dump(j), out);
  }
  return kExitOk;
}

struct BindingOpts {
  double tau = 0.5;
  std::vector<double> coefficients{-0.9, -0.8, -0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1, 0.0,
                                   0.1,  0.2,  0.3,  0.4,  0.5,  0.6,  0.7,  0.8,  0.9};
  DistOpts dist{"student_t"};
  std::size_t reps = 1000;
  std::size_t length = 600;
  std::uint64_t seed = 0;
  std::size_t burn_in = 200;
  double dispersion_threshold = 0.25;
  std::size_t jobs = 0;
  std::string output;
  std::string report;

  json config() const {
    json j;
    j["tau"] = tau;
    j["coefficients"] = coefficients;
    j["innovation"] = dist_json(dist);
    j["reps"] = reps;
    j["length"] = length;
    j["seed"] = seed;
    j["burn-in"] = burn_in;
    j["dispersion-threshold"] = dispersion_threshold;
    return j;
  }
};

int cmd_binding(const BindingOpts& o, std::ostream& out) {
  BindingConfig cfg;
  cfg.tau = o.tau;
  cfg.coefficients = o.coefficients;
  cfg.innovation = o.dist.spec();
  cfg.n_reps = o.reps;
  cfg.T = o.length;
  cfg.seed = o.seed;
  cfg.burn_in = o.burn_in;
  cfg.dispersion_threshold = o.dispersion_threshold;
  cfg.parallelism = o.jobs ? o.jobs : default_jobs();
  const BindingGrid g = run_binding_function(cfg);

  std::ostringstream csv;
  csv << "coefficient,mean,std_dev,std_error,n_ok,failed,non_convergent\n";
  json cells = json::array();
  for (const auto& c : g.cells) {
    csv << format_number(c.coefficient) << ',' << format_number(c.mean) << ',' << format_number(c.std_dev) << ','
        << format_number(c.standard_error) << ',' << c.n_ok << ',' << c.failed << ','
        << (c.non_convergent ? "true" : "false") << '\n';
    cells.push_back(json{{"coefficient", c.coefficient},
                         {"mean", c.mean},
                         {"std_dev", c.std_dev},
                         {"standard_error", c.standard_error},
                         {"n_ok", c.n_ok},
                         {"failed", c.failed},
                         {"non_convergent", c.non_convergent}});
  }
  emit(o.output, csv.str(), out);
  if (!o.report.empty()) {
    json j = envelope("binding", o.config(), o.seed, {o.tau});
    j["result"]["cells"] = cells;
    emit(o.report, dump(j), out);
  }
  return kExitOk;
}

void add_curve(CLI::App* s, CurveOpts& o, bool with_curves_file) {
  add_data(s, o.data);
  s->add_option("-p,--p", o.p, "autoregressive order (default: Hannan-Quinn)");
  s->add_option("--p-max", o.p_max, "largest order tried by Hannan-Quinn")->capture_default_str();
  s->add_option("--grid", o.grid, "quantile levels, comma separated (default 0.05..0.95)")->delimiter(',');
  s->add_flag("--restricted", o.restricted, "also fit the restricted variants");
  s->add_option("--method", o.method, "aggregate: grid_mean or trapezoid")->capture_default_str();
  s->add_flag("--aggregate-endpoints", o.aggregate_endpoints, "let tau = 0 and 1 enter the aggregate");
  s->add_option("--name", o.name, "series label for the report");
  s->add_option("-o,--output", o.output, "output path (default stdout)")->configurable(false);
  if (with_curves_file)
    s->add_option("--curves", o.curves, "also write the curve CSV here")->configurable(false);
  else
    s->add_option("--report", o.report, "JSON report path")->configurable(false);
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const InsufficientDataError*>(&e)) return kExitData;
  if (dynamic_cast<const DegeneracyError*>(&e) || dynamic_cast<const NumericalError*>(&e) ||
      dynamic_cast<const ConvergenceError*>(&e))
    return kExitNumerical;
  return kExitConfig;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal versus noncausal identification by quantile autoregression", "qmar"};
  app.set_version_flag("--version", std::string(version()));
  app.set_config("--config", "", "TOML file with one [section] per subcommand; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "simulate a MAR(r,s) or two-regime path as t,value CSV");
  add_process(s_sim, sim.process, sim.pi, sim.phi, sim.intercept, sim.tau_star, sim.beta1, sim.beta2);
  s_sim->add_option("-T,--length", sim.length, "retained length")->capture_default_str();
  s_sim->add_option("--burn-in", sim.burn_in, "observations trimmed from each end")->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "64-bit seed")->capture_default_str();
  s_sim->add_option("--method", sim.method, "matrix or recursive")->capture_default_str();
  add_dist(s_sim, sim.dist, "innovation");
  s_sim->add_option("-o,--output", sim.output, "CSV path (default stdout)")->configurable(false);
  s_sim->add_option("--report", sim.report, "JSON report path")->configurable(false);

  FitOpts fit;
  auto* s_fit = app.add_subcommand("fit", "quantile autoregression fits at given levels");
  add_data(s_fit, fit.data);
  s_fit->add_option("--direction", fit.direction, "causal or noncausal")->capture_default_str();
  s_fit->add_option("-p,--p", fit.p, "autoregressive order")->capture_default_str();
  s_fit->add_flag("--restricted", fit.restricted, "keep rows with nonnegative regressors only");
  s_fit->add_option("--tau", fit.taus, "quantile levels, comma separated")->delimiter(',')->capture_default_str();
  s_fit->add_flag("--aml", fit.aml, "add the Student-t approximate ML baseline");
  s_fit->add_option("-o,--output", fit.output, "JSON path (default stdout)")->configurable(false);

  OrderOpts ord;
  auto* s_ord = app.add_subcommand("order", "Hannan-Quinn order selection on OLS autoregressions");
  add_data(s_ord, ord.data);
  s_ord->add_option("--p-max", ord.p_max, "largest order")->capture_default_str();
  s_ord->add_option("-o,--output", ord.output, "JSON path (default stdout)")->configurable(false);

  CurveOpts srar;
  auto* s_srar = app.add_subcommand("srar", "SRAR curves of both directions as CSV");
  add_curve(s_srar, srar, false);

  CurveOpts sel;
  auto* s_sel = app.add_subcommand("select", "causal versus noncausal selection report (JSON)");
  add_curve(s_sel, sel, true);

  CurveOpts idf;
  auto* s_idf = app.add_subcommand("identify", "per-quantile and aggregate identification table for one series");
  add_curve(s_idf, idf, true);

  MonteCarloOpts mc;
  auto* s_mc = app.add_subcommand("montecarlo", "selection-frequency experiment");
  add_process(s_mc, mc.process, mc.pi, mc.phi, mc.intercept, mc.tau_star, mc.beta1, mc.beta2);
  add_dist(s_mc, mc.dist, "innovation");
  s_mc->add_option("--reps", mc.reps, "replicates")->capture_default_str();
  s_mc->add_option("-T,--length", mc.length, "sample length")->capture_default_str();
  s_mc->add_option("--p-fit", mc.p_fit, "order of the fitted models")->capture_default_str();
  s_mc->add_option("--grid", mc.grid, "quantile levels, comma separated")->delimiter(',');
  s_mc->add_option("--seed", mc.seed, "base seed")->capture_default_str();
  s_mc->add_option("--burn-in", mc.burn_in, "observations trimmed from each end")->capture_default_str();
  s_mc->add_option("--method", mc.method, "aggregate: grid_mean or trapezoid")->capture_default_str();
  s_mc->add_flag("--restricted", mc.restricted, "also tabulate the restricted variants");
  s_mc->add_flag("--endpoints", mc.endpoints, "append rows for tau = 0 and 1");
  s_mc->add_option("--checkpoint", mc.checkpoint, "resume file")->configurable(false);
  s_mc->add_option("-j,--jobs", mc.jobs, "worker threads")->envname(kJobsEnv)->configurable(false);
  s_mc->add_option("-o,--output", mc.output, "CSV path (default stdout)")->configurable(false);
  s_mc->add_option("--report", mc.report, "JSON sidecar path")->configurable(false);

  BindingOpts bind;
  auto* s_bind = app.add_subcommand("binding", "binding function of the misspecified causal fit");
  s_bind->add_option("--tau", bind.tau, "quantile level")->capture_default_str();
  s_bind->add_option("--coefficients", bind.coefficients, "true lead coefficients, comma separated")
      ->delimiter(',');
  add_dist(s_bind, bind.dist, "innovation");
  s_bind->add_option("--reps", bind.reps, "replicates per coefficient")->capture_default_str();
  s_bind->add_option("-T,--length", bind.length, "sample length")->capture_default_str();
  s_bind->add_option("--seed", bind.seed, "base seed")->capture_default_str();
  s_bind->add_option("--burn-in", bind.burn_in, "observations trimmed from each end")->capture_default_str();
  s_bind->add_option("--dispersion-threshold", bind.dispersion_threshold, "std-dev flag level")
      ->capture_default_str();
  s_bind->add_option("-j,--jobs", bind.jobs, "worker threads")->envname(kJobsEnv)->configurable(false);
  s_bind->add_option("-o,--output", bind.output, "CSV path (default stdout)")->configurable(false);
  s_bind->add_option("--report", bind.report, "JSON report path")->configurable(false);

  for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(CLI::config_extras_mode::error);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "qmar: error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*s_sim) return cmd_simulate(sim, out);
    if (*s_fit) return cmd_fit(fit, out);
    if (*s_ord) return cmd_order(ord, out);
    if (*s_srar) return cmd_srar(srar, out);
    if (*s_sel) return cmd_select(sel, out);
    if (*s_idf) return cmd_identify(idf, out);
    if (*s_mc) return cmd_montecarlo(mc, out);
    if (*s_bind) return cmd_binding(bind, out);
  } catch (const Error& e) {
    err << "qmar: error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "qmar: error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace qmar::app
