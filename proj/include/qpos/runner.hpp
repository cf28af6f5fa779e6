#pragma once

// Scenario runner behind the qpos command-line tool. Each subcommand turns a
// resolved configuration into a JSON report plus optional CSV files; writing
// them is left to the caller so every output file has a single writer.

#include <chrono>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpos/conformal_normalizer.hpp"
#include "qpos/corpus.hpp"
#include "qpos/io.hpp"
#include "qpos/psef_suite.hpp"
#include "qpos/q_positivity.hpp"

namespace qpos::runner {

using json = nlohmann::json;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check-qpos", "uniformize",        "normalize-scalar", "certify",
                                              "psef-test",  "equivalence-suite", "dump-field"};
  return names;
}

struct Overrides {
  std::optional<int> grid;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> corpus;
};

struct Output {
  json report;
  std::vector<std::pair<std::string, std::string>> files;  // file name -> contents
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_argument, "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("config is not valid JSON: ") + e.what());
  }
}

/// Applies command-line overrides and fills defaults so the report can embed
/// the exact configuration that ran.
inline json resolve_config(json config, const Overrides& overrides) {
  if (!config.is_object()) throw Error(Errc::parse_error, "config must be a JSON object");
  if (overrides.grid) {
    if (config.contains("geometry")) config["geometry"]["grid"] = *overrides.grid;
    else config["corpus"]["grid"] = *overrides.grid;
    if (config.contains("corpus")) config["corpus"]["grid"] = *overrides.grid;
  }
  if (overrides.seed || overrides.corpus) {
    if (!config.contains("corpus")) config["corpus"] = json::object();
    if (overrides.seed) config["corpus"]["seed"] = *overrides.seed;
    if (overrides.corpus) config["corpus"]["size"] = *overrides.corpus;
  }

  const Tolerances defaults;
  json tol = config.value("tolerances", json::object());
  if (overrides.tolerance) tol["positivity_rel"] = *overrides.tolerance;
  tol["positivity_rel"] = tol.value("positivity_rel", defaults.positivity_rel);
  tol["solver_residual"] = tol.value("solver_residual", defaults.solver_residual);
  tol["mean_rel"] = tol.value("mean_rel", defaults.mean_rel);
  tol["constancy"] = tol.value("constancy", defaults.constancy);
  tol["aligned_delta"] = tol.value("aligned_delta", defaults.aligned_delta);
  config["tolerances"] = tol;

  if (config.contains("geometry")) {
    json& g = config["geometry"];
    const TorusGeometry geometry = io::geometry_from_json(g);
    g = io::to_json(geometry);
    if (!config.contains("q")) config["q"] = geometry.complex_dim() - 1;
  }
  if (config.contains("corpus")) {
    const CorpusOptions defaults_corpus;
    json& c = config["corpus"];
    c["n"] = c.value("n", defaults_corpus.complex_dim);
    c["grid"] = c.value("grid", defaults_corpus.grid);
    c["seed"] = c.value("seed", defaults_corpus.seed);
    c["size"] = c.value("size", defaults_corpus.size);
    c["min_magnitude"] = c.value("min_magnitude", defaults_corpus.min_magnitude);
    c["max_magnitude"] = c.value("max_magnitude", defaults_corpus.max_magnitude);
    c["max_wave"] = c.value("max_wave", defaults_corpus.max_wave);
  }
  return config;
}

inline Tolerances tolerances_from(const json& config) {
  const json& t = config.at("tolerances");
  Tolerances tol;
  tol.positivity_rel = t.at("positivity_rel").get<double>();
  tol.solver_residual = t.at("solver_residual").get<double>();
  tol.mean_rel = t.at("mean_rel").get<double>();
  tol.constancy = t.at("constancy").get<double>();
  tol.aligned_delta = t.at("aligned_delta").get<double>();
  if (!(tol.positivity_rel > 0.0) || !(tol.solver_residual > 0.0) || !(tol.aligned_delta > 0.0) ||
      tol.aligned_delta >= 1.0) {
    throw Error(Errc::invalid_argument, "tolerances must be positive (aligned_delta below 1)");
  }
  return tol;
}

struct Scenario {
  TorusGeometry geometry;
  LineBundleMetric bundle;
  MetricField base_metric;
  int q;
  Tolerances tol;
};

inline Scenario scenario_from(const json& config, const std::string& base_dir) {
  if (!config.contains("geometry")) throw Error(Errc::parse_error, "config needs a geometry section");
  if (!config.contains("bundle")) throw Error(Errc::parse_error, "config needs a bundle section");
  TorusGeometry geometry = io::geometry_from_json(config.at("geometry"));
  LineBundleMetric bundle = io::bundle_from_json(config.at("bundle"), geometry, base_dir);
  MetricField metric = config.contains("metric")
                           ? MetricField::constant(geometry, io::matrix_from_json(config.at("metric"), geometry.complex_dim()))
                           : MetricField::identity(geometry);
  const int q = config.at("q").get<int>();
  require_q_in_range(q, geometry.complex_dim());
  return Scenario{geometry, std::move(bundle), std::move(metric), q, tolerances_from(config)};
}

template <class Field>
std::string csv_string(const Field& field) {
  std::ostringstream out;
  io::write_csv(out, field);
  return out.str();
}

inline json grid_info(const TorusGeometry& g) {
  return json{{"n", g.complex_dim()}, {"grid", g.grid_shape()}, {"points", g.point_count()}};
}

inline Output run_check_qpos(const Scenario& s) {
  Output out;
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(s.bundle), s.base_metric);
  const double threshold = positivity_threshold(ev, s.tol.positivity_rel);
  const double margin = q_margin(ev, s.q);
  json result{{"verdict", margin > threshold}, {"q", s.q},
              {"margin", margin},              {"threshold", threshold},
              {"uniform_margin", uniform_q_margin(ev, s.q)},
              {"eigenvalue_extrema", io::extrema(ev)},
              {"grid", grid_info(s.geometry)},
              {"base_metric", io::to_json(s.base_metric.at(0))}};
  result["lambda0"] = margin > threshold ? json(lambda0(ev, s.q, threshold)) : json(nullptr);
  out.report = std::move(result);
  out.files.emplace_back("eigenvalues.csv", csv_string(ev));
  return out;
}

inline Output run_uniformize(const Scenario& s) {
  Output out;
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(s.bundle), s.base_metric);
  const double threshold = positivity_threshold(ev, s.tol.positivity_rel);
  json result{{"q", s.q}, {"grid", grid_info(s.geometry)}, {"base_metric", io::to_json(s.base_metric.at(0))},
              {"base_margin", q_margin(ev, s.q)}};
  if (!(q_margin(ev, s.q) > threshold)) {
    result["verdict"] = false;
    result["error"] = to_string(Errc::not_q_positive);
    out.report = std::move(result);
    return out;
  }
  const Uniformization u = uniformize(s.bundle, s.base_metric, s.q, s.tol.positivity_rel);
  const EigenvalueField kappa = generalized_eigenvalues(chern_curvature(s.bundle), u.metric);

  const int n = s.geometry.complex_dim();
  double worst_bound_gap = std::numeric_limits<double>::infinity();
  double worst_map_error = 0.0;
  for (std::size_t p = 0; p < kappa.size(); ++p) {
    const double sum = smallest_sum(kappa.at(p), s.q);
    const double bound = (std::exp(u.lambda0 * u.base_eigenvalues.value(p, n - s.q)) - (s.q + 1)) / u.lambda0;
    worst_bound_gap = std::min(worst_bound_gap, sum - bound);
    double scale = 0.0;
    for (double k : kappa.at(p)) scale = std::max(scale, std::abs(k));
    for (int i = 1; i <= n; ++i) {
      const double expected = transformed_eigenvalue(u.base_eigenvalues.value(p, i), u.lambda0);
      worst_map_error = std::max(worst_map_error, std::abs(kappa.value(p, i) - expected) / std::max(scale, 1e-300));
    }
  }
  const double uniform = uniform_q_margin(kappa, s.q);
  result["verdict"] = uniform > positivity_threshold(kappa, s.tol.positivity_rel);
  result["lambda0"] = u.lambda0;
  result["uniform_margin"] = uniform;
  result["margin_minus_lower_bound"] = worst_bound_gap;
  result["eigenvalue_map_max_rel_error"] = worst_map_error;
  result["transformed_eigenvalue_extrema"] = io::extrema(kappa);
  out.report = std::move(result);
  out.files.emplace_back("uniformized_metric.csv", csv_string(u.metric.field()));
  out.files.emplace_back("transformed_eigenvalues.csv", csv_string(kappa));
  return out;
}

inline json certificate_json(const PositivityCertificate& cert) { return io::to_json(cert); }

inline Output run_normalize_scalar(const Scenario& s) {
  Output out;
  const Normalization norm = normalize_scalar(s.bundle, s.base_metric, s.tol);
  const ScalarField scalar = scalar_curvature(s.bundle.with_weight(*norm.certificate.witness_weight), s.base_metric);
  json result{{"c", norm.c},
              {"verdict", norm.certificate.verdict},
              {"certificate", certificate_json(norm.certificate)},
              {"f_extrema", io::extrema(norm.f)},
              {"scalar_curvature_extrema", io::extrema(scalar)},
              {"grid", grid_info(s.geometry)},
              {"f_field", "f.csv"}};
  out.report = std::move(result);
  out.files.emplace_back("f.csv", csv_string(norm.f));
  out.files.emplace_back("normalized_scalar_curvature.csv", csv_string(scalar));
  return out;
}

inline Output run_certify(const Scenario& s) {
  Output out;
  const PositivityCertificate cert = certify_n_minus_1_positive(s.bundle, s.tol);
  json result{{"verdict", cert.verdict}, {"certificate", certificate_json(cert)}, {"grid", grid_info(s.geometry)}};
  if (cert.witness_metric && cert.witness_weight) {
    result["c"] = cert.residuals.at("target_constant");
    result["chosen_metric"] = io::to_json(cert.witness_metric->at(0));
    result["f_field"] = "f.csv";
    out.files.emplace_back("f.csv", csv_string(s.bundle.phi() - *cert.witness_weight));
  } else {
    result["c"] = nullptr;
    result["chosen_metric"] = nullptr;
    result["f_field"] = nullptr;
  }
  out.report = std::move(result);
  return out;
}

inline Output run_psef_test(const Scenario& s) {
  Output out;
  const DualPsefTest test = dual_not_psef_test(s.bundle, s.tol);
  out.report = json{{"class_psef", torus_psef_oracle(s.bundle)},
                    {"dual_psef", torus_psef_oracle(s.bundle.dual())},
                    {"dual_not_psef", test.not_psef},
                    {"degree", test.degree},
                    {"threshold", test.threshold},
                    {"witness_metric", test.witness ? io::to_json(*test.witness) : json(nullptr)},
                    {"grid", grid_info(s.geometry)}};
  return out;
}

inline Output run_dump_field(const Scenario& s, const json& config) {
  Output out;
  const std::string field = config.contains("dump") ? config.at("dump").value("field", std::string("phi"))
                                                    : std::string("phi");
  std::string contents;
  if (field == "phi") contents = csv_string(s.bundle.phi());
  else if (field == "curvature") contents = csv_string(chern_curvature(s.bundle));
  else if (field == "scalar_curvature") contents = csv_string(scalar_curvature(s.bundle, s.base_metric));
  else if (field == "eigenvalues") contents = csv_string(generalized_eigenvalues(chern_curvature(s.bundle), s.base_metric));
  else throw Error(Errc::invalid_argument, "unknown dump field '" + field + "'");
  const std::string name = field + ".csv";
  out.report = json{{"field", field}, {"file", name}, {"grid", grid_info(s.geometry)}};
  out.files.emplace_back(name, std::move(contents));
  return out;
}

inline json suite_json(const SuiteReport& r) {
  return json{{"items", r.items},
              {"margins", r.margins},
              {"pass", r.pass},
              {"positive", r.positive},
              {"detail", r.detail},
              {"witness_metric", r.witness_metric ? io::to_json(*r.witness_metric) : json(nullptr)}};
}

inline CorpusOptions corpus_options_from(const json& c) {
  CorpusOptions o;
  o.complex_dim = c.at("n").get<int>();
  o.grid = c.at("grid").get<int>();
  o.seed = c.at("seed").get<std::uint64_t>();
  o.size = c.at("size").get<std::size_t>();
  o.min_magnitude = c.at("min_magnitude").get<double>();
  o.max_magnitude = c.at("max_magnitude").get<double>();
  o.max_wave = c.at("max_wave").get<int>();
  if (o.complex_dim < 1 || o.complex_dim > kMaxComplexDim) {
    throw Error(Errc::unsupported_dimension, "unsupported corpus dimension");
  }
  if (!(o.min_magnitude > 0.0) || !(o.max_magnitude >= o.min_magnitude) || o.max_wave < 1) {
    throw Error(Errc::invalid_argument, "invalid corpus magnitudes or wavenumber");
  }
  return o;
}

struct CorpusResult {
  std::vector<CorpusInstance> instances;
  std::vector<SuiteReport> reports;
  std::size_t failures = 0;
  std::size_t positives = 0;
};

inline CorpusResult run_corpus(const CorpusOptions& options, const Tolerances& tol) {
  CorpusResult result;
  result.instances = make_corpus(options);
  result.reports.resize(result.instances.size());
  const TorusGeometry geometry = TorusGeometry::cubic(options.complex_dim, options.grid);
  detail::parallel_for(
      result.instances.size(),
      [&](std::size_t i) { result.reports[i] = equivalence_suite(result.instances[i].bundle(geometry), tol); }, 1);
  for (const auto& r : result.reports) {
    result.failures += r.pass ? 0 : 1;
    result.positives += r.positive ? 1 : 0;
  }
  return result;
}

inline std::string corpus_csv(const CorpusResult& result) {
  std::ostringstream out;
  out << "index,kind,item1,item2,item3,item4,margin1,margin2,margin3,margin4,pass\n";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    out << result.instances[i].index << ',' << result.instances[i].kind;
    for (bool b : r.items) out << ',' << (b ? 1 : 0);
    for (double m : r.margins) out << ',' << io::format_double(m);
    out << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

inline Output run_equivalence_suite(const json& config, const std::string& base_dir) {
  Output out;
  const Tolerances tol = tolerances_from(config);
  if (!config.contains("corpus") && config.contains("bundle")) {
    const Scenario s = scenario_from(config, base_dir);
    const SuiteReport r = equivalence_suite(s.bundle, tol);
    out.report = json{{"mode", "single"}, {"suite", suite_json(r)}, {"grid", grid_info(s.geometry)}};
    return out;
  }
  if (!config.contains("corpus")) throw Error(Errc::parse_error, "equivalence-suite needs a corpus or a bundle");
  const CorpusOptions options = corpus_options_from(config.at("corpus"));
  const CorpusResult result = run_corpus(options, tol);

  json instances = json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    json entry = suite_json(result.reports[i]);
    entry["index"] = result.instances[i].index;
    entry["kind"] = result.instances[i].kind;
    entry["bundle"] = io::bundle_to_json(result.instances[i].r_const, result.instances[i].phi_expression);
    instances.push_back(std::move(entry));
  }
  out.report = json{{"mode", "corpus"},
                    {"seed", options.seed},
                    {"size", options.size},
                    {"grid", grid_info(TorusGeometry::cubic(options.complex_dim, options.grid))},
                    {"failures", result.failures},
                    {"positives", result.positives},
                    {"all_pass", result.failures == 0},
                    {"aggregate_csv", "equivalence_suite.csv"},
                    {"instances", std::move(instances)}};
  out.files.emplace_back("equivalence_suite.csv", corpus_csv(result));
  return out;
}

/// Runs one subcommand on a resolved config. The report embeds the config and
/// a timestamp; everything else is a deterministic function of the config.
inline Output run(const std::string& command, const json& config, const std::string& base_dir = "") {
  Output out;
  if (command == "equivalence-suite") {
    out = run_equivalence_suite(config, base_dir);
  } else {
    const Scenario s = scenario_from(config, base_dir);
    if (command == "check-qpos") out = run_check_qpos(s);
    else if (command == "uniformize") out = run_uniformize(s);
    else if (command == "normalize-scalar") out = run_normalize_scalar(s);
    else if (command == "certify") out = run_certify(s);
    else if (command == "psef-test") out = run_psef_test(s);
    else if (command == "dump-field") out = run_dump_field(s, config);
    else throw Error(Errc::invalid_argument, "unknown subcommand '" + command + "'");
  }
  json report{{"command", command}, {"config", config}, {"result", std::move(out.report)}};
  json files = json::array();
  for (const auto& [name, contents] : out.files) files.push_back(name);
  report["files"] = std::move(files);
  report["timestamp"] = utc_timestamp();
  out.report = std::move(report);
  return out;
}

inline std::string report_file_name(const std::string& command) {
  std::string name = command;
  for (char& ch : name) {
    if (ch == '-') ch = '_';
  }
  return name + ".json";
}

}  // namespace qpos::runner
