#include "ctrace/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ctrace/digital.hpp"
#include "ctrace/epidemic.hpp"
#include "ctrace/error.hpp"
#include "json.hpp"

namespace ctrace {

namespace {

using nlohmann::json;

// Raw flag values; empty optionals mean "not given on the command line".
struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed, replicates, runs;
  std::optional<std::string> threads, out, format;
  std::optional<double> beta, gamma, delta, pi, p;
  std::optional<std::int64_t> n;
  std::string sweep_name;
  bool strict = false;
};

std::unique_ptr<CLI::App> build_app(Flags& flags) {
  auto app = std::make_unique<CLI::App>("Reproduction numbers and outbreak simulation under contact tracing", "ctrace");
  app->require_subcommand(1);
  app->fallthrough();
  app->add_option("--config", flags.config_path, "JSON config file");
  app->add_option("--seed", flags.seed, "master random seed");
  app->add_option("--threads", flags.threads, "worker threads, or 'auto'");
  app->add_option("--out", flags.out, "output path (file, or directory for sweep)");
  app->add_option("--format", flags.format, "csv or json");
  app->add_option("--replicates", flags.replicates, "component replicates per root type");
  app->add_option("--runs", flags.runs, "epidemic runs");
  app->add_option("--beta", flags.beta);
  app->add_option("--gamma", flags.gamma);
  app->add_option("--delta", flags.delta);
  app->add_option("--pi", flags.pi);
  app->add_option("--p", flags.p);
  app->add_option("--n", flags.n);
  app->add_subcommand("analytic", "closed-form digital-tracing quantities");
  app->add_subcommand("component-mc", "Monte Carlo offspring matrix and R_DM");
  app->add_subcommand("epidemic", "finite-population outbreak ensemble");
  auto* sweep = app->add_subcommand("sweep", "critical curves and heatmaps");
  sweep->add_option("name", flags.sweep_name, "built-in sweep: fig3a, fig3b, fig4, fig5a, fig5b");
  auto* table2 = app->add_subcommand("table2", "four tracing scenarios vs published values");
  table2->add_flag("--strict", flags.strict, "exit nonzero on any failed check");
  return app;
}

unsigned parse_threads(const std::string& s) {
  if (s == "auto") return 0;
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size() && v >= 1) return static_cast<unsigned>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidConfig, "--threads must be a positive integer or 'auto'");
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw Error(ErrorKind::InvalidConfig, "--format must be csv or json");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, "config file " + path + ": " + e.what());
  }
  static const std::set<std::string> known = {"params", "seed",  "threads", "replicates", "runs",
                                              "out",    "format", "sweep",  "strict"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown config key \"" + key + "\"");
  try {
    if (j.contains("params")) config.params = params_from_json(j["params"], config.params);
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads"))
      config.threads = j["threads"].is_string() ? parse_threads(j["threads"].get<std::string>())
                                                : parse_threads(std::to_string(j["threads"].get<long>()));
    if (j.contains("replicates")) config.replicates = j["replicates"].get<std::uint64_t>();
    if (j.contains("runs")) config.runs = j["runs"].get<std::uint64_t>();
    if (j.contains("out")) config.out = j["out"].get<std::string>();
    if (j.contains("format")) config.format = parse_format(j["format"].get<std::string>());
    if (j.contains("strict")) config.strict = j["strict"].get<bool>();
    if (j.contains("sweep")) {
      if (j["sweep"].is_string()) {
        config.sweep_name = j["sweep"].get<std::string>();
      } else {
        config.sweep_spec = spec_from_json(j["sweep"]);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, "config file " + path + ": " + e.what());
  }
}

RunConfig resolve(const CLI::App& app, const Flags& flags) {
  RunConfig config;
  for (const auto* sub : app.get_subcommands()) config.subcommand = sub->get_name();
  if (!flags.config_path.empty()) apply_config_file(config, flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.threads) config.threads = parse_threads(*flags.threads);
  if (flags.out) config.out = *flags.out;
  if (flags.format) config.format = parse_format(*flags.format);
  if (flags.replicates) config.replicates = *flags.replicates;
  if (flags.runs) config.runs = *flags.runs;
  if (flags.beta) config.params.beta = *flags.beta;
  if (flags.gamma) config.params.gamma = *flags.gamma;
  if (flags.delta) config.params.delta = *flags.delta;
  if (flags.pi) config.params.pi = *flags.pi;
  if (flags.p) config.params.p = *flags.p;
  if (flags.n) config.params.n = *flags.n;
  if (!flags.sweep_name.empty()) {
    config.sweep_name = flags.sweep_name;
    config.sweep_spec.reset();
  }
  config.strict = config.strict || flags.strict;
  validate(config.params);
  return config;
}

McSettings mc_settings(const RunConfig& config, std::uint64_t stream) {
  McSettings mc;
  mc.replicates = config.replicates;
  mc.seed = derive_seed(config.seed, {stream});
  mc.threads = config.threads;
  return mc;
}

// Writes to --out when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path, std::ios::binary);
      if (!file_) throw Error(ErrorKind::InvalidConfig, "cannot write " + *path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void emit(std::ostream& out, OutputFormat format, const std::vector<std::pair<std::string, json>>& rows) {
  if (format == OutputFormat::Json) {
    json obj = json::object();
    for (const auto& [k, v] : rows) obj[k] = v;
    out << obj.dump(2) << '\n';
    return;
  }
  out << "quantity,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v.dump() << '\n';
}

json matrix_json(const OffspringMatrix& m) { return json::array({{m.m11(), m.m12()}, {m.m21(), m.m22()}}); }

}  // namespace

RunConfig parse_run_config(const std::vector<std::string>& args) {
  Flags flags;
  auto app = build_app(flags);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app->parse(reversed);
  return resolve(*app, flags);
}

int cmd_analytic(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const Params& params = config.params;
  log << "analytic: series for E[N_c]\n";
  const DigitalReport r = digital_report(params);
  Sink sink(config.out, out);
  emit(sink.get(), config.format,
       {{"R_0", r.r0},
        {"M", matrix_json(r.matrix)},
        {"E_N_c", r.jumps.value},
        {"series_terms", r.jumps.terms},
        {"series_tail_bound", r.jumps.tail_bound},
        {"R_D", r.r_component},
        {"mu_c", r.mean_component_size},
        {"R_ind_D_app", r.r_individual_app},
        {"R_ind_D_nonapp", r.r_individual_nonapp},
        {"R_ind_D", r.r_individual}});
  return 0;
}

int cmd_component_mc(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const Params& params = config.params;
  log << "component-mc: " << config.replicates << " replicates per root type\n";
  const CombinedR rdm = r_component_combined(params, mc_settings(config, 1));
  log << "component-mc: manual-only reference for the naive product\n";
  const NaiveProduct naive = naive_combined_r(params, mc_settings(config, 2));
  const auto& est = rdm.estimate;

  std::vector<std::pair<std::string, json>> rows = {
      {"R_0", r0(params)},
      {"estimator", to_string(est.estimator)},
      {"replicates", est.replicates},
      {"capped", json::array({est.capped[0], est.capped[1]})},
      {"M", matrix_json(est.mean)},
      {"M_se", json::array({{est.mean.se[0][0], est.mean.se[0][1]}, {est.mean.se[1][0], est.mean.se[1][1]}})},
      {"R_DM", rdm.value},
      {"R_DM_se", rdm.se},
      {"R_DM_ci", json::array({rdm.ci.low, rdm.ci.high})},
      {"R_DM_bootstrap_ci", json::array({rdm.bootstrap_ci.low, rdm.bootstrap_ci.high})},
      {"R_M", naive.r_manual.value},
      {"R_D", naive.r_digital},
      {"naive_product", naive.value},
      {"naive_product_ci", json::array({naive.ci.low, naive.ci.high})},
  };
  if (params.p == 0) {
    const OffspringMatrix analytic = offspring_matrix_digital(params);
    json checks = json::array();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double diff = std::abs(est.mean.value[i][j] - analytic.value[i][j]);
        checks.push_back({{"element", "m" + std::to_string(i + 1) + std::to_string(j + 1)},
                          {"analytic", analytic.value[i][j]},
                          {"pass", diff <= 3 * est.mean.se[i][j] + 1e-12}});
      }
    rows.emplace_back("analytic_cross_check", checks);
  }
  Sink sink(config.out, out);
  emit(sink.get(), config.format, rows);
  return 0;
}

int cmd_epidemic(const RunConfig& config, std::ostream& out, std::ostream& log) {
  log << "epidemic: " << config.runs << " runs, n=" << config.params.n << '\n';
  const EnsembleResult result = run_ensemble(config.params, config.runs, derive_seed(config.seed, {3}),
                                             kDefaultMajorThreshold, config.threads);
  const json summary = summary_to_json(result.summary, config.params);
  if (config.out) {
    Sink runs_sink(config.out, out);
    write_runs_csv(runs_sink.get(), result, config.params.n);
    std::ofstream summary_file(*config.out + ".summary.json", std::ios::binary);
    summary_file << summary.dump(2) << '\n';
    log << "epidemic: wrote " << *config.out << " and " << *config.out << ".summary.json\n";
  }
  if (config.format == OutputFormat::Json || config.out) {
    out << summary.dump(2) << '\n';
  } else {
    write_runs_csv(out, result, config.params.n);
  }
  return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log) {
  std::vector<SweepSpec> jobs;
  std::string prefix;
  if (config.sweep_spec) {
    jobs = {*config.sweep_spec};
    prefix = "sweep";
  } else if (config.sweep_name) {
    jobs = named_sweeps(*config.sweep_name);
    prefix = *config.sweep_name;
  } else {
    throw Error(ErrorKind::InvalidConfig, "sweep needs a built-in name or a config file with a \"sweep\" block");
  }
  const std::filesystem::path dir = config.out.value_or(".");
  std::filesystem::create_directories(dir);
  for (SweepSpec& job : jobs) {
    job.solve.mc.seed = derive_seed(config.seed, {4});
    job.solve.mc.threads = config.threads;
    const auto path = dir / (prefix + "_" + job.name + (config.format == OutputFormat::Json ? ".json" : ".csv"));
    log << "sweep: " << job.name << " -> " << path.string() << '\n';
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
    std::ostringstream csv;
    switch (job.kind) {
      case JobKind::Curve: write_curve_csv(csv, critical_curve(job)); break;
      case JobKind::Heatmap: write_heatmap_csv(csv, heatmap_grid(job)); break;
      case JobKind::Profile: write_profile_csv(csv, job, profile(job)); break;
    }
    if (config.format == OutputFormat::Csv) {
      file << csv.str();
    } else {
      // JSON mirror of the CSV: an array of row objects keyed by header.
      std::istringstream lines(csv.str());
      std::string line;
      std::getline(lines, line);
      std::vector<std::string> header;
      for (std::istringstream h(line); std::getline(h, line, ',');) header.push_back(line);
      json rows = json::array();
      while (std::getline(lines, line)) {
        json row = json::object();
        std::istringstream cells(line);
        std::string cell;
        for (const auto& key : header) {
          std::getline(cells, cell, ',');
          row[key] = cell;
        }
        rows.push_back(row);
      }
      file << rows.dump(2) << '\n';
    }
    out << path.string() << '\n';
  }
  return 0;
}

namespace {

struct Check {
  std::string name;
  double value;
  Interval ci;
  double published;
  double tolerance;

  // pass: within tolerance; fail: published value outside the CI widened by
  // the tolerance; otherwise inconclusive.
  std::string verdict() const {
    if (std::abs(value - published) <= tolerance) return "pass";
    if (published < ci.low - tolerance || published > ci.high + tolerance) return "fail";
    return "inconclusive";
  }
};

}  // namespace

int cmd_table2(const RunConfig& config, std::ostream& out, std::ostream& log) {
  struct Row {
    double p, pi;
    const char* label;
    double r_published, major_published, size_published;
  };
  const Row rows[] = {{0, 0, "R_0", 2.80, 0.64, 0.93},
                      {0, 2.0 / 3, "R_D", 2.20, 0.49, 0.81},
                      {2.0 / 3, 0, "R_M", 1.49, 0.46, 0.75},
                      {2.0 / 3, 2.0 / 3, "R_DM", 0.92, 0.01, 0.14}};
  const bool reduced = config.runs < 10'000;
  const double major_tol = reduced ? 0.04 : 0.02;
  const double size_tol = reduced ? 0.05 : 0.03;

  std::vector<Check> checks;
  json table = json::array();
  std::uint64_t stream = 10;
  for (const Row& row : rows) {
    Params params = config.params;
    params.p = row.p;
    params.pi = row.pi;
    log << "table2: p=" << row.p << " pi=" << row.pi << '\n';
    Check r{row.label, 0, {}, row.r_published, 0.02};
    if (row.p == 0) {
      r.value = row.pi == 0 ? r0(params) : r_component_digital(params);
      r.ci = {r.value, r.value};
      r.tolerance = 0.005;
    } else {
      const CombinedR est = r_component_combined(params, mc_settings(config, stream));
      r.value = est.value;
      r.ci = est.ci;
    }
    const EnsembleResult ens =
        run_ensemble(params, config.runs, derive_seed(config.seed, {stream + 1}), kDefaultMajorThreshold, config.threads);
    const auto& s = ens.summary;
    Check major{std::string(row.label) + " major_fraction", s.major_fraction, s.major_fraction_ci,
                row.major_published, major_tol};
    Check size{std::string(row.label) + " mean_major_size", s.mean_major_size,
               {s.mean_major_size - kZ95 * s.mean_major_size_se, s.mean_major_size + kZ95 * s.mean_major_size_se},
               row.size_published, size_tol};
    checks.insert(checks.end(), {r, major, size});
    table.push_back({{"p", row.p}, {"pi", row.pi}, {"quantity", row.label}, {"R", r.value},
                     {"R_ci", {r.ci.low, r.ci.high}}, {"R_check", r.verdict()},
                     {"major_fraction", s.major_fraction}, {"major_fraction_ci", {s.major_fraction_ci.low, s.major_fraction_ci.high}},
                     {"major_check", major.verdict()}, {"mean_major_size", s.mean_major_size},
                     {"mean_major_size_se", s.mean_major_size_se}, {"size_check", size.verdict()}});
    stream += 2;
  }
  Params params = config.params;
  params.p = params.pi = 2.0 / 3;
  const NaiveProduct naive = naive_combined_r(params, mc_settings(config, stream));
  Check naive_check{"naive_product", naive.value, naive.ci, 1.17, 0.02};
  checks.push_back(naive_check);

  Sink sink(config.out, out);
  auto& o = sink.get();
  if (config.format == OutputFormat::Json) {
    o << json{{"rows", table},
              {"naive_product", {{"value", naive.value}, {"ci", {naive.ci.low, naive.ci.high}}, {"check", naive_check.verdict()}}},
              {"runs", config.runs},
              {"replicates", config.replicates}}
             .dump(2)
      << '\n';
  } else {
    o << "check,value,ci_low,ci_high,published,tolerance,verdict\n" << std::setprecision(6);
    for (const auto& c : checks)
      o << c.name << ',' << c.value << ',' << c.ci.low << ',' << c.ci.high << ',' << c.published << ','
        << c.tolerance << ',' << c.verdict() << '\n';
  }
  bool any_fail = false;
  for (const auto& c : checks) any_fail = any_fail || c.verdict() == "fail";
  return config.strict && any_fail ? 3 : 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags flags;
  auto app = build_app(flags);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }
  try {
    const RunConfig config = resolve(*app, flags);
    if (config.subcommand == "analytic") return cmd_analytic(config, out, err);
    if (config.subcommand == "component-mc") return cmd_component_mc(config, out, err);
    if (config.subcommand == "epidemic") return cmd_epidemic(config, out, err);
    if (config.subcommand == "sweep") return cmd_sweep(config, out, err);
    if (config.subcommand == "table2") return cmd_table2(config, out, err);
    err << "unknown subcommand\n";
    return 2;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig || e.kind() == ErrorKind::InvalidParams ? 2 : 1;
  }
}

}  // namespace ctrace
