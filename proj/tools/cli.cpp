#include "cli.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "confbayes/analytic_cp.hpp"
#include "confbayes/errors.hpp"
#include "confbayes/full_cp.hpp"
#include "confbayes/sampler.hpp"
#include "confbayes/sim.hpp"
#include "confbayes/split_cp.hpp"

namespace confbayes::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSeedEnv = "CONFBAYES_SEED";

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

std::uint64_t parse_seed(const std::string& text, const char* what) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InvalidInput(fmt::format("{} '{}' is not an unsigned integer", what, text));
  return value;
}

// Flag, then the environment variable, then the built-in default.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value) {
  if (flag->count() > 0) return flag_value;
  if (const char* env = std::getenv(kSeedEnv); env && *env) return parse_seed(env, kSeedEnv);
  return StudyConfig{}.master_seed;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

// One outcome per line; a non-numeric first line is taken as a header.
std::vector<double> read_outcomes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read data file '" + path + "'");
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string field = trim(line.substr(0, line.find(',')));
    if (field.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    const bool ok = ec == std::errc() && ptr == field.data() + field.size();
    if (!ok && !seen_content) {
      seen_content = true;
      continue;
    }
    if (!ok) throw InvalidInput(fmt::format("{}:{}: '{}' is not a number", path, line_no, field));
    seen_content = true;
    values.push_back(v);
  }
  return values;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw InvalidInput("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path sibling(const fs::path& out, const char* suffix) {
  fs::path p = out;
  p += suffix;
  return p;
}

json bound(double x) {
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  return x;
}

json set_json(const PredictionSet& set) {
  if (set.is_discrete()) return {{"type", "discrete"}, {"members", set.members()}, {"size", set.size()}};
  const auto& iv = set.as_interval();
  return {{"type", "interval"},
          {"lower", bound(iv.lower)},
          {"upper", bound(iv.upper)},
          {"open_ends", iv.open_ends},
          {"length", bound(set.size())}};
}

json diagnostics_json(const Diagnostics& d) {
  json out = {{"whole_space", d.whole_space},
              {"empty_set", d.empty_set},
              {"interior_gap", d.interior_gap},
              {"degenerate_weights", d.degenerate_weights},
              {"warnings", d.warnings}};
  out["threshold"] = d.threshold ? bound(*d.threshold) : json(nullptr);
  json candidates = json::array();
  for (const auto& c : d.candidates) {
    json row = {{"y", c.candidate}, {"score", bound(c.score)}, {"p_value", c.p_value}, {"included", c.included}};
    if (c.ess) row["ess"] = *c.ess;
    if (c.degenerate_scores > 0) row["degenerate_scores"] = c.degenerate_scores;
    candidates.push_back(std::move(row));
  }
  out["candidates"] = std::move(candidates);
  return out;
}

json config_json(const StudyConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(m.label());
  return {{"study_id", c.study_id},
          {"n", c.n},
          {"m", c.m},
          {"theta", c.theta_true},
          {"prior", {{"a", c.prior.a}, {"b", c.prior.b}}},
          {"alpha", c.alpha},
          {"n_rep", c.n_rep},
          {"methods", methods},
          {"master_seed", c.master_seed},
          {"train_fraction", c.train_fraction},
          {"loo_draws", c.loo_draws}};
}

StudyConfig config_from_json(const json& j) {
  try {
    StudyConfig c;
    c.study_id = j.at("study_id").get<std::string>();
    c.n = j.at("n").get<int>();
    c.m = j.at("m").get<int>();
    c.theta_true = j.at("theta").get<double>();
    c.prior = BetaPrior{j.at("prior").at("a").get<double>(), j.at("prior").at("b").get<double>()};
    c.alpha = j.at("alpha").get<double>();
    c.n_rep = j.at("n_rep").get<int>();
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.train_fraction = j.at("train_fraction").get<double>();
    c.loo_draws = j.at("loo_draws").get<std::size_t>();
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed study config: ") + e.what());
  }
}

json read_manifest(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("manifest '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("command", "") != command) {
    throw InvalidInput("manifest '" + path + "' was written by '" + j.value("command", "?") + "', not '" + command + "'");
  }
  return j;
}

std::vector<MethodId> parse_methods(const std::vector<std::string>& names) {
  std::vector<MethodId> out;
  for (const auto& name : names) out.push_back(parse_method(name));
  return out;
}

// ---------------------------------------------------------------------------

struct IntervalArgs {
  std::string model = "binomial";
  int m = 0;
  double prior_a = 0.0;
  double prior_b = 0.0;
  double prior_mu = 0.0;
  double prior_tau2 = 1.0;
  double alpha = 0.1;
  std::string method = "analytic";
  std::string score = "bres";
  double alpha_inner = 0.0;
  std::string data_path;
  std::vector<double> values;
  double train_frac = 0.5;
  std::uint64_t seed = 0;
  std::size_t draws = 5000;
  std::size_t grid_points = 2001;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  bool json_out = false;
  std::string out;
};

struct IntervalOptions {
  CLI::Option* m;
  CLI::Option* prior_a;
  CLI::Option* prior_b;
  CLI::Option* alpha_inner;
  CLI::Option* seed;
  CLI::Option* grid_lo;
  CLI::Option* grid_hi;
};

int cmd_interval(const IntervalArgs& a, const IntervalOptions& o, std::ostream& out) {
  const std::string started = timestamp();
  std::vector<double> values = a.values;
  if (!a.data_path.empty()) {
    if (!values.empty()) throw InvalidInput("give either --data or --values, not both");
    values = read_outcomes(a.data_path);
  }
  if (values.empty()) throw InvalidInput("no outcomes supplied (use --data or --values)");

  const bool binomial = a.model == "binomial";
  if (binomial && o.m->count() == 0) throw InvalidInput("--m is required for the binomial model");
  const ObservedSample data = binomial ? ObservedSample::counts(values, a.m) : ObservedSample::real(values);
  Prior prior;
  if (binomial) {
    prior = BetaPrior{o.prior_a->count() ? a.prior_a : 0.5, o.prior_b->count() ? a.prior_b : 0.5};
  } else {
    prior = NormalGammaPrior{a.prior_mu, a.prior_tau2, o.prior_a->count() ? a.prior_a : 1.0,
                             o.prior_b->count() ? a.prior_b : 1.0};
  }
  std::visit([](const auto& p) { p.validate(); }, prior);
  validate_alpha(a.alpha);

  const bool custom_grid = o.grid_lo->count() && o.grid_hi->count();
  if (binomial && custom_grid) throw InvalidInput("--grid-lo/--grid-hi apply to the normal model only");
  const CandidateGrid grid = custom_grid ? CandidateGrid::uniform(a.grid_lo, a.grid_hi, a.grid_points)
                                         : CandidateGrid::default_for(data, prior);
  const ScoreKind kind = parse_score_kind(a.score);
  const std::optional<double> inner = o.alpha_inner->count() ? std::optional<double>(a.alpha_inner) : std::nullopt;
  const ConformityScoreSpec spec(kind, inner);
  const std::uint64_t seed = resolve_seed(o.seed, a.seed);

  ConformalResult result{PredictionSet::empty(), {}};
  std::string score_used = a.score;
  bool uses_seed = false;
  if (a.method == "analytic") {
    if (kind != ScoreKind::BRes) throw InvalidInput("the analytic method uses the bres score");
    result = analytic_full_cp(data, prior, a.alpha);
  } else if (a.method == "full") {
    result = full_cp_grid(data, prior, spec, grid, a.alpha);
  } else if (a.method == "full-pvalue") {
    result = full_cp_pvalue(data, prior, spec, grid, a.alpha);
  } else if (a.method == "full-loo") {
    const auto draws = sample_posterior(data, prior, a.draws, seed);
    result = full_cp_loo(data, prior, draws, grid, a.alpha);
    score_used = "ppd";
    uses_seed = true;
  } else if (a.method == "split") {
    SplitConfig cfg;
    cfg.train_fraction = a.train_frac;
    cfg.seed = seed;
    result = split_cp(data, prior, cfg, a.alpha, kind, grid);
    uses_seed = true;
  } else if (a.method == "hppd") {
    result.set = hppd_interval(fit_ppd(data, prior), a.alpha);
    score_used = "none";
  } else {
    throw InvalidInput("unknown method '" + a.method + "'");
  }

  json report = {{"model", a.model},
                 {"method", a.method},
                 {"score", score_used},
                 {"alpha", a.alpha},
                 {"n", data.size()},
                 {"set", set_json(result.set)},
                 {"diagnostics", diagnostics_json(result.diagnostics)}};
  if (binomial) report["m"] = a.m;
  if (const auto* beta = std::get_if<BetaPrior>(&prior)) {
    report["prior"] = {{"a", beta->a}, {"b", beta->b}};
  } else {
    const auto& ng = std::get<NormalGammaPrior>(prior);
    report["prior"] = {{"mu", ng.mu}, {"tau2", ng.tau2}, {"a", ng.a}, {"b", ng.b}};
  }
  if (uses_seed) report["seed"] = seed;

  if (a.json_out) {
    out << report.dump(2) << "\n";
  } else {
    out << fmt::format("{} CP ({} score), alpha = {}\n", a.method, score_used, a.alpha);
    out << "set: " << to_string(result.set) << "\n";
    for (const auto& w : result.diagnostics.warnings) out << "warning: " << w << "\n";
  }
  if (!a.out.empty()) {
    const fs::path path(a.out);
    write_atomic(path, report.dump(2) + "\n");
    json manifest = {{"command", "interval"},
                     {"tool_version", kToolVersion},
                     {"config", report},
                     {"seeds", uses_seed ? json{{"seed", seed}} : json::object()},
                     {"started_at", started},
                     {"finished_at", timestamp()},
                     {"outputs", {path.string()}}};
    write_atomic(sibling(path, ".manifest.json"), manifest.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct StudyArgs {
  StudyConfig cfg;
  double prior_a = 0.5;
  double prior_b = 0.5;
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  bool record_timing = false;
  bool json_out = false;
  std::string from_manifest;
  std::vector<double> a_grid = default_sweep_grid();
  std::vector<double> b_grid = default_sweep_grid();
};

void print_summary(std::ostream& out, const SimReport& r) {
  out << fmt::format("{:<16} {:>9} {:>9} {:>10} {:>9}\n", "method", "coverage", "se", "rel.width", "failures");
  for (const auto& s : r.methods) {
    out << fmt::format("{:<16} {:>9.4f} {:>9.4f} {:>10.4f} {:>9}\n", s.method.label(), s.coverage, s.coverage_se,
                       s.mean_relative_width, s.failures);
  }
}

json report_json(const SimReport& r) {
  json rows = json::array();
  for (const auto& s : r.methods) {
    rows.push_back({{"method", s.method.engine_name()},
                    {"score", s.method.score_name()},
                    {"coverage", s.coverage},
                    {"coverage_se", s.coverage_se},
                    {"mean_width", s.mean_width},
                    {"mean_rel_width", s.mean_relative_width},
                    {"width_se", s.width_se},
                    {"runtime_ms", s.mean_runtime_ms},
                    {"failures", s.failures}});
  }
  return {{"study_id", r.config.study_id}, {"methods", rows}, {"analytic_grid_mismatches", r.analytic_grid_mismatches}};
}

// Writes the CSV, its config echo and the manifest; "-" sends the CSV to
// stdout with no side files.
void emit(const std::string& command, const StudyArgs& a, const json& config, const std::string& csv,
          const json& timings, const std::string& started, std::ostream& out) {
  if (a.out == "-") {
    out << csv;
    return;
  }
  const fs::path path(a.out);
  const fs::path config_path = sibling(path, ".config.json");
  write_atomic(path, csv);
  write_atomic(config_path, config.dump(2) + "\n");
  json manifest = {{"command", command},
                   {"tool_version", kToolVersion},
                   {"config", config},
                   {"seeds", {{"master_seed", config.at("study").at("master_seed")}}},
                   {"workers", a.workers},
                   {"record_timing", a.record_timing},
                   {"started_at", started},
                   {"finished_at", timestamp()},
                   {"timings", timings},
                   {"outputs", {path.string(), config_path.string()}}};
  write_atomic(sibling(path, ".manifest.json"), manifest.dump(2) + "\n");
}

void resolve_study(StudyArgs& a, const CLI::Option* seed_opt, const std::string& command, bool sweep) {
  if (!a.from_manifest.empty()) {
    const json manifest = read_manifest(a.from_manifest, command);
    const json& config = manifest.at("config");
    a.cfg = config_from_json(config.at("study"));
    if (sweep) {
      a.a_grid = config.at("a_grid").get<std::vector<double>>();
      a.b_grid = config.at("b_grid").get<std::vector<double>>();
    }
    return;
  }
  a.cfg.prior = BetaPrior{a.prior_a, a.prior_b};
  if (!a.methods.empty()) {
    a.cfg.methods = parse_methods(a.methods);
  } else if (sweep) {
    a.cfg.methods = {{Engine::Hppd, std::nullopt}, {Engine::Analytic, ScoreKind::BRes}};
  }
  a.cfg.master_seed = resolve_seed(seed_opt, a.seed);
  a.cfg.validate();
}

int cmd_simulate(StudyArgs& a, const CLI::Option* seed_opt, std::ostream& out) {
  const std::string started = timestamp();
  resolve_study(a, seed_opt, "simulate", false);
  const SimReport report = run_study(a.cfg, a.workers);
  std::ostringstream csv;
  write_csv_header(csv);
  write_csv_rows(csv, report, a.record_timing);
  json timings = {{"elapsed_ms", report.elapsed_ms}, {"per_method_ms", json::object()}};
  for (const auto& s : report.methods) timings["per_method_ms"][s.method.label()] = s.mean_runtime_ms;
  emit("simulate", a, {{"study", config_json(a.cfg)}}, csv.str(), timings, started, out);
  if (a.out != "-") {
    if (a.json_out) {
      out << report_json(report).dump(2) << "\n";
    } else {
      print_summary(out, report);
      if (report.analytic_grid_mismatches > 0) {
        out << fmt::format("warning: analytic and full/bres sets differ in {} replications\n",
                           report.analytic_grid_mismatches);
      }
    }
  }
  return 0;
}

int cmd_sweep(StudyArgs& a, const CLI::Option* seed_opt, std::ostream& out) {
  const std::string started = timestamp();
  if (a.cfg.study_id == "study") a.cfg.study_id = "sweep";
  resolve_study(a, seed_opt, "sweep", true);
  const auto cells = prior_sweep(a.cfg, a.a_grid, a.b_grid, a.workers);
  std::ostringstream csv;
  write_csv_header(csv);
  json timings = {{"cells", json::array()}};
  json summary = json::array();
  for (const auto& cell : cells) {
    write_csv_rows(csv, cell.report, a.record_timing);
    timings["cells"].push_back({{"a", cell.a}, {"b", cell.b}, {"elapsed_ms", cell.report.elapsed_ms}});
    summary.push_back(report_json(cell.report));
  }
  const json config = {{"study", config_json(a.cfg)}, {"a_grid", a.a_grid}, {"b_grid", a.b_grid}};
  emit("sweep", a, config, csv.str(), timings, started, out);
  if (a.out != "-") {
    if (a.json_out) {
      out << summary.dump(2) << "\n";
    } else {
      for (const auto& cell : cells) {
        for (const auto& s : cell.report.methods) {
          out << fmt::format("a={:<5} b={:<5} {:<16} coverage {:.4f}  rel.width {:.4f}\n", cell.a, cell.b,
                             s.method.label(), s.coverage, s.mean_relative_width);
        }
      }
    }
  }
  return 0;
}

void add_study_options(CLI::App* sub, StudyArgs& a, CLI::Option*& seed_opt) {
  sub->add_option("--n", a.cfg.n, "Sample size per replication")->capture_default_str();
  sub->add_option("--m", a.cfg.m, "Binomial trials")->capture_default_str();
  sub->add_option("--theta", a.cfg.theta_true, "True success probability")->capture_default_str();
  sub->add_option("--prior-a", a.prior_a, "Beta prior a")->capture_default_str();
  sub->add_option("--prior-b", a.prior_b, "Beta prior b")->capture_default_str();
  sub->add_option("--alpha", a.cfg.alpha, "Miscoverage level")->capture_default_str();
  sub->add_option("--reps", a.cfg.n_rep, "Monte Carlo replications")->capture_default_str();
  sub->add_option("--methods", a.methods, "Methods such as full/bres, analytic, split/ppd, hppd, full-loo")
      ->delimiter(',');
  sub->add_option("--train-frac", a.cfg.train_fraction, "Split CP training fraction")->capture_default_str();
  sub->add_option("--loo-draws", a.cfg.loo_draws, "Posterior draws for full-loo")->capture_default_str();
  sub->add_option("--study-id", a.cfg.study_id, "Value of the study_id column");
  seed_opt = sub->add_option("--seed", a.seed, std::string("Master seed (fallback: $") + kSeedEnv + ")");
  sub->add_option("--workers", a.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--out", a.out, "Output CSV path, or - for stdout")->capture_default_str();
  sub->add_flag("--record-timing", a.record_timing, "Write measured runtimes into the CSV");
  sub->add_flag("--json", a.json_out, "Machine-readable summary on stdout");
  sub->add_option("--from-manifest", a.from_manifest, "Re-run the configuration stored in a manifest")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian conformal prediction sets and coverage studies", "confbayes"};
  app.set_config("--config", "", "TOML or INI file with option values (flags take precedence)");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  IntervalArgs ia;
  IntervalOptions io{};
  auto* interval = app.add_subcommand("interval", "Prediction set for supplied data");
  interval->add_option("--model", ia.model, "binomial or normal")
      ->check(CLI::IsMember({"binomial", "normal"}))
      ->capture_default_str();
  io.m = interval->add_option("--m", ia.m, "Binomial trials");
  io.prior_a = interval->add_option("--prior-a", ia.prior_a, "Beta a, or Gamma shape for normal (default 0.5 / 1)");
  io.prior_b = interval->add_option("--prior-b", ia.prior_b, "Beta b, or Gamma rate for normal (default 0.5 / 1)");
  interval->add_option("--prior-mu", ia.prior_mu, "Normal prior mean")->capture_default_str();
  interval->add_option("--prior-tau2", ia.prior_tau2, "Normal prior variance factor")->capture_default_str();
  interval->add_option("--alpha", ia.alpha, "Miscoverage level")->capture_default_str();
  interval->add_option("--method", ia.method, "analytic, full, full-pvalue, full-loo, split or hppd")
      ->check(CLI::IsMember({"analytic", "full", "full-pvalue", "full-loo", "split", "hppd"}))
      ->capture_default_str();
  interval->add_option("--score", ia.score, "ppd, bres, qbres or dbres")->capture_default_str();
  io.alpha_inner = interval->add_option("--alpha-inner", ia.alpha_inner, "Inner level for qbres (default alpha)");
  interval->add_option("--data", ia.data_path, "CSV file, one outcome per line, optional header");
  interval->add_option("--values", ia.values, "Comma-separated outcomes")->delimiter(',');
  interval->add_option("--train-frac", ia.train_frac, "Split CP training fraction")->capture_default_str();
  io.seed = interval->add_option("--seed", ia.seed, std::string("Seed for split or full-loo (fallback: $") + kSeedEnv + ")");
  interval->add_option("--draws", ia.draws, "Posterior draws for full-loo")->capture_default_str();
  interval->add_option("--grid-points", ia.grid_points, "Candidate grid size (normal)")->capture_default_str();
  io.grid_lo = interval->add_option("--grid-lo", ia.grid_lo, "Candidate grid lower end (normal)");
  io.grid_hi = interval->add_option("--grid-hi", ia.grid_hi, "Candidate grid upper end (normal)");
  interval->add_flag("--json", ia.json_out, "JSON result on stdout");
  interval->add_option("--out", ia.out, "Also write the JSON result (and a manifest) to this path");

  StudyArgs sa;
  sa.out = "simulate.csv";
  CLI::Option* sim_seed = nullptr;
  auto* simulate = app.add_subcommand("simulate", "Coverage and width study over repeated Binomial samples");
  add_study_options(simulate, sa, sim_seed);

  StudyArgs wa;
  wa.out = "sweep.csv";
  CLI::Option* sweep_seed = nullptr;
  auto* sweep = app.add_subcommand("sweep", "Coverage and width over a grid of Beta prior hyperparameters");
  add_study_options(sweep, wa, sweep_seed);
  sweep->add_option("--a-grid", wa.a_grid, "Prior a values")->delimiter(',');
  sweep->add_option("--b-grid", wa.b_grid, "Prior b values")->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (interval->parsed()) return cmd_interval(ia, io, out);
    if (simulate->parsed()) return cmd_simulate(sa, sim_seed, out);
    return cmd_sweep(wa, sweep_seed, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace confbayes::cli
