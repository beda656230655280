#include "confbayes/sim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "confbayes/analytic_cp.hpp"
#include "confbayes/errors.hpp"
#include "confbayes/full_cp.hpp"
#include "confbayes/rng.hpp"
#include "confbayes/sampler.hpp"
#include "confbayes/split_cp.hpp"

namespace confbayes {

namespace {

using Clock = std::chrono::steady_clock;

std::string engine_text(Engine e) {
  switch (e) {
    case Engine::Full: return "full";
    case Engine::FullLoo: return "full-loo";
    case Engine::Analytic: return "analytic";
    case Engine::Split: return "split";
    case Engine::Hppd: return "hppd";
  }
  return "unknown";
}

PredictionSet run_method(const StudyConfig& cfg, const MethodId& method, const ObservedSample& data,
                         int rep_index) {
  const Prior prior = cfg.prior;
  switch (method.engine) {
    case Engine::Full:
      return full_cp_grid(data, prior, ConformityScoreSpec(*method.score), CandidateGrid::support(cfg.m), cfg.alpha)
          .set;
    case Engine::FullLoo: {
      const auto seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(rep_index), stable_hash("full-loo")});
      const auto draws = sample_posterior(data, prior, cfg.loo_draws, seed);
      return full_cp_loo(data, prior, draws, CandidateGrid::support(cfg.m), cfg.alpha).set;
    }
    case Engine::Analytic:
      return analytic_full_cp(data, prior, cfg.alpha).set;
    case Engine::Split: {
      SplitConfig split;
      split.train_fraction = cfg.train_fraction;
      split.seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(rep_index), stable_hash(method.label())});
      return split_cp(data, prior, split, cfg.alpha, *method.score).set;
    }
    case Engine::Hppd:
      return hppd_interval(fit_ppd(data, prior), cfg.alpha);
  }
  throw InvalidInput("unknown engine");
}

std::string number(double x) { return fmt::format("{}", x); }

}  // namespace

std::string MethodId::engine_name() const { return engine_text(engine); }

std::string MethodId::score_name() const { return score ? std::string(to_string(*score)) : "none"; }

std::string MethodId::label() const {
  if (engine == Engine::Hppd || engine == Engine::FullLoo) return engine_name();
  return engine_name() + "/" + score_name();
}

MethodId parse_method(const std::string& text) {
  const auto slash = text.find('/');
  const std::string engine = text.substr(0, slash);
  const std::optional<std::string> score =
      slash == std::string::npos ? std::nullopt : std::optional<std::string>(text.substr(slash + 1));
  if (engine == "hppd" || engine == "full-loo") {
    if (score && !((engine == "full-loo" && *score == "ppd") || (engine == "hppd" && *score == "none"))) {
      throw InvalidInput("method '" + engine + "' takes no score");
    }
    return engine == "hppd" ? MethodId{Engine::Hppd, std::nullopt} : MethodId{Engine::FullLoo, ScoreKind::PPD};
  }
  if (engine == "analytic") {
    if (score && *score != "bres") throw InvalidInput("analytic CP uses the bres score");
    return {Engine::Analytic, ScoreKind::BRes};
  }
  if (engine == "full" || engine == "split") {
    if (!score) throw InvalidInput("method '" + engine + "' needs a score, e.g. " + engine + "/bres");
    return {engine == "full" ? Engine::Full : Engine::Split, parse_score_kind(*score)};
  }
  throw InvalidInput("unknown method '" + text + "'");
}

std::vector<MethodId> default_methods() {
  return {
      {Engine::Full, ScoreKind::PPD},    {Engine::Full, ScoreKind::BRes},   {Engine::Full, ScoreKind::QBRes},
      {Engine::Full, ScoreKind::DBRes},  {Engine::Analytic, ScoreKind::BRes}, {Engine::Split, ScoreKind::BRes},
      {Engine::Split, ScoreKind::QBRes}, {Engine::Split, ScoreKind::PPD},   {Engine::Split, ScoreKind::DBRes},
      {Engine::Hppd, std::nullopt},
  };
}

void StudyConfig::validate() const {
  if (n < 1) throw InvalidInput("n must be at least 1");
  if (m < 1) throw DomainError("m must be at least 1");
  if (!(theta_true >= 0.0 && theta_true <= 1.0)) throw DomainError("theta must lie in [0, 1]");
  prior.validate();
  validate_alpha(alpha);
  if (n_rep < 1) throw InvalidInput("n_rep must be at least 1");
  if (methods.empty()) throw InvalidInput("no methods configured");
  if (loo_draws < 1) throw InvalidInput("loo_draws must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("train fraction must lie in (0, 1)");
}

ReplicationRecord run_replication(const StudyConfig& cfg, int rep_index) {
  cfg.validate();
  Rng rng(derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(rep_index)}));
  ReplicationRecord rec;
  rec.data.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) rec.data.push_back(rng.binomial(cfg.m, cfg.theta_true));
  rec.future = rng.binomial(cfg.m, cfg.theta_true);
  const ObservedSample data = ObservedSample::counts(rec.data, cfg.m);

  std::optional<PredictionSet> analytic;
  std::optional<PredictionSet> full_bres;
  rec.methods.reserve(cfg.methods.size());
  for (const auto& method : cfg.methods) {
    MethodRecord r;
    const auto start = Clock::now();
    try {
      const PredictionSet set = run_method(cfg, method, data, rep_index);
      r.covered = set.contains(rec.future);
      r.width = set.size();
      if (method.engine == Engine::Analytic) analytic = set;
      if (method.engine == Engine::Full && method.score == ScoreKind::BRes) full_bres = set;
    } catch (const Error& e) {
      r.failed = true;
      r.error = e.what();
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    rec.methods.push_back(std::move(r));
  }
  rec.analytic_grid_mismatch = analytic && full_bres && !(*analytic == *full_bres);
  return rec;
}

const MethodSummary& SimReport::summary(const MethodId& id) const {
  for (const auto& s : methods) {
    if (s.method == id) return s;
  }
  throw InvalidInput("method " + id.label() + " not in report");
}

SimReport run_study(const StudyConfig& cfg, int workers) {
  cfg.validate();
  if (workers < 1) throw InvalidInput("workers must be at least 1");
  const auto start = Clock::now();
  std::vector<ReplicationRecord> records(static_cast<std::size_t>(cfg.n_rep));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int rep = next++; rep < cfg.n_rep; rep = next++) records[rep] = run_replication(cfg, rep);
  };
  const int threads = std::min(workers, cfg.n_rep);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  SimReport report;
  report.config = cfg;
  const double reps = cfg.n_rep;
  for (std::size_t j = 0; j < cfg.methods.size(); ++j) {
    MethodSummary s;
    s.method = cfg.methods[j];
    double covered = 0.0;
    double width_sum = 0.0;
    double width_sq = 0.0;
    double runtime = 0.0;
    for (const auto& rec : records) {
      const auto& r = rec.methods[j];
      runtime += r.runtime_ms;
      if (r.failed) {
        ++s.failures;
        continue;
      }
      covered += r.covered ? 1.0 : 0.0;
      width_sum += r.width;
      width_sq += r.width * r.width;
    }
    // Failed replications count as misses and are left out of the width.
    const double ok = reps - s.failures;
    s.coverage = covered / reps;
    s.coverage_se = std::sqrt(s.coverage * (1.0 - s.coverage) / reps);
    s.mean_width = ok > 0 ? width_sum / ok : std::nan("");
    s.mean_relative_width = s.mean_width / (cfg.m + 1);
    const double var = ok > 1 ? std::max(0.0, (width_sq - ok * s.mean_width * s.mean_width) / (ok - 1)) : 0.0;
    s.width_se = ok > 0 ? std::sqrt(var / ok) : std::nan("");
    s.mean_runtime_ms = runtime / reps;
    report.methods.push_back(s);
  }
  for (const auto& rec : records) report.analytic_grid_mismatches += rec.analytic_grid_mismatch ? 1 : 0;
  report.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return report;
}

std::vector<double> default_sweep_grid() { return {0.5, 1, 2, 5, 10, 20, 30}; }

std::vector<SweepCell> prior_sweep(const StudyConfig& cfg, const std::vector<double>& a_grid,
                                   const std::vector<double>& b_grid, int workers) {
  if (a_grid.empty() || b_grid.empty()) throw InvalidInput("sweep grids must be non-empty");
  std::vector<SweepCell> cells;
  cells.reserve(a_grid.size() * b_grid.size());
  for (double a : a_grid) {
    for (double b : b_grid) {
      StudyConfig cell = cfg;
      cell.prior = BetaPrior{a, b};
      cell.study_id = fmt::format("{}:a={};b={}", cfg.study_id, a, b);
      cells.push_back({a, b, run_study(cell, workers)});
    }
  }
  return cells;
}

void write_csv_header(std::ostream& out) {
  out << "study_id,method,score,n,m,theta,a,b,alpha,n_rep,coverage,coverage_se,mean_width,mean_rel_width,"
         "width_se,runtime_ms\n";
}

void write_csv_rows(std::ostream& out, const SimReport& report, bool record_timing) {
  const auto& c = report.config;
  for (const auto& s : report.methods) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", c.study_id, s.method.engine_name(),
                       s.method.score_name(), c.n, c.m, number(c.theta_true), number(c.prior.a), number(c.prior.b),
                       number(c.alpha), c.n_rep, number(s.coverage), number(s.coverage_se), number(s.mean_width),
                       number(s.mean_relative_width), number(s.width_se),
                       record_timing ? number(s.mean_runtime_ms) : std::string("NA"));
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_cell(const std::string& text, const std::string& column) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw InvalidInput("bad value '" + text + "' in column " + column);
  return value;
}

}  // namespace

std::vector<CsvRow> read_csv(std::istream& in) {
  static const char* kColumns[] = {"study_id", "method",   "score",       "n",          "m",
                                   "theta",    "a",        "b",           "alpha",      "n_rep",
                                   "coverage", "coverage_se", "mean_width", "mean_rel_width", "width_se",
                                   "runtime_ms"};
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < header.size(); ++i) where[header[i]] = i;
  for (const char* col : kColumns) {
    if (!where.count(col)) throw InvalidInput(std::string("CSV is missing column ") + col);
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) {
      throw InvalidInput("CSV row has " + std::to_string(f.size()) + " fields, header has " +
                         std::to_string(header.size()));
    }
    auto cell = [&](const char* col) -> const std::string& { return f[where.at(col)]; };
    auto real = [&](const char* col) { return parse_cell<double>(cell(col), col); };
    auto integer = [&](const char* col) { return parse_cell<int>(cell(col), col); };
    CsvRow r;
    r.study_id = cell("study_id");
    r.method = cell("method");
    r.score = cell("score");
    r.n = integer("n");
    r.m = integer("m");
    r.n_rep = integer("n_rep");
    r.theta = real("theta");
    r.a = real("a");
    r.b = real("b");
    r.alpha = real("alpha");
    r.coverage = real("coverage");
    r.coverage_se = real("coverage_se");
    r.mean_width = real("mean_width");
    r.mean_rel_width = real("mean_rel_width");
    r.width_se = real("width_se");
    if (cell("runtime_ms") != "NA") r.runtime_ms = real("runtime_ms");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace confbayes
