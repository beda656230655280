#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "confbayes/models.hpp"
#include "confbayes/scores.hpp"

namespace confbayes {

enum class Engine { Full, FullLoo, Analytic, Split, Hppd };

// One method of the study: an engine with the score it uses (analytic CP
// always uses BRes; HPPD uses none).
struct MethodId {
  Engine engine;
  std::optional<ScoreKind> score;

  std::string engine_name() const;
  std::string score_name() const;  // "none" for HPPD
  std::string label() const;       // "engine/score"
  friend bool operator==(const MethodId&, const MethodId&) = default;
};

// Parses "full/bres", "analytic", "split/ppd", "hppd", "full-loo".
MethodId parse_method(const std::string& text);

// full x {ppd, bres, qbres, dbres}, analytic, split x {bres, qbres, ppd, dbres}, hppd.
std::vector<MethodId> default_methods();

struct StudyConfig {
  int n = 20;
  int m = 20;
  double theta_true = 0.7;
  BetaPrior prior{0.5, 0.5};
  double alpha = 0.1;
  int n_rep = 1000;
  std::vector<MethodId> methods = default_methods();
  std::uint64_t master_seed = 20240601;
  double train_fraction = 0.5;
  std::size_t loo_draws = 1000;
  std::string study_id = "study";

  void validate() const;
};

struct MethodRecord {
  bool covered = false;
  double width = 0.0;
  bool failed = false;
  double runtime_ms = 0.0;
  std::string error;
};

struct ReplicationRecord {
  std::vector<MethodRecord> methods;  // aligned with StudyConfig::methods
  std::vector<double> data;
  double future = 0.0;
  // Set when both analytic and full/bres ran and their sets differ.
  bool analytic_grid_mismatch = false;
};

ReplicationRecord run_replication(const StudyConfig& cfg, int rep_index);

struct MethodSummary {
  MethodId method;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_width = 0.0;
  double mean_relative_width = 0.0;  // width / (m + 1)
  double width_se = 0.0;
  double mean_runtime_ms = 0.0;
  int failures = 0;
};

struct SimReport {
  StudyConfig config;
  std::vector<MethodSummary> methods;
  int analytic_grid_mismatches = 0;
  double elapsed_ms = 0.0;

  const MethodSummary& summary(const MethodId& id) const;
};

// Replications are spread over `workers` threads; the report depends only on
// the config.
SimReport run_study(const StudyConfig& cfg, int workers = 1);

struct SweepCell {
  double a;
  double b;
  SimReport report;
};

std::vector<double> default_sweep_grid();  // {0.5, 1, 2, 5, 10, 20, 30}

// run_study per (a, b) cell with the same master seed in every cell.
std::vector<SweepCell> prior_sweep(const StudyConfig& cfg, const std::vector<double>& a_grid,
                                   const std::vector<double>& b_grid, int workers = 1);

// CSV with the columns study_id, method, score, n, m, theta, a, b, alpha,
// n_rep, coverage, coverage_se, mean_width, mean_rel_width, width_se,
// runtime_ms. runtime_ms is written as NA unless record_timing is set, which
// keeps the file a pure function of the config.
void write_csv_header(std::ostream& out);
void write_csv_rows(std::ostream& out, const SimReport& report, bool record_timing = false);

// One parsed row of the CSV above; runtime_ms is empty when written as NA.
struct CsvRow {
  std::string study_id, method, score;
  int n = 0, m = 0, n_rep = 0;
  double theta = 0, a = 0, b = 0, alpha = 0;
  double coverage = 0, coverage_se = 0, mean_width = 0, mean_rel_width = 0, width_se = 0;
  std::optional<double> runtime_ms;
};

// Reads a file written by write_csv_header/write_csv_rows. Columns are found
// by name; a missing column or a malformed cell throws InvalidInput.
std::vector<CsvRow> read_csv(std::istream& in);

}  // namespace confbayes
