#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace confbayes {

// Exchangeable univariate outcomes. Real-valued for the Normal model, or
// bounded counts 0..m with a common trial size m for the Binomial model.
// Outcomes are stored as doubles in both cases; count samples are validated
// to hold exact integers.
class ObservedSample {
 public:
  static ObservedSample real(std::vector<double> outcomes);
  static ObservedSample counts(std::vector<int> outcomes, int trial_size);
  // Counts given as doubles; each must be an exact integer in [0, m].
  static ObservedSample counts(std::vector<double> outcomes, int trial_size);

  std::size_t size() const noexcept { return outcomes_.size(); }
  std::span<const double> outcomes() const noexcept { return outcomes_; }
  double operator[](std::size_t i) const { return outcomes_[i]; }
  std::optional<int> trial_size() const noexcept { return trial_size_; }
  bool is_counts() const noexcept { return trial_size_.has_value(); }

  double sum() const noexcept;
  double sum_of_squares() const noexcept;

  // D ∪ {y}
  ObservedSample augmented(double y) const;
  // D \ {z_i}
  ObservedSample without(std::size_t i) const;

 private:
  ObservedSample(std::vector<double> outcomes, std::optional<int> trial_size);

  std::vector<double> outcomes_;
  std::optional<int> trial_size_;
};

struct ContinuousInterval {
  double lower;
  double upper;
  bool open_ends = false;
};

struct DiscreteSet {
  std::vector<int> members;  // strictly increasing
};

// Either an interval of the real line or an explicit finite set of integers.
class PredictionSet {
 public:
  static PredictionSet interval(double lower, double upper, bool open_ends = false);
  static PredictionSet whole_line();
  static PredictionSet discrete(std::vector<int> members);
  static PredictionSet integer_range(int first, int last);  // empty if last < first
  static PredictionSet empty() { return discrete({}); }

  bool is_interval() const noexcept {
    return std::holds_alternative<ContinuousInterval>(kind_);
  }
  bool is_discrete() const noexcept { return !is_interval(); }
  const ContinuousInterval& as_interval() const { return std::get<ContinuousInterval>(kind_); }
  const std::vector<int>& members() const { return std::get<DiscreteSet>(kind_).members; }

  // Lebesgue length for intervals; cardinality for discrete sets.
  double size() const noexcept;
  bool is_empty() const noexcept;
  bool contains(double y) const noexcept;

  // Intersection with {0..m}.
  PredictionSet restricted_to_support(int m) const;

  friend bool operator==(const PredictionSet& a, const PredictionSet& b);

 private:
  explicit PredictionSet(std::variant<ContinuousInterval, DiscreteSet> kind) : kind_(std::move(kind)) {}
  std::variant<ContinuousInterval, DiscreteSet> kind_;
};

std::string to_string(const PredictionSet& set);

// Conformity: higher = more plausible. NonConformity: lower = more plausible.
enum class ScoreOrientation { Conformity, NonConformity };

// True when a candidate with score `candidate` is at least as plausible as an
// observed point with score `observed`.
inline bool at_least_as_plausible(double candidate, double observed, ScoreOrientation o) noexcept {
  return o == ScoreOrientation::Conformity ? observed <= candidate : observed >= candidate;
}

// k-th smallest element, 1-based.
double order_statistic(std::span<const double> values, std::size_t k);

// R_(ceil((n+1)(1-alpha))); +infinity when the rank exceeds n.
double conformal_quantile_nonconformity(std::span<const double> scores, double alpha);

// R_(floor(alpha(n+1))); -infinity when the rank is below 1.
double conformal_quantile_conformity(std::span<const double> scores, double alpha);

// Orientation-aware threshold: conformity uses the floor rule, non-conformity
// the ceiling rule.
double conformal_threshold(std::span<const double> scores, double alpha, ScoreOrientation o);

// Rank helpers shared by the quantile rules; both return 0 / n+1 past the ends.
std::size_t conformity_rank(std::size_t n, double alpha);
std::size_t nonconformity_rank(std::size_t n, double alpha);

// Whether `score` passes `threshold` under the orientation.
inline bool passes_threshold(double score, double threshold, ScoreOrientation o) noexcept {
  return o == ScoreOrientation::Conformity ? score >= threshold : score <= threshold;
}

void validate_alpha(double alpha);
void reject_nan(std::span<const double> values, const char* what);

// Per-candidate record kept by the grid engines.
struct CandidateTrace {
  double candidate = 0.0;
  double score = 0.0;
  double p_value = 0.0;
  bool included = false;
  std::optional<double> ess;
  int degenerate_scores = 0;
};

struct Diagnostics {
  std::optional<double> threshold;
  bool whole_space = false;
  bool empty_set = false;
  bool interior_gap = false;
  int degenerate_weights = 0;
  std::vector<CandidateTrace> candidates;
  std::vector<std::string> warnings;
};

struct ConformalResult {
  PredictionSet set;
  Diagnostics diagnostics;
};

}  // namespace confbayes
