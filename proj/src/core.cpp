#include "confbayes/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "confbayes/errors.hpp"

namespace confbayes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack for the rank arithmetic so that e.g. 20 * 0.9 lands on 18, not 18.000000000000004.
constexpr double kRankSlack = 1e-9;

void check_count(double y, int m) {
  if (!std::isfinite(y) || y != std::floor(y) || y < 0 || y > m) {
    std::ostringstream msg;
    msg << "count outcome " << y << " is not an integer in [0, " << m << "]";
    throw InvalidInput(msg.str());
  }
}

}  // namespace

ObservedSample::ObservedSample(std::vector<double> outcomes, std::optional<int> trial_size)
    : outcomes_(std::move(outcomes)), trial_size_(trial_size) {
  if (outcomes_.empty()) throw InvalidInput("sample must contain at least one outcome");
  if (trial_size_) {
    if (*trial_size_ < 1) throw InvalidInput("trial size m must be a positive integer");
    for (double y : outcomes_) check_count(y, *trial_size_);
  } else {
    for (double y : outcomes_) {
      if (!std::isfinite(y)) throw InvalidInput("outcomes must be finite reals");
    }
  }
}

ObservedSample ObservedSample::real(std::vector<double> outcomes) {
  return ObservedSample(std::move(outcomes), std::nullopt);
}

ObservedSample ObservedSample::counts(std::vector<int> outcomes, int trial_size) {
  return ObservedSample(std::vector<double>(outcomes.begin(), outcomes.end()), trial_size);
}

ObservedSample ObservedSample::counts(std::vector<double> outcomes, int trial_size) {
  return ObservedSample(std::move(outcomes), trial_size);
}

double ObservedSample::sum() const noexcept {
  return std::accumulate(outcomes_.begin(), outcomes_.end(), 0.0);
}

double ObservedSample::sum_of_squares() const noexcept {
  double s = 0.0;
  for (double y : outcomes_) s += y * y;
  return s;
}

ObservedSample ObservedSample::augmented(double y) const {
  auto next = outcomes_;
  next.push_back(y);
  return ObservedSample(std::move(next), trial_size_);
}

ObservedSample ObservedSample::without(std::size_t i) const {
  if (i >= outcomes_.size()) throw IndexError("deleted index out of range");
  auto next = outcomes_;
  next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
  return ObservedSample(std::move(next), trial_size_);
}

// ---------------------------------------------------------------------------
// PredictionSet

PredictionSet PredictionSet::interval(double lower, double upper, bool open_ends) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw InvalidInput("interval requires lower <= upper");
  }
  return PredictionSet(ContinuousInterval{lower, upper, open_ends});
}

PredictionSet PredictionSet::whole_line() { return interval(-kInf, kInf, true); }

PredictionSet PredictionSet::discrete(std::vector<int> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  return PredictionSet(DiscreteSet{std::move(members)});
}

PredictionSet PredictionSet::integer_range(int first, int last) {
  std::vector<int> members;
  for (int k = first; k <= last; ++k) members.push_back(k);
  return PredictionSet(DiscreteSet{std::move(members)});
}

double PredictionSet::size() const noexcept {
  if (is_interval()) {
    const auto& iv = as_interval();
    return iv.upper - iv.lower;
  }
  return static_cast<double>(members().size());
}

bool PredictionSet::is_empty() const noexcept {
  return is_discrete() && members().empty();
}

bool PredictionSet::contains(double y) const noexcept {
  if (is_interval()) {
    const auto& iv = as_interval();
    if (std::isinf(iv.lower) && std::isinf(iv.upper)) return true;
    return iv.open_ends ? (iv.lower < y && y < iv.upper) : (iv.lower <= y && y <= iv.upper);
  }
  if (y != std::floor(y)) return false;
  const auto& m = members();
  return std::binary_search(m.begin(), m.end(), static_cast<int>(y));
}

PredictionSet PredictionSet::restricted_to_support(int m) const {
  if (is_discrete()) {
    std::vector<int> kept;
    for (int k : members()) {
      if (k >= 0 && k <= m) kept.push_back(k);
    }
    return discrete(std::move(kept));
  }
  const auto& iv = as_interval();
  double lo = std::max(iv.lower, 0.0);
  double hi = std::min(iv.upper, static_cast<double>(m));
  int first = static_cast<int>(std::ceil(lo));
  int last = static_cast<int>(std::floor(hi));
  if (iv.open_ends) {
    if (first == iv.lower) ++first;
    if (last == iv.upper) --last;
  }
  return integer_range(first, last);
}

bool operator==(const PredictionSet& a, const PredictionSet& b) {
  if (a.is_interval() != b.is_interval()) return false;
  if (a.is_interval()) {
    const auto& x = a.as_interval();
    const auto& y = b.as_interval();
    return x.lower == y.lower && x.upper == y.upper && x.open_ends == y.open_ends;
  }
  return a.members() == b.members();
}

std::string to_string(const PredictionSet& set) {
  std::ostringstream out;
  out.precision(17);
  if (set.is_interval()) {
    const auto& iv = set.as_interval();
    out << (iv.open_ends ? '(' : '[') << iv.lower << ", " << iv.upper << (iv.open_ends ? ')' : ']');
  } else {
    out << '{';
    const auto& m = set.members();
    for (std::size_t i = 0; i < m.size(); ++i) out << (i ? ", " : "") << m[i];
    out << '}';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Order statistics and conformal quantiles

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
}

void reject_nan(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (std::isnan(v)) throw InvalidInput(std::string("NaN in ") + what);
  }
}

double order_statistic(std::span<const double> values, std::size_t k) {
  if (k < 1 || k > values.size()) throw IndexError("order statistic rank out of range");
  reject_nan(values, "order statistic input");
  std::vector<double> copy(values.begin(), values.end());
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(copy.begin(), nth, copy.end());
  return *nth;
}

std::size_t conformity_rank(std::size_t n, double alpha) {
  validate_alpha(alpha);
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n + 1) + kRankSlack));
}

std::size_t nonconformity_rank(std::size_t n, double alpha) {
  validate_alpha(alpha);
  return static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n + 1) - kRankSlack));
}

double conformal_quantile_nonconformity(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw EmptyCalibration("no calibration scores");
  std::size_t rank = nonconformity_rank(scores.size(), alpha);
  if (rank > scores.size()) {
    reject_nan(scores, "scores");
    return kInf;
  }
  return order_statistic(scores, rank);
}

double conformal_quantile_conformity(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw EmptyCalibration("no calibration scores");
  std::size_t rank = conformity_rank(scores.size(), alpha);
  if (rank < 1) {
    reject_nan(scores, "scores");
    return -kInf;
  }
  return order_statistic(scores, rank);
}

double conformal_threshold(std::span<const double> scores, double alpha, ScoreOrientation o) {
  return o == ScoreOrientation::Conformity ? conformal_quantile_conformity(scores, alpha)
                                           : conformal_quantile_nonconformity(scores, alpha);
}

}  // namespace confbayes
