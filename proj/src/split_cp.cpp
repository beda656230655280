#include "confbayes/split_cp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confbayes/errors.hpp"
#include "confbayes/rng.hpp"

namespace confbayes {

namespace {

ObservedSample subset(const ObservedSample& data, const std::vector<std::size_t>& idx) {
  std::vector<double> values;
  values.reserve(idx.size());
  for (std::size_t i : idx) values.push_back(data[i]);
  if (data.trial_size()) return ObservedSample::counts(std::move(values), *data.trial_size());
  return ObservedSample::real(std::move(values));
}

struct Calibrated {
  PpdFit fit;
  ConformityScoreSpec spec;
  double q;
};

Calibrated calibrate(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg, double alpha,
                     ConformityScoreSpec spec) {
  validate_alpha(alpha);
  likelihood_model(data, prior);
  const auto parts = split_data(data, cfg);
  Calibrated out{fit_ppd(parts.train, prior), spec.with_default_alpha(alpha), 0.0};
  const PreparedScore score(out.spec, out.fit);
  std::vector<double> scores;
  scores.reserve(parts.calibration.size());
  for (double y : parts.calibration.outcomes()) scores.push_back(score(y));
  out.q = conformal_threshold(scores, alpha, out.spec.orientation());
  return out;
}

ConformalResult whole_space(const ObservedSample& data, double q) {
  ConformalResult out{data.trial_size() ? PredictionSet::integer_range(0, *data.trial_size())
                                        : PredictionSet::whole_line(),
                      {}};
  out.diagnostics.threshold = q;
  out.diagnostics.whole_space = true;
  out.diagnostics.warnings.emplace_back("calibration set too small for this alpha: every outcome is included");
  return out;
}

// Support members whose score passes q; evaluated with the calibration
// scorer itself so that endpoints are never lost to rounding.
ConformalResult discrete_members(const Calibrated& cal, int m) {
  const PreparedScore score(cal.spec, cal.fit);
  std::vector<int> members;
  for (int k = 0; k <= m; ++k) {
    if (passes_threshold(score(k), cal.q, cal.spec.orientation())) members.push_back(k);
  }
  ConformalResult out{PredictionSet::discrete(std::move(members)), {}};
  out.diagnostics.threshold = cal.q;
  if (out.set.is_empty()) {
    out.diagnostics.empty_set = true;
    out.diagnostics.warnings.emplace_back("no outcome passes the calibrated threshold");
  }
  return out;
}

ConformalResult explicit_interval(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg,
                                  double alpha, ScoreKind kind) {
  const auto cal = calibrate(data, prior, cfg, alpha, ConformityScoreSpec(kind));
  if (std::isinf(cal.q)) return whole_space(data, cal.q);
  if (data.trial_size()) return discrete_members(cal, *data.trial_size());
  const PreparedScore score(cal.spec, cal.fit);
  ConformalResult out{PredictionSet::empty(), {}};
  out.diagnostics.threshold = cal.q;
  if (kind == ScoreKind::BRes) {
    out.set = PredictionSet::interval(score.center() - cal.q, score.center() + cal.q);
  } else {
    out.set = PredictionSet::interval(score.q_low() - cal.q, score.q_high() + cal.q);
  }
  return out;
}

}  // namespace

SplitSample split_data(const ObservedSample& data, const SplitConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw InvalidInput("train fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  if (n < 2) throw InsufficientData("split CP needs at least two observations");
  const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n || n - n_train < std::max<std::size_t>(cfg.min_cal, 1)) {
    throw InsufficientData("split leaves " + std::to_string(n_train) + " training and " +
                           std::to_string(n - std::min(n, n_train)) + " calibration points");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> cal(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(cal.begin(), cal.end());
  return {subset(data, train), subset(data, cal)};
}

ConformalResult split_cp_bres(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg, double alpha) {
  return explicit_interval(data, prior, cfg, alpha, ScoreKind::BRes);
}

ConformalResult split_cp_qbres(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg,
                               double alpha) {
  return explicit_interval(data, prior, cfg, alpha, ScoreKind::QBRes);
}

ConformalResult split_cp_density(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg,
                                 double alpha, ScoreKind score, const std::optional<CandidateGrid>& grid) {
  if (score != ScoreKind::PPD && score != ScoreKind::DBRes) {
    throw InvalidInput("split_cp_density takes the ppd or dbres score");
  }
  likelihood_model(data, prior);
  const CandidateGrid points = grid ? *grid : CandidateGrid::default_for(data, prior);
  if (points.discrete() &&
      (!data.trial_size() || points.size() != static_cast<std::size_t>(*data.trial_size()) + 1)) {
    throw InvalidInput("a discrete grid must be the full support {0..m}");
  }
  const auto cal = calibrate(data, prior, cfg, alpha, ConformityScoreSpec(score));
  if (std::isinf(cal.q)) return whole_space(data, cal.q);
  if (points.discrete()) return discrete_members(cal, *data.trial_size());
  const PreparedScore s(cal.spec, cal.fit);
  ConformalResult out{PredictionSet::empty(), {}};
  out.diagnostics.threshold = cal.q;
  std::optional<double> lo;
  double hi = 0.0;
  bool closed = false;
  for (double y : points.points()) {
    const bool in = passes_threshold(s(y), cal.q, cal.spec.orientation());
    if (in && closed) out.diagnostics.interior_gap = true;
    if (in) {
      if (!lo) lo = y;
      hi = y;
    } else if (lo) {
      closed = true;
    }
  }
  if (!lo) {
    out.diagnostics.empty_set = true;
    out.diagnostics.warnings.emplace_back("no grid point passes the calibrated threshold");
    return out;
  }
  if (out.diagnostics.interior_gap) out.diagnostics.warnings.emplace_back("included grid points are not contiguous");
  out.set = PredictionSet::interval(*lo, hi);
  return out;
}

ConformalResult split_cp(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg, double alpha,
                         ScoreKind score, const std::optional<CandidateGrid>& grid) {
  switch (score) {
    case ScoreKind::BRes: return split_cp_bres(data, prior, cfg, alpha);
    case ScoreKind::QBRes: return split_cp_qbres(data, prior, cfg, alpha);
    case ScoreKind::PPD:
    case ScoreKind::DBRes: return split_cp_density(data, prior, cfg, alpha, score, grid);
  }
  throw InvalidInput("unknown score");
}

}  // namespace confbayes
