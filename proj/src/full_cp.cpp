#include "confbayes/full_cp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>

#include "confbayes/errors.hpp"

namespace confbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Acceptance rule applied to one candidate.
enum class Rule { Threshold, PValue };

void accept(CandidateTrace& trace, std::span<const double> observed, ScoreOrientation o, double alpha, Rule rule,
            Diagnostics& diag) {
  trace.p_value = conformal_pvalue(observed, trace.score, o);
  if (rule == Rule::PValue) {
    trace.included = trace.p_value >= alpha;
    return;
  }
  const double threshold = conformal_threshold(observed, alpha, o);
  if (std::isinf(threshold)) diag.whole_space = true;
  trace.included = passes_threshold(trace.score, threshold, o);
}

// Turns per-candidate verdicts into a set: the included integers for a
// discrete grid, the hull of the included points for a real grid.
ConformalResult assemble(const CandidateGrid& grid, Diagnostics diag) {
  std::vector<double> kept;
  for (const auto& t : diag.candidates) {
    if (t.included) kept.push_back(t.candidate);
  }
  const bool all_kept = kept.size() == grid.size();
  diag.whole_space = diag.whole_space && all_kept;
  if (kept.empty()) {
    diag.empty_set = true;
    diag.warnings.emplace_back("no candidate was included; the prediction set is empty");
    return {PredictionSet::empty(), std::move(diag)};
  }
  if (grid.discrete()) {
    std::vector<int> members;
    members.reserve(kept.size());
    for (double v : kept) members.push_back(static_cast<int>(v));
    return {PredictionSet::discrete(std::move(members)), std::move(diag)};
  }
  if (diag.whole_space) {
    diag.warnings.emplace_back("conformal rank below 1: every outcome is included");
    return {PredictionSet::whole_line(), std::move(diag)};
  }
  bool inside = false;
  bool closed = false;
  for (const auto& t : diag.candidates) {
    if (t.included && closed) diag.interior_gap = true;
    if (t.included) inside = true;
    if (!t.included && inside) closed = true;
  }
  if (diag.interior_gap) diag.warnings.emplace_back("included grid points are not contiguous");
  if (diag.candidates.front().included || diag.candidates.back().included) {
    diag.warnings.emplace_back("included set touches the grid boundary; widen the grid");
  }
  return {PredictionSet::interval(kept.front(), kept.back()), std::move(diag)};
}

ConformalResult refit_engine(const ObservedSample& data, const Prior& prior, const ConformityScoreSpec& score,
                             const CandidateGrid& grid, double alpha, Rule rule) {
  validate_alpha(alpha);
  likelihood_model(data, prior);
  const ConformityScoreSpec spec = score.with_default_alpha(alpha);
  const std::size_t n = data.size();
  Diagnostics diag;
  diag.candidates.reserve(grid.size());
  std::vector<double> observed(n);
  for (double y : grid.points()) {
    const PpdFit fit = fit_ppd(data.augmented(y), prior);
    const PreparedScore s(spec, fit);
    for (std::size_t i = 0; i < n; ++i) observed[i] = s(data[i]);
    CandidateTrace trace;
    trace.candidate = y;
    trace.score = s(y);
    accept(trace, observed, spec.orientation(), alpha, rule, diag);
    diag.candidates.push_back(trace);
  }
  return assemble(grid, std::move(diag));
}

// Deleted-set conformity scores with the exact refit or the LOO reweighting
// supplying p(y_i | D ∪ {y} \ {y_i}).
template <class DeletedPpd>
ConformalResult deleted_engine(const ObservedSample& data, const CandidateGrid& grid, double alpha,
                               const std::function<double(double)>& candidate_ppd, DeletedPpd deleted_ppd) {
  validate_alpha(alpha);
  const std::size_t n = data.size();
  Diagnostics diag;
  diag.candidates.reserve(grid.size());
  std::vector<double> observed(n);
  for (double y : grid.points()) {
    CandidateTrace trace;
    trace.candidate = y;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        observed[i] = deleted_ppd(y, i);
      } catch (const DegenerateWeights&) {
        observed[i] = 0.0;
        ++trace.degenerate_scores;
      }
    }
    diag.degenerate_weights += trace.degenerate_scores;
    trace.score = candidate_ppd(y);
    accept(trace, observed, ScoreOrientation::Conformity, alpha, Rule::Threshold, diag);
    diag.candidates.push_back(trace);
  }
  if (diag.degenerate_weights > 0) {
    diag.warnings.emplace_back(std::to_string(diag.degenerate_weights) +
                               " deleted-set scores had degenerate weights and were set to 0");
  }
  return assemble(grid, std::move(diag));
}

}  // namespace

CandidateGrid::CandidateGrid(std::vector<double> points, bool discrete)
    : points_(std::move(points)), discrete_(discrete) {
  if (points_.empty()) throw InvalidInput("candidate grid is empty");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) throw InvalidInput("candidate grid must be strictly increasing");
  }
}

CandidateGrid CandidateGrid::support(int m) {
  if (m < 1) throw DomainError("trial size m must be at least 1");
  std::vector<double> pts(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) pts[k] = k;
  return CandidateGrid(std::move(pts), true);
}

CandidateGrid CandidateGrid::uniform(double lo, double hi, std::size_t points) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw InvalidInput("grid bounds must be finite with lo < hi");
  }
  if (points < 2) throw InvalidInput("a real grid needs at least two points");
  std::vector<double> pts(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) pts[i] = lo + step * static_cast<double>(i);
  pts.back() = hi;
  return CandidateGrid(std::move(pts), false);
}

CandidateGrid CandidateGrid::default_for(const ObservedSample& data, const Prior& prior) {
  if (std::holds_alternative<BetaPrior>(prior)) {
    if (!data.trial_size()) throw InvalidInput("Beta prior needs count data");
    return support(*data.trial_size());
  }
  const auto fit = normal_ppd(data, std::get<NormalGammaPrior>(prior));
  const double half = fit.dof > 2.0 ? 10.0 * std::sqrt(fit.scale2 * fit.dof / (fit.dof - 2.0))
                                    : 50.0 * fit.scale();
  return uniform(fit.location - half, fit.location + half, 2001);
}

double conformal_pvalue(std::span<const double> scores_obs, double score_candidate, ScoreOrientation orientation) {
  if (scores_obs.empty()) throw EmptyCalibration("no observed scores");
  if (std::isnan(score_candidate)) throw InvalidInput("candidate score is NaN");
  std::size_t count = 1;
  for (double r : scores_obs) {
    if (std::isnan(r)) throw InvalidInput("observed score is NaN");
    if (at_least_as_plausible(score_candidate, r, orientation)) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(scores_obs.size() + 1);
}

ConformalResult full_cp_grid(const ObservedSample& data, const Prior& prior, const ConformityScoreSpec& score,
                             const CandidateGrid& grid, double alpha) {
  return refit_engine(data, prior, score, grid, alpha, Rule::Threshold);
}

ConformalResult full_cp_pvalue(const ObservedSample& data, const Prior& prior, const ConformityScoreSpec& score,
                               const CandidateGrid& grid, double alpha) {
  return refit_engine(data, prior, score, grid, alpha, Rule::PValue);
}

ConformalResult full_cp_grid_aoi(const ObservedSample& data, const Prior& prior, const PosteriorDrawSet& draws,
                                 const ConformityScoreSpec& score, const CandidateGrid& grid, double alpha) {
  validate_alpha(alpha);
  const LikelihoodModel model = likelihood_model(data, prior);
  const ConformityScoreSpec spec = score.with_default_alpha(alpha);
  const std::size_t n = data.size();
  Diagnostics diag;
  diag.candidates.reserve(grid.size());
  std::vector<double> observed(n);
  for (double y : grid.points()) {
    CandidateTrace trace;
    trace.candidate = y;
    ImportanceWeights w;
    try {
      w = aoi_weights(y, draws, model);
    } catch (const DegenerateWeights&) {
      // No draw supports y, so it cannot be scored; it is left out.
      ++trace.degenerate_scores;
      ++diag.degenerate_weights;
      diag.candidates.push_back(trace);
      continue;
    }
    trace.ess = w.ess;
    const PpdFit fit = weighted_fit(w, draws, model);
    const PreparedScore s(spec, fit);
    for (std::size_t i = 0; i < n; ++i) observed[i] = s(data[i]);
    trace.score = s(y);
    accept(trace, observed, spec.orientation(), alpha, Rule::Threshold, diag);
    diag.candidates.push_back(trace);
  }
  return assemble(grid, std::move(diag));
}

ConformalResult full_cp_loo(const ObservedSample& data, const Prior& prior, const PosteriorDrawSet& draws,
                            const CandidateGrid& grid, double alpha) {
  const LikelihoodModel model = likelihood_model(data, prior);
  // f(v | θ_g) for every value needed, computed once.
  std::map<double, std::vector<double>> loglik;
  auto table = [&](double v) -> const std::vector<double>& {
    auto it = loglik.find(v);
    if (it != loglik.end()) return it->second;
    std::vector<double> row;
    row.reserve(draws.size());
    for (const auto& theta : draws.draws) row.push_back(log_likelihood(v, theta, model));
    return loglik.emplace(v, std::move(row)).first->second;
  };
  const auto plain = ImportanceWeights::from_log(std::vector<double>(draws.size(), 0.0));
  std::vector<double> log_w(draws.size());
  auto deleted = [&](double y, std::size_t i) {
    const auto& ly = table(y);
    const auto& li = table(data[i]);
    bool any = false;
    for (std::size_t g = 0; g < draws.size(); ++g) {
      if (li[g] == kNegInf) {
        log_w[g] = kNegInf;
        continue;
      }
      any = true;
      log_w[g] = ly[g] - li[g];
    }
    if (!any) throw DegenerateWeights("deleted point has zero likelihood under every draw");
    const auto w = ImportanceWeights::from_log(log_w);
    double total = 0.0;
    for (std::size_t g = 0; g < draws.size(); ++g) total += w.weights[g] * std::exp(li[g]);
    return total;
  };
  auto candidate = [&](double y) {
    const auto& ly = table(y);
    double total = 0.0;
    for (std::size_t g = 0; g < draws.size(); ++g) total += plain.weights[g] * std::exp(ly[g]);
    return total;
  };
  return deleted_engine(data, grid, alpha, candidate, deleted);
}

ConformalResult full_cp_loo_exact(const ObservedSample& data, const Prior& prior, const CandidateGrid& grid,
                                  double alpha) {
  likelihood_model(data, prior);
  const PpdFit base = fit_ppd(data, prior);
  auto deleted = [&](double y, std::size_t i) {
    return ppd_density(fit_ppd(data.augmented(y).without(i), prior), data[i]);
  };
  auto candidate = [&](double y) { return ppd_density(base, y); };
  return deleted_engine(data, grid, alpha, candidate, deleted);
}

}  // namespace confbayes
