#include "confbayes/analytic_cp.hpp"

#include <algorithm>
#include <cmath>

#include "confbayes/errors.hpp"
#include "confbayes/scores.hpp"

namespace confbayes {

namespace {

// Integers within this relative distance of an endpoint count as on it.
constexpr double kEndpointSlack = 1e-9;

double score_scheme(ScoringScheme scheme, const ObservedSample& data, const Prior& prior, double y,
                    std::optional<std::size_t> i) {
  const bool bres = scheme == ScoringScheme::BResAugmented || scheme == ScoringScheme::BResDeleted;
  const bool deleted = scheme == ScoringScheme::BResDeleted || scheme == ScoringScheme::PPDDeleted;
  const ConformityScoreSpec spec(bres ? ScoreKind::BRes : ScoreKind::PPD);
  if (!i) {
    const PpdFit fit = fit_ppd(deleted ? data : data.augmented(y), prior);
    return PreparedScore(spec, fit)(y);
  }
  const PpdFit fit = fit_ppd(deleted ? data.augmented(y).without(*i) : data.augmented(y), prior);
  return PreparedScore(spec, fit)(data[*i]);
}

}  // namespace

double normal_g(double y_i, const ObservedSample& data, const NormalGammaPrior& prior) {
  prior.validate();
  const double precision = 1.0 / prior.tau2;
  const double c = 1.0 / (precision + static_cast<double>(data.size()) + 1.0);
  const double denom = 1.0 - 2.0 * c;
  if (denom == 0.0) throw SingularReflection("reflection denominator 1 - 2/(1/tau2 + n + 1) is zero");
  return (2.0 * c * (prior.mu * precision + data.sum()) - y_i) / denom;
}

double binomial_g(double y_i, const ObservedSample& data, const BetaPrior& prior) {
  prior.validate();
  if (!data.trial_size()) throw InvalidInput("binomial reflection needs count data");
  const double m = *data.trial_size();
  const double n = static_cast<double>(data.size());
  const double total = n * m + prior.a + prior.b;
  return (2.0 * m * (data.sum() + prior.a) - y_i * (total + m)) / (total - m);
}

ReflectionVector ReflectionVector::build(const ObservedSample& data, const Prior& prior, double alpha) {
  validate_alpha(alpha);
  likelihood_model(data, prior);
  ReflectionVector out;
  out.k = conformity_rank(data.size(), alpha);
  out.v.reserve(2 * data.size());
  for (double y : data.outcomes()) out.v.push_back(y);
  for (double y : data.outcomes()) {
    if (const auto* beta = std::get_if<BetaPrior>(&prior)) {
      out.v.push_back(binomial_g(y, data, *beta));
    } else {
      out.v.push_back(normal_g(y, data, std::get<NormalGammaPrior>(prior)));
    }
  }
  return out;
}

std::optional<AnalyticBounds> analytic_bounds(const ObservedSample& data, const Prior& prior, double alpha) {
  const ReflectionVector rv = ReflectionVector::build(data, prior, alpha);
  if (rv.k == 0) return std::nullopt;
  const std::size_t n = data.size();
  return AnalyticBounds{order_statistic(rv.v, rv.k), order_statistic(rv.v, 2 * n - rv.k + 1)};
}

ConformalResult analytic_full_cp(const ObservedSample& data, const Prior& prior, double alpha) {
  const auto bounds = analytic_bounds(data, prior, alpha);
  const bool binomial = std::holds_alternative<BetaPrior>(prior);
  ConformalResult out{PredictionSet::empty(), {}};
  if (!bounds) {
    out.diagnostics.whole_space = true;
    out.diagnostics.warnings.emplace_back("conformal rank below 1: every outcome is included");
    out.set = binomial ? PredictionSet::integer_range(0, *data.trial_size()) : PredictionSet::whole_line();
    return out;
  }
  out.diagnostics.threshold = bounds->upper;
  if (!binomial) {
    out.set = PredictionSet::interval(bounds->lower, bounds->upper);
    return out;
  }
  const int m = *data.trial_size();
  const double lo = std::clamp(bounds->lower, 0.0, static_cast<double>(m));
  const double hi = std::clamp(bounds->upper, 0.0, static_cast<double>(m));
  const double slack = kEndpointSlack * std::max(1.0, static_cast<double>(m));
  out.set = PredictionSet::integer_range(static_cast<int>(std::ceil(lo - slack)),
                                         static_cast<int>(std::floor(hi + slack)));
  if (out.set.is_empty()) {
    out.diagnostics.empty_set = true;
    out.diagnostics.warnings.emplace_back("no integer lies between the analytic endpoints");
  }
  return out;
}

EcmResult ecm_check(const ObservedSample& data, const Prior& prior, ScoringScheme r, ScoringScheme s,
                    const CandidateGrid& grid) {
  likelihood_model(data, prior);
  for (double y : grid.points()) {
    const double r_new = score_scheme(r, data, prior, y, std::nullopt);
    const double s_new = score_scheme(s, data, prior, y, std::nullopt);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const bool r_in = score_scheme(r, data, prior, y, i) <= r_new;
      const bool s_in = score_scheme(s, data, prior, y, i) <= s_new;
      if (r_in != s_in) return {false, EcmCounterexample{i, y}};
    }
  }
  return {};
}

}  // namespace confbayes
