#include <algorithm>
#include <cmath>
#include <limits>

#include "confbayes/errors.hpp"
#include "confbayes/full_cp.hpp"

namespace confbayes {

namespace {

std::vector<double> log_likelihoods(double y, const PosteriorDrawSet& draws, const LikelihoodModel& model) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& theta : draws.draws) out.push_back(log_likelihood(y, theta, model));
  return out;
}

}  // namespace

ImportanceWeights ImportanceWeights::from_log(std::vector<double> log_weights) {
  if (log_weights.empty()) throw InvalidInput("no posterior draws to weight");
  const double peak = *std::max_element(log_weights.begin(), log_weights.end());
  if (peak == -std::numeric_limits<double>::infinity()) {
    throw DegenerateWeights("every importance weight is zero");
  }
  if (std::isnan(peak) || std::isinf(peak)) throw DegenerateWeights("non-finite importance log-weight");
  double total = 0.0;
  for (double& w : log_weights) {
    w = std::exp(w - peak);
    total += w;
  }
  double sum_sq = 0.0;
  for (double& w : log_weights) {
    w /= total;
    sum_sq += w * w;
  }
  ImportanceWeights out;
  out.weights = std::move(log_weights);
  out.ess = 1.0 / sum_sq;
  return out;
}

ImportanceWeights aoi_weights(double y_candidate, const PosteriorDrawSet& draws, const LikelihoodModel& model) {
  return ImportanceWeights::from_log(log_likelihoods(y_candidate, draws, model));
}

ImportanceWeights loo_weights(double y_candidate, double y_deleted, const PosteriorDrawSet& draws,
                              const LikelihoodModel& model) {
  auto log_w = log_likelihoods(y_candidate, draws, model);
  bool any_support = false;
  for (std::size_t g = 0; g < draws.size(); ++g) {
    const double deleted = log_likelihood(y_deleted, draws.draws[g], model);
    if (deleted == -std::numeric_limits<double>::infinity()) {
      log_w[g] = -std::numeric_limits<double>::infinity();
      continue;
    }
    any_support = true;
    log_w[g] -= deleted;
  }
  if (!any_support) throw DegenerateWeights("deleted point has zero likelihood under every draw");
  return ImportanceWeights::from_log(std::move(log_w));
}

double weighted_ppd(double y_tilde, const ImportanceWeights& weights, const PosteriorDrawSet& draws,
                    const LikelihoodModel& model) {
  if (weights.weights.size() != draws.size()) throw InvalidInput("weights and draws differ in length");
  double total = 0.0;
  for (std::size_t g = 0; g < draws.size(); ++g) {
    if (weights.weights[g] == 0.0) continue;
    total += weights.weights[g] * std::exp(log_likelihood(y_tilde, draws.draws[g], model));
  }
  return total;
}

double aoi_ppd(double y_tilde, double y_candidate, const PosteriorDrawSet& draws, const LikelihoodModel& model) {
  return weighted_ppd(y_tilde, aoi_weights(y_candidate, draws, model), draws, model);
}

PpdFit weighted_fit(const ImportanceWeights& weights, const PosteriorDrawSet& draws, const LikelihoodModel& model) {
  if (weights.weights.size() != draws.size()) throw InvalidInput("weights and draws differ in length");
  if (const auto* binomial = std::get_if<BinomialLikelihood>(&model)) {
    DiscretePPD pmf;
    pmf.probabilities.assign(static_cast<std::size_t>(binomial->m) + 1, 0.0);
    for (int k = 0; k <= binomial->m; ++k) pmf.probabilities[k] = weighted_ppd(k, weights, draws, model);
    return pmf;
  }
  NormalMixturePPD mix;
  for (std::size_t g = 0; g < draws.size(); ++g) {
    if (weights.weights[g] == 0.0) continue;
    mix.weights.push_back(weights.weights[g]);
    mix.means.push_back(draws.draws[g].theta);
    mix.variances.push_back(draws.draws[g].sigma2);
  }
  return mix;
}

}  // namespace confbayes
