#include "confbayes/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "confbayes/errors.hpp"
#include "confbayes/rng.hpp"

namespace confbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Keeps Beta draws strictly inside (0, 1); Boost can return exact 0 or 1 for tiny shapes.
double open_unit(double x) {
  constexpr double kEps = std::numeric_limits<double>::min();
  if (x <= 0.0) return kEps;
  if (x >= 1.0) return std::nextafter(1.0, 0.0);
  return x;
}

// Unconstrained coordinates used by the random walk.
struct Position {
  std::array<double, 2> z{};
};

ModelParameter to_parameter(const Position& p, bool binomial) {
  if (binomial) return {1.0 / (1.0 + std::exp(-p.z[0])), 0.0};
  return {p.z[0], std::exp(p.z[1])};
}

// log posterior in unconstrained coordinates (includes the Jacobian).
double log_target(const ObservedSample& data, const Prior& prior, const Position& p, bool binomial) {
  const ModelParameter theta = to_parameter(p, binomial);
  if (binomial) {
    if (!(theta.theta > 0.0 && theta.theta < 1.0)) return kNegInf;
    return log_posterior(data, prior, theta) + std::log(theta.theta) + std::log1p(-theta.theta);
  }
  return log_posterior(data, prior, theta) + p.z[1];
}

}  // namespace

double log_posterior(const ObservedSample& data, const Prior& prior, const ModelParameter& theta) {
  const LikelihoodModel model = likelihood_model(data, prior);
  double total = 0.0;
  for (double y : data.outcomes()) total += log_likelihood(y, theta, model);
  if (const auto* beta = std::get_if<BetaPrior>(&prior)) {
    total += (beta->a - 1.0) * std::log(theta.theta) + (beta->b - 1.0) * std::log1p(-theta.theta);
  } else {
    const auto& ng = std::get<NormalGammaPrior>(prior);
    const double var = ng.tau2 * theta.sigma2;
    const double z = theta.theta - ng.mu;
    total += -0.5 * std::log(var) - 0.5 * z * z / var;
    // 1/σ² ~ Gamma(a/2, rate b/2), expressed as a density on σ².
    total += -(0.5 * ng.a + 1.0) * std::log(theta.sigma2) - 0.5 * ng.b / theta.sigma2;
  }
  return total;
}

PosteriorDrawSet sample_posterior(const ObservedSample& data, const Prior& prior, std::size_t draws,
                                  std::uint64_t seed) {
  if (draws < 1) throw InvalidInput("need at least one posterior draw");
  Rng rng(seed);
  PosteriorDrawSet out;
  out.seed = seed;
  out.sampler = SamplerKind::Exact;
  out.draws.reserve(draws);
  if (const auto* beta = std::get_if<BetaPrior>(&prior)) {
    const auto post = betabinomial_ppd(data, *beta);
    for (std::size_t g = 0; g < draws; ++g) {
      out.draws.push_back({open_unit(rng.beta(post.a_post, post.b_post)), 0.0});
    }
    return out;
  }
  const auto post = normal_ppd(data, std::get<NormalGammaPrior>(prior));
  for (std::size_t g = 0; g < draws; ++g) {
    const double precision = rng.gamma(0.5 * post.dof, 0.5 * post.b_sigma);
    const double sigma2 = 1.0 / precision;
    const double theta = rng.normal(post.location, std::sqrt(post.tau2_theta * sigma2));
    out.draws.push_back({theta, sigma2});
  }
  return out;
}

PosteriorDrawSet sample_posterior_metropolis(const ObservedSample& data, const Prior& prior,
                                             std::size_t draws, std::uint64_t seed,
                                             const MetropolisOptions& options) {
  if (draws < 1) throw InvalidInput("need at least one posterior draw");
  if (options.thin < 1 || options.burn_in < 0 || options.adapt_window < 0) {
    throw InvalidInput("Metropolis burn-in, thinning and adaptation must be non-negative");
  }
  const bool binomial = std::holds_alternative<BetaPrior>(prior);
  likelihood_model(data, prior);  // validates the data/prior pairing

  // Start near the data and set per-coordinate proposal scales from rough
  // posterior spreads.
  const double n = static_cast<double>(data.size());
  const double mean = data.sum() / n;
  Position current;
  std::array<double, 2> spread{};
  if (binomial) {
    const double m = *data.trial_size();
    const double p = std::clamp((data.sum() + 0.5) / (n * m + 1.0), 1e-6, 1.0 - 1e-6);
    current.z[0] = std::log(p / (1.0 - p));
    spread[0] = 1.0 / std::sqrt(n * m * p * (1.0 - p) + 1.0);
  } else {
    const double var = std::max(data.sum_of_squares() / n - mean * mean, 1e-8);
    current.z = {mean, std::log(var)};
    spread = {std::sqrt(var / n), std::sqrt(2.0 / n)};
  }
  const int dims = binomial ? 1 : 2;

  Rng rng(seed);
  double log_scale = std::log(options.initial_scale);
  double current_lp = log_target(data, prior, current, binomial);

  auto step = [&]() {
    Position proposal = current;
    const double scale = std::exp(log_scale);
    for (int d = 0; d < dims; ++d) proposal.z[d] += scale * spread[d] * rng.normal();
    const double lp = log_target(data, prior, proposal, binomial);
    if (std::log(rng.uniform()) < lp - current_lp) {
      current = proposal;
      current_lp = lp;
      return true;
    }
    return false;
  };

  // Adaptation: Robbins-Monro on the log proposal scale.
  for (int t = 0; t < options.adapt_window; ++t) {
    const bool accepted = step();
    log_scale += (accepted ? 1.0 - options.target_acceptance : -options.target_acceptance) /
                 std::sqrt(1.0 + t);
  }
  for (int t = 0; t < options.burn_in; ++t) step();

  PosteriorDrawSet out;
  out.seed = seed;
  out.sampler = SamplerKind::MetropolisRW;
  out.draws.reserve(draws);
  std::size_t accepted = 0;
  std::size_t proposals = 0;
  while (out.draws.size() < draws) {
    for (int k = 0; k < options.thin; ++k) {
      accepted += step() ? 1 : 0;
      ++proposals;
    }
    out.draws.push_back(to_parameter(current, binomial));
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposals);
  if (out.acceptance_rate < options.min_acceptance || out.acceptance_rate > options.max_acceptance) {
    throw SamplerDiagnosticError("Metropolis acceptance rate " + std::to_string(out.acceptance_rate) +
                                 " outside the allowed band");
  }
  return out;
}

}  // namespace confbayes
