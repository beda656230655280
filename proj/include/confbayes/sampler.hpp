#pragma once

#include <cstdint>
#include <vector>

#include "confbayes/core.hpp"
#include "confbayes/models.hpp"

namespace confbayes {

enum class SamplerKind { Exact, MetropolisRW };

// Posterior draws θ^(1..G). Immutable once built; safe to share across threads.
struct PosteriorDrawSet {
  std::vector<ModelParameter> draws;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::Exact;
  double acceptance_rate = 1.0;  // MetropolisRW only

  std::size_t size() const noexcept { return draws.size(); }
};

// Random-walk Metropolis settings. The proposal is Gaussian on an unconstrained
// scale (logit θ for the Binomial; (θ, log σ²) for the Normal); its scale is
// adapted towards `target_acceptance` during the first `adapt_window` steps.
struct MetropolisOptions {
  int adapt_window = 1000;
  int burn_in = 1000;
  int thin = 1;
  double initial_scale = 1.0;
  double target_acceptance = 0.44;
  double min_acceptance = 0.05;
  double max_acceptance = 0.95;
};

// Exact conjugate draws: Beta posterior (Binomial) or Normal-Inverse-Gamma (Normal).
PosteriorDrawSet sample_posterior(const ObservedSample& data, const Prior& prior, std::size_t draws,
                                  std::uint64_t seed);

// Random-walk Metropolis on the same posterior; throws SamplerDiagnosticError
// when the post-adaptation acceptance rate leaves [min_acceptance, max_acceptance].
PosteriorDrawSet sample_posterior_metropolis(const ObservedSample& data, const Prior& prior,
                                             std::size_t draws, std::uint64_t seed,
                                             const MetropolisOptions& options = {});

// Unnormalized log posterior density of θ under the prior and likelihood.
double log_posterior(const ObservedSample& data, const Prior& prior, const ModelParameter& theta);

}  // namespace confbayes
