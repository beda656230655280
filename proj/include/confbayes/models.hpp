#pragma once

#include <variant>
#include <vector>

#include "confbayes/core.hpp"

namespace confbayes {

// Y ~ Normal(θ, σ²), θ | σ² ~ Normal(mu, tau2 σ²), 1/σ² ~ Gamma(a/2, rate b/2).
struct NormalGammaPrior {
  double mu = 0.0;
  double tau2 = 1.0;
  double a = 1.0;
  double b = 1.0;

  void validate() const;
};

// Y ~ Binomial(m, θ), θ ~ Beta(a, b).
struct BetaPrior {
  double a = 0.5;
  double b = 0.5;

  void validate() const;
};

using Prior = std::variant<NormalGammaPrior, BetaPrior>;

// Location-scale Student-t predictive of the Normal model.
struct StudentTPPD {
  double dof = 0.0;         // a + n
  double location = 0.0;    // posterior mean of θ
  double scale2 = 0.0;      // b_sigma (1 + tau2_theta) / dof
  double b_sigma = 0.0;
  double tau2_theta = 0.0;  // (1/tau2 + n)^-1

  double scale() const;
  double log_density(double y) const;
  double density(double y) const;
  double cdf(double y) const;
  double quantile(double p) const;
};

struct BetaBinomialPPD {
  int m = 0;
  double a_post = 0.0;  // Σy + a
  double b_post = 0.0;  // nm - Σy + b

  double log_pmf(int k) const;
  double pmf(int k) const;
  std::vector<double> pmf_table() const;  // P(0..m)
};

// Arbitrary pmf on {0..m}, e.g. an importance-weighted mixture of Binomials.
struct DiscretePPD {
  std::vector<double> probabilities;

  int m() const { return static_cast<int>(probabilities.size()) - 1; }
};

// Weighted mixture of Normal(θ_g, σ²_g); the reweighted predictive of the
// Normal model built from posterior draws.
struct NormalMixturePPD {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  double density(double y) const;
  double cdf(double y) const;
};

using PpdFit = std::variant<StudentTPPD, BetaBinomialPPD, DiscretePPD, NormalMixturePPD>;

StudentTPPD normal_ppd(const ObservedSample& data, const NormalGammaPrior& prior);
BetaBinomialPPD betabinomial_ppd(const ObservedSample& data, const BetaPrior& prior);

// Exact conjugate fit for whichever prior is supplied.
PpdFit fit_ppd(const ObservedSample& data, const Prior& prior);

bool is_discrete(const PpdFit& fit);

// Predictive density (continuous) or pmf (discrete) at y; 0 off the support.
double ppd_density(const PpdFit& fit, double y);

// Throws UndefinedMoment for a Student-t with dof <= 1.
double ppd_mean(const PpdFit& fit);

// Smallest x with CDF(x) >= p.
double ppd_quantile(const PpdFit& fit, double p);

// Mode; the smallest outcome on ties for discrete fits.
double ppd_map(const PpdFit& fit);

// Highest posterior predictive density region at level 1 - alpha. Equal-tailed
// for continuous fits (they are symmetric and unimodal); greedy by pmf for
// discrete fits, possibly non-contiguous.
PredictionSet hppd_interval(const PpdFit& fit, double alpha);

// Support size for discrete fits; 0 for continuous ones.
int support_max(const PpdFit& fit);

// ---------------------------------------------------------------------------
// Likelihoods for draw-based reweighting

struct NormalLikelihood {};
struct BinomialLikelihood {
  int m = 1;
};
using LikelihoodModel = std::variant<NormalLikelihood, BinomialLikelihood>;

struct ModelParameter {
  double theta = 0.0;
  double sigma2 = 1.0;  // ignored by the Binomial likelihood
};

LikelihoodModel likelihood_model(const ObservedSample& data, const Prior& prior);

// log f(y | θ). Returns -inf for y outside the support; throws DomainError when
// θ lies outside the parameter space.
double log_likelihood(double y, const ModelParameter& theta, const LikelihoodModel& model);

}  // namespace confbayes
