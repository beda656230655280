#pragma once

#include <cstddef>
#include <vector>

#include "confbayes/core.hpp"
#include "confbayes/models.hpp"
#include "confbayes/sampler.hpp"
#include "confbayes/scores.hpp"

namespace confbayes {

// Candidate outcomes y tested for inclusion. The full support {0..m} for the
// Binomial model; a uniform real grid for the Normal model.
class CandidateGrid {
 public:
  static CandidateGrid support(int m);
  static CandidateGrid uniform(double lo, double hi, std::size_t points);
  // 2001 points over ppd_mean ± 10 predictive sds of the fit on `data`.
  static CandidateGrid default_for(const ObservedSample& data, const Prior& prior);

  const std::vector<double>& points() const noexcept { return points_; }
  bool discrete() const noexcept { return discrete_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  CandidateGrid(std::vector<double> points, bool discrete);
  std::vector<double> points_;
  bool discrete_;
};

// ---------------------------------------------------------------------------
// Importance weights over posterior draws

struct ImportanceWeights {
  std::vector<double> weights;  // non-negative, sum to 1
  double ess = 0.0;             // 1 / Σ w²

  static ImportanceWeights from_log(std::vector<double> log_weights);
};

// Add-One-In: w_g ∝ f(y | θ_g), reweighting π(θ | D_n) towards π(θ | D_n ∪ {y}).
ImportanceWeights aoi_weights(double y_candidate, const PosteriorDrawSet& draws,
                              const LikelihoodModel& model);

// Σ_g w^y_g f(ỹ | θ_g): estimate of p(ỹ | D_n ∪ {y}).
double aoi_ppd(double y_tilde, double y_candidate, const PosteriorDrawSet& draws,
               const LikelihoodModel& model);

// Leave-One-Out: w_g ∝ f(y | θ_g) / f(y_i | θ_g), targeting π(θ | D_n ∪ {y} \ {y_i}).
ImportanceWeights loo_weights(double y_candidate, double y_deleted, const PosteriorDrawSet& draws,
                              const LikelihoodModel& model);

// Σ_g w_g f(ỹ | θ_g) for arbitrary weights over the draws.
double weighted_ppd(double y_tilde, const ImportanceWeights& weights, const PosteriorDrawSet& draws,
                    const LikelihoodModel& model);

// The reweighted predictive as a full fit: DiscretePPD for the Binomial,
// NormalMixturePPD for the Normal.
PpdFit weighted_fit(const ImportanceWeights& weights, const PosteriorDrawSet& draws,
                    const LikelihoodModel& model);

// ---------------------------------------------------------------------------
// Engines

// Full CP: for each candidate y refit on D ∪ {y} (exact conjugate update),
// score the n observed points and y against that fit, and keep y when its
// score passes the orientation's conformal quantile of the observed scores.
ConformalResult full_cp_grid(const ObservedSample& data, const Prior& prior,
                             const ConformityScoreSpec& score, const CandidateGrid& grid, double alpha);

// Same acceptance test with the augmented predictive replaced by the
// Add-One-In reweighting of draws from π(θ | D_n).
ConformalResult full_cp_grid_aoi(const ObservedSample& data, const Prior& prior,
                                 const PosteriorDrawSet& draws, const ConformityScoreSpec& score,
                                 const CandidateGrid& grid, double alpha);

// Rank p-value of a candidate score among observed scores; the candidate
// counts itself, so the result lies in [1/(n+1), 1].
double conformal_pvalue(std::span<const double> scores_obs, double score_candidate,
                        ScoreOrientation orientation);

// Test inversion: {y : p^y >= alpha}, with the same exact refits as full_cp_grid.
ConformalResult full_cp_pvalue(const ObservedSample& data, const Prior& prior,
                               const ConformityScoreSpec& score, const CandidateGrid& grid, double alpha);

// Deleted-set full CP with the predictive as conformity score:
// R_i = p(y_i | D ∪ {y} \ {y_i}) through LOO weights, R^y = p(y | D_n)
// through the plain draw average.
ConformalResult full_cp_loo(const ObservedSample& data, const Prior& prior, const PosteriorDrawSet& draws,
                            const CandidateGrid& grid, double alpha);

// full_cp_loo with every deleted-set predictive computed by an exact refit.
ConformalResult full_cp_loo_exact(const ObservedSample& data, const Prior& prior, const CandidateGrid& grid,
                                  double alpha);

}  // namespace confbayes
