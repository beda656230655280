#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "confbayes/core.hpp"
#include "confbayes/full_cp.hpp"
#include "confbayes/models.hpp"
#include "confbayes/scores.hpp"

namespace confbayes {

struct SplitConfig {
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t min_cal = 1;
};

struct SplitSample {
  ObservedSample train;
  ObservedSample calibration;
};

// Random partition with n_T = round(train_fraction * n); an odd n puts the
// extra point in training at the default fraction.
SplitSample split_data(const ObservedSample& data, const SplitConfig& cfg);

// [mu - q, mu + q] around the training predictive mean.
ConformalResult split_cp_bres(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg, double alpha);

// [Q(alpha/2) - q, Q(1 - alpha/2) + q] from the training predictive.
ConformalResult split_cp_qbres(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg,
                               double alpha);

// Split calibration of a density-valued score (PPD or DBRes) followed by a
// search over the grid; the default grid is used when none is given.
ConformalResult split_cp_density(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg,
                                 double alpha, ScoreKind score, const std::optional<CandidateGrid>& grid = {});

// Dispatch on the score kind.
ConformalResult split_cp(const ObservedSample& data, const Prior& prior, const SplitConfig& cfg, double alpha,
                         ScoreKind score, const std::optional<CandidateGrid>& grid = {});

}  // namespace confbayes
