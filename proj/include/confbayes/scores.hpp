#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "confbayes/core.hpp"
#include "confbayes/models.hpp"

namespace confbayes {

enum class ScoreKind { PPD, BRes, QBRes, DBRes };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);  // "ppd", "bres", "qbres", "dbres"

// A Bayesian conformity measure: which rule, its orientation, and the inner
// quantile level for QBRes. PPD is a conformity score; the residual scores are
// non-conformity scores.
class ConformityScoreSpec {
 public:
  // alpha_inner only applies to QBRes; when omitted QBRes falls back to the
  // outer alpha supplied by the engine.
  explicit ConformityScoreSpec(ScoreKind kind, std::optional<double> alpha_inner = std::nullopt);

  ScoreKind kind() const noexcept { return kind_; }
  ScoreOrientation orientation() const noexcept;
  std::optional<double> alpha_inner() const noexcept { return alpha_inner_; }

  // Resolves the QBRes inner level against the engine's alpha.
  ConformityScoreSpec with_default_alpha(double alpha) const;

 private:
  ScoreKind kind_;
  std::optional<double> alpha_inner_;
};

// p(y | fit).
double score_ppd(double y, const PpdFit& fit);
// |y - E[Y | fit]|.
double score_bres(double y, const PpdFit& fit);
// max{Q(alpha_inner/2) - y, y - Q(1 - alpha_inner/2)}; negative inside the band.
double score_qbres(double y, const PpdFit& fit, double alpha_inner);
// |p(y | fit) - p(MAP | fit)|.
double score_dbres(double y, const PpdFit& fit);

// A score bound to one fit with its summaries (mean, quantiles, MAP density)
// computed once, for scoring many outcomes against the same fit.
class PreparedScore {
 public:
  PreparedScore(const ConformityScoreSpec& spec, const PpdFit& fit);

  double operator()(double y) const;
  ScoreOrientation orientation() const noexcept { return orientation_; }

  double q_low() const noexcept { return q_low_; }
  double q_high() const noexcept { return q_high_; }
  double center() const noexcept { return center_num_ / center_den_; }

 private:
  ScoreKind kind_;
  ScoreOrientation orientation_;
  const PpdFit* fit_;
  // Mean kept as a ratio so Beta-Binomial residuals are computed as
  // |y (a'+b') - m a'| / (a'+b'), exact for integer-valued inputs.
  double center_num_ = 0.0;
  double center_den_ = 1.0;
  double q_low_ = 0.0;
  double q_high_ = 0.0;
  double map_density_ = 0.0;
  std::vector<double> pmf_;  // cached for discrete fits
};

}  // namespace confbayes
