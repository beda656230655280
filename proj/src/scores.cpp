#include "confbayes/scores.hpp"

#include <algorithm>
#include <cmath>

#include "confbayes/errors.hpp"

namespace confbayes {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::PPD: return "ppd";
    case ScoreKind::BRes: return "bres";
    case ScoreKind::QBRes: return "qbres";
    case ScoreKind::DBRes: return "dbres";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "ppd") return ScoreKind::PPD;
  if (name == "bres") return ScoreKind::BRes;
  if (name == "qbres") return ScoreKind::QBRes;
  if (name == "dbres") return ScoreKind::DBRes;
  throw InvalidInput("unknown score '" + std::string(name) + "' (expected ppd, bres, qbres or dbres)");
}

ConformityScoreSpec::ConformityScoreSpec(ScoreKind kind, std::optional<double> alpha_inner)
    : kind_(kind), alpha_inner_(alpha_inner) {
  if (alpha_inner_ && kind_ != ScoreKind::QBRes) {
    throw InvalidInput("alpha_inner only applies to the qbres score");
  }
  if (alpha_inner_) validate_alpha(*alpha_inner_);
}

ScoreOrientation ConformityScoreSpec::orientation() const noexcept {
  return kind_ == ScoreKind::PPD ? ScoreOrientation::Conformity : ScoreOrientation::NonConformity;
}

ConformityScoreSpec ConformityScoreSpec::with_default_alpha(double alpha) const {
  if (kind_ != ScoreKind::QBRes || alpha_inner_) return *this;
  return ConformityScoreSpec(kind_, alpha);
}

PreparedScore::PreparedScore(const ConformityScoreSpec& spec, const PpdFit& fit)
    : kind_(spec.kind()), orientation_(spec.orientation()), fit_(&fit) {
  if (const auto* bb = std::get_if<BetaBinomialPPD>(&fit)) {
    if (kind_ == ScoreKind::PPD || kind_ == ScoreKind::DBRes) pmf_ = bb->pmf_table();
  } else if (const auto* d = std::get_if<DiscretePPD>(&fit)) {
    pmf_ = d->probabilities;
  }
  switch (kind_) {
    case ScoreKind::PPD:
      break;
    case ScoreKind::BRes:
      if (const auto* bb = std::get_if<BetaBinomialPPD>(&fit)) {
        center_num_ = bb->m * bb->a_post;
        center_den_ = bb->a_post + bb->b_post;
      } else {
        center_num_ = ppd_mean(fit);
      }
      break;
    case ScoreKind::QBRes: {
      if (!spec.alpha_inner()) throw InvalidInput("qbres score needs an inner alpha");
      const double a = *spec.alpha_inner();
      q_low_ = ppd_quantile(fit, a / 2);
      q_high_ = ppd_quantile(fit, 1 - a / 2);
      break;
    }
    case ScoreKind::DBRes:
      map_density_ = pmf_.empty() ? ppd_density(fit, ppd_map(fit)) : *std::max_element(pmf_.begin(), pmf_.end());
      break;
  }
}

double PreparedScore::operator()(double y) const {
  auto density = [&](double v) {
    if (!pmf_.empty()) {
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(pmf_.size())) return 0.0;
      return pmf_[static_cast<std::size_t>(v)];
    }
    return ppd_density(*fit_, v);
  };
  switch (kind_) {
    case ScoreKind::PPD: return density(y);
    case ScoreKind::BRes: return std::fabs(y * center_den_ - center_num_) / center_den_;
    case ScoreKind::QBRes: return std::max(q_low_ - y, y - q_high_);
    case ScoreKind::DBRes: return std::fabs(density(y) - map_density_);
  }
  return 0.0;
}

double score_ppd(double y, const PpdFit& fit) {
  return PreparedScore(ConformityScoreSpec(ScoreKind::PPD), fit)(y);
}

double score_bres(double y, const PpdFit& fit) {
  return PreparedScore(ConformityScoreSpec(ScoreKind::BRes), fit)(y);
}

double score_qbres(double y, const PpdFit& fit, double alpha_inner) {
  return PreparedScore(ConformityScoreSpec(ScoreKind::QBRes, alpha_inner), fit)(y);
}

double score_dbres(double y, const PpdFit& fit) {
  return PreparedScore(ConformityScoreSpec(ScoreKind::DBRes), fit)(y);
}

}  // namespace confbayes
