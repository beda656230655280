#include "confbayes/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "confbayes/errors.hpp"
#include "confbayes/special.hpp"

namespace confbayes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const BetaPrior& require_beta(const Prior& prior) {
  if (!std::holds_alternative<BetaPrior>(prior)) throw InvalidInput("count data requires a Beta prior");
  return std::get<BetaPrior>(prior);
}

double discrete_mean(const std::vector<double>& p) {
  double mean = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) mean += static_cast<double>(k) * p[k];
  return mean;
}

int discrete_quantile(const std::vector<double>& p, double prob) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    cumulative += p[k];
    if (cumulative >= prob) return static_cast<int>(k);
  }
  return static_cast<int>(p.size()) - 1;
}

int discrete_argmax(const std::vector<double>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

PredictionSet greedy_hpd(const std::vector<double>& p, double alpha) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return p[x] > p[y]; });
  std::vector<int> members;
  double mass = 0.0;
  for (int k : order) {
    members.push_back(k);
    mass += p[k];
    if (mass >= 1.0 - alpha) break;
  }
  return PredictionSet::discrete(std::move(members));
}

double mixture_quantile(const NormalMixturePPD& mix, double p) {
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t g = 0; g < mix.weights.size(); ++g) {
    mean += mix.weights[g] * mix.means[g];
    second += mix.weights[g] * (mix.variances[g] + mix.means[g] * mix.means[g]);
  }
  const double sd = std::sqrt(std::max(second - mean * mean, 1e-300));
  double lo = mean - sd;
  double hi = mean + sd;
  while (mix.cdf(lo) > p) lo -= 2.0 * (hi - lo);
  while (mix.cdf(hi) < p) hi += 2.0 * (hi - lo);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mix.cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double mixture_mode(const NormalMixturePPD& mix) {
  const double lo = mixture_quantile(mix, 1e-4);
  const double hi = mixture_quantile(mix, 1.0 - 1e-4);
  constexpr int kCoarse = 400;
  const double step = (hi - lo) / kCoarse;
  int best = 0;
  double best_density = -1.0;
  for (int i = 0; i <= kCoarse; ++i) {
    const double d = mix.density(lo + i * step);
    if (d > best_density) {
      best_density = d;
      best = i;
    }
  }
  // Golden-section refinement on the bracketing cells.
  double a = lo + std::max(best - 1, 0) * step;
  double b = lo + std::min(best + 1, kCoarse) * step;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int iter = 0; iter < 100 && b - a > 1e-12 * (1.0 + std::fabs(a)); ++iter) {
    const double c = b - ratio * (b - a);
    const double d = a + ratio * (b - a);
    if (mix.density(c) >= mix.density(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void NormalGammaPrior::validate() const {
  if (!std::isfinite(mu)) throw DomainError("prior mean mu must be finite");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw DomainError("prior tau2 must be positive");
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("Normal-Gamma prior requires a, b > 0");
}

void BetaPrior::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("Beta prior requires a, b > 0");
  }
}

// ---------------------------------------------------------------------------
// Student-t

double StudentTPPD::scale() const { return std::sqrt(scale2); }

double StudentTPPD::log_density(double y) const {
  const double z2 = (y - location) * (y - location) / scale2;
  return special::log_gamma(0.5 * (dof + 1.0)) - special::log_gamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi * scale2) - 0.5 * (dof + 1.0) * std::log1p(z2 / dof);
}

double StudentTPPD::density(double y) const { return std::exp(log_density(y)); }

double StudentTPPD::cdf(double y) const { return special::student_t_cdf((y - location) / scale(), dof); }

double StudentTPPD::quantile(double p) const {
  return location + scale() * special::student_t_quantile(p, dof);
}

StudentTPPD normal_ppd(const ObservedSample& data, const NormalGammaPrior& prior) {
  prior.validate();
  if (data.is_counts()) throw InvalidInput("the Normal model needs real-valued outcomes");
  const double n = static_cast<double>(data.size());
  const double sum = data.sum();
  const double mean = sum / n;
  double centered = 0.0;
  for (double y : data.outcomes()) centered += (y - mean) * (y - mean);

  StudentTPPD ppd;
  const double precision = 1.0 / prior.tau2;
  ppd.tau2_theta = 1.0 / (precision + n);
  ppd.location = (prior.mu * precision + sum) * ppd.tau2_theta;
  // b + Σy² + mu²/tau2 - mu_theta²/tau2_theta, rearranged to avoid cancellation.
  ppd.b_sigma = prior.b + centered + precision * n * ppd.tau2_theta * (mean - prior.mu) * (mean - prior.mu);
  ppd.dof = prior.a + n;
  if (!(ppd.b_sigma > 0.0) || !std::isfinite(ppd.b_sigma)) {
    throw NumericError("posterior rate b_sigma is not positive");
  }
  ppd.scale2 = ppd.b_sigma * (1.0 + ppd.tau2_theta) / ppd.dof;
  return ppd;
}

// ---------------------------------------------------------------------------
// Beta-Binomial

double BetaBinomialPPD::log_pmf(int k) const {
  if (k < 0 || k > m) return -kInf;
  return special::log_choose(m, k) + special::log_beta(k + a_post, m - k + b_post) -
         special::log_beta(a_post, b_post);
}

double BetaBinomialPPD::pmf(int k) const { return std::exp(log_pmf(k)); }

// Built from the ratio P(k+1)/P(k) and normalized, which keeps the total at 1
// to rounding; the direct log-gamma route carries ~1e-12 cancellation error.
std::vector<double> BetaBinomialPPD::pmf_table() const {
  std::vector<double> p(static_cast<std::size_t>(m) + 1);
  p[0] = 0.0;
  for (int k = 0; k < m; ++k) {
    p[k + 1] = p[k] + std::log((m - k) * (k + a_post)) - std::log((k + 1) * (m - k - 1 + b_post));
  }
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

BetaBinomialPPD betabinomial_ppd(const ObservedSample& data, const BetaPrior& prior) {
  prior.validate();
  if (!data.is_counts()) throw InvalidInput("the Binomial model needs count outcomes with a trial size");
  const int m = *data.trial_size();
  const double sum = data.sum();
  const double n = static_cast<double>(data.size());
  return BetaBinomialPPD{m, sum + prior.a, n * m - sum + prior.b};
}

// ---------------------------------------------------------------------------
// Mixture of Normals

double NormalMixturePPD::density(double y) const {
  double total = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    const double z = y - means[g];
    total += weights[g] * std::exp(-0.5 * z * z / variances[g]) / std::sqrt(2.0 * std::numbers::pi * variances[g]);
  }
  return total;
}

double NormalMixturePPD::cdf(double y) const {
  double total = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    total += weights[g] * 0.5 * std::erfc(-(y - means[g]) / std::sqrt(2.0 * variances[g]));
  }
  return std::clamp(total, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Dispatch

PpdFit fit_ppd(const ObservedSample& data, const Prior& prior) {
  return std::visit(overloaded{
                        [&](const NormalGammaPrior& p) -> PpdFit { return normal_ppd(data, p); },
                        [&](const BetaPrior& p) -> PpdFit { return betabinomial_ppd(data, p); },
                    },
                    prior);
}

bool is_discrete(const PpdFit& fit) {
  return std::holds_alternative<BetaBinomialPPD>(fit) || std::holds_alternative<DiscretePPD>(fit);
}

int support_max(const PpdFit& fit) {
  if (const auto* bb = std::get_if<BetaBinomialPPD>(&fit)) return bb->m;
  if (const auto* d = std::get_if<DiscretePPD>(&fit)) return d->m();
  return 0;
}

double ppd_density(const PpdFit& fit, double y) {
  return std::visit(overloaded{
                        [&](const StudentTPPD& t) { return t.density(y); },
                        [&](const NormalMixturePPD& mix) { return mix.density(y); },
                        [&](const BetaBinomialPPD& bb) {
                          if (y != std::floor(y)) return 0.0;
                          return bb.pmf(static_cast<int>(y));
                        },
                        [&](const DiscretePPD& d) {
                          if (y != std::floor(y) || y < 0 || y > d.m()) return 0.0;
                          return d.probabilities[static_cast<std::size_t>(y)];
                        },
                    },
                    fit);
}

double ppd_mean(const PpdFit& fit) {
  return std::visit(overloaded{
                        [](const StudentTPPD& t) {
                          if (!(t.dof > 1.0)) throw UndefinedMoment("Student-t mean needs dof > 1");
                          return t.location;
                        },
                        [](const NormalMixturePPD& mix) {
                          double mean = 0.0;
                          for (std::size_t g = 0; g < mix.weights.size(); ++g) mean += mix.weights[g] * mix.means[g];
                          return mean;
                        },
                        [](const BetaBinomialPPD& bb) { return bb.m * bb.a_post / (bb.a_post + bb.b_post); },
                        [](const DiscretePPD& d) { return discrete_mean(d.probabilities); },
                    },
                    fit);
}

double ppd_quantile(const PpdFit& fit, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  return std::visit(overloaded{
                        [&](const StudentTPPD& t) { return t.quantile(p); },
                        [&](const NormalMixturePPD& mix) { return mixture_quantile(mix, p); },
                        [&](const BetaBinomialPPD& bb) {
                          return static_cast<double>(discrete_quantile(bb.pmf_table(), p));
                        },
                        [&](const DiscretePPD& d) {
                          return static_cast<double>(discrete_quantile(d.probabilities, p));
                        },
                    },
                    fit);
}

double ppd_map(const PpdFit& fit) {
  return std::visit(overloaded{
                        [](const StudentTPPD& t) { return t.location; },
                        [](const NormalMixturePPD& mix) { return mixture_mode(mix); },
                        [](const BetaBinomialPPD& bb) { return static_cast<double>(discrete_argmax(bb.pmf_table())); },
                        [](const DiscretePPD& d) { return static_cast<double>(discrete_argmax(d.probabilities)); },
                    },
                    fit);
}

PredictionSet hppd_interval(const PpdFit& fit, double alpha) {
  validate_alpha(alpha);
  return std::visit(overloaded{
                        [&](const StudentTPPD& t) {
                          return PredictionSet::interval(t.quantile(alpha / 2), t.quantile(1 - alpha / 2));
                        },
                        [&](const NormalMixturePPD& mix) {
                          return PredictionSet::interval(mixture_quantile(mix, alpha / 2),
                                                         mixture_quantile(mix, 1 - alpha / 2));
                        },
                        [&](const BetaBinomialPPD& bb) { return greedy_hpd(bb.pmf_table(), alpha); },
                        [&](const DiscretePPD& d) { return greedy_hpd(d.probabilities, alpha); },
                    },
                    fit);
}

// ---------------------------------------------------------------------------
// Likelihoods

LikelihoodModel likelihood_model(const ObservedSample& data, const Prior& prior) {
  if (std::holds_alternative<BetaPrior>(prior)) {
    require_beta(prior);
    if (!data.is_counts()) throw InvalidInput("the Binomial model needs a trial size");
    return BinomialLikelihood{*data.trial_size()};
  }
  if (data.is_counts()) throw InvalidInput("the Normal model needs real-valued outcomes");
  return NormalLikelihood{};
}

double log_likelihood(double y, const ModelParameter& theta, const LikelihoodModel& model) {
  return std::visit(
      overloaded{
          [&](const NormalLikelihood&) {
            if (!(theta.sigma2 > 0.0) || !std::isfinite(theta.sigma2) || !std::isfinite(theta.theta)) {
              throw DomainError("Normal likelihood requires finite mean and sigma2 > 0");
            }
            const double z = y - theta.theta;
            return -0.5 * std::log(2.0 * std::numbers::pi * theta.sigma2) - 0.5 * z * z / theta.sigma2;
          },
          [&](const BinomialLikelihood& b) {
            if (!(theta.theta >= 0.0 && theta.theta <= 1.0)) {
              throw DomainError("Binomial likelihood requires theta in [0, 1]");
            }
            if (y != std::floor(y) || y < 0 || y > b.m) return -kInf;
            const int k = static_cast<int>(y);
            const double successes = k == 0 ? 0.0 : k * std::log(theta.theta);
            const double failures = k == b.m ? 0.0 : (b.m - k) * std::log1p(-theta.theta);
            return special::log_choose(b.m, k) + successes + failures;
          },
      },
      model);
}

}  // namespace confbayes
