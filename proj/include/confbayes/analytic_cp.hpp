#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "confbayes/core.hpp"
#include "confbayes/full_cp.hpp"
#include "confbayes/models.hpp"

namespace confbayes {

// Reflection of y_i through the BRes acceptance boundary: the candidate y at
// which |y_i - E[Y | D ∪ {y}]| = |y - E[Y | D ∪ {y}]| on the far side of the
// centre. g(y) = (2c C - y) / (1 - 2c), with c the weight of one observation
// in the augmented posterior mean and C the data-plus-prior total.
double normal_g(double y_i, const ObservedSample& data, const NormalGammaPrior& prior);

// Binomial version: (2m(Σy + a) - y_i(nm + m + a + b)) / (nm - m + a + b).
double binomial_g(double y_i, const ObservedSample& data, const BetaPrior& prior);

// v = [y_1..y_n, g(y_1)..g(y_n)] with k = floor(alpha (n + 1)).
struct ReflectionVector {
  std::vector<double> v;
  std::size_t k = 0;

  static ReflectionVector build(const ObservedSample& data, const Prior& prior, double alpha);
};

// Real-valued endpoints [v_(k), v_(2n-k+1)] before any support restriction;
// nullopt when k = 0.
struct AnalyticBounds {
  double lower;
  double upper;
};
std::optional<AnalyticBounds> analytic_bounds(const ObservedSample& data, const Prior& prior, double alpha);

// Closed-form full CP with the BRes score. Normal: [v_(k), v_(2n-k+1)].
// Binomial: the integers of {0..m} inside the closed interval. k = 0 gives the
// whole line or the whole support.
ConformalResult analytic_full_cp(const ObservedSample& data, const Prior& prior, double alpha);

// Conformity measures compared by ecm_check. "Augmented" scores z_i against
// the fit on D ∪ {y}; "deleted" scores z_i against D ∪ {y} \ {z_i} and the
// candidate against D.
enum class ScoringScheme { BResAugmented, BResDeleted, PPDAugmented, PPDDeleted };

struct EcmCounterexample {
  std::size_t i;
  double y;
};

struct EcmResult {
  bool equivalent = true;
  std::optional<EcmCounterexample> counterexample;
};

// Checks I(r(z_i) <= r(z_{n+1})) == I(s(z_i) <= s(z_{n+1})) for every
// candidate y in the grid and every i; stops at the first disagreement.
EcmResult ecm_check(const ObservedSample& data, const Prior& prior, ScoringScheme r, ScoringScheme s,
                    const CandidateGrid& grid);

}  // namespace confbayes
