#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "confbayes/analytic_cp.hpp"
#include "confbayes/errors.hpp"

using namespace confbayes;

namespace {

struct BinomialCase {
  ObservedSample data;
  BetaPrior prior;
  double alpha;
};

BinomialCase random_binomial(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> nd(1, 25), md(1, 25);
  std::uniform_real_distribution<double> hyper(0.1, 30.0), theta(0.05, 0.95);
  const int n = nd(gen), m = md(gen);
  std::binomial_distribution<int> bin(m, theta(gen));
  std::vector<int> y(n);
  for (auto& v : y) v = bin(gen);
  const double alphas[] = {0.05, 0.1, 0.2};
  return {ObservedSample::counts(y, m), BetaPrior{hyper(gen), hyper(gen)}, alphas[gen() % 3]};
}

struct NormalCase {
  ObservedSample data;
  NormalGammaPrior prior;
  double alpha;
};

NormalCase random_normal(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> nd(1, 30);
  std::uniform_real_distribution<double> mu(-5, 5), tau2(0.05, 20), scale(0.2, 4), hyper(0.5, 5);
  std::normal_distribution<double> z;
  const int n = nd(gen);
  const double centre = mu(gen), s = scale(gen);
  std::vector<double> y(n);
  for (auto& v : y) v = centre + s * z(gen);
  const double alphas[] = {0.05, 0.1, 0.2};
  return {ObservedSample::real(y), NormalGammaPrior{mu(gen), tau2(gen), hyper(gen), hyper(gen)},
          alphas[gen() % 3]};
}

// Augmented predictive mean as a function of the candidate.
double binomial_centre(double y, const ObservedSample& d, const BetaPrior& p) {
  const int m = *d.trial_size();
  const double n = static_cast<double>(d.size());
  return m * (d.sum() + y + p.a) / (n * m + m + p.a + p.b);
}

double normal_centre(double y, const ObservedSample& d, const NormalGammaPrior& p) {
  return (p.mu / p.tau2 + d.sum() + y) / (1.0 / p.tau2 + d.size() + 1.0);
}

}  // namespace

TEST_CASE("binomial reflection") {
  const auto one = ObservedSample::counts(std::vector<int>{1}, 2);
  CHECK(binomial_g(1, one, BetaPrior{1, 1}) == 1.0);

  std::mt19937_64 gen(3);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_binomial(gen);
    for (double yi : c.data.outcomes()) {
      // The reflected candidate and y_i sit symmetrically about the centre
      // computed with that candidate added.
      const double g = binomial_g(yi, c.data, c.prior);
      CHECK(yi + g == Catch::Approx(2 * binomial_centre(g, c.data, c.prior)).margin(1e-9));
    }
    // Its fixed point is the predictive mean of the observed data.
    const double mean = ppd_mean(betabinomial_ppd(c.data, c.prior));
    CHECK(binomial_g(mean, c.data, c.prior) == Catch::Approx(mean).margin(1e-9));
  }
}

TEST_CASE("normal reflection") {
  const auto data = ObservedSample::real({0.4, 1.7, 2.2, -0.3});
  const NormalGammaPrior prior{0.5, 2.0, 1.0, 1.0};
  const double c = 1.0 / (1.0 / prior.tau2 + 5.0);
  for (double y : {-3.0, 0.0, 1.25, 8.0}) {
    CHECK(normal_g(y + 0.5, data, prior) - normal_g(y, data, prior) ==
          Catch::Approx(-0.5 / (1 - 2 * c)).epsilon(1e-12));
    const double g = normal_g(y, data, prior);
    CHECK(y + g == Catch::Approx(2 * normal_centre(g, data, prior)).margin(1e-12));
  }
  const double mean = normal_ppd(data, prior).location;
  CHECK(normal_g(mean, data, prior) == Catch::Approx(mean).margin(1e-12));

  // 1/τ² + n + 1 rounds to 2 for n = 1 and enormous τ².
  const auto single = ObservedSample::real({1.0});
  CHECK_THROWS_AS(normal_g(1.0, single, NormalGammaPrior{0.0, 1e300, 1.0, 1.0}), SingularReflection);
  CHECK_THROWS_AS(analytic_full_cp(single, NormalGammaPrior{0.0, 1e300, 1.0, 1.0}, 0.5), SingularReflection);
}

TEST_CASE("per-point acceptance regions are bounded by y_i and its reflection") {
  // {y : |y - centre(y)| <= |y_i - centre(y)|} found by brute force on a
  // fine grid is the closed interval between y_i and g(y_i).
  std::mt19937_64 gen(5);
  for (int t = 0; t < 40; ++t) {
    const auto c = random_binomial(gen);
    const int m = *c.data.trial_size();
    for (double yi : c.data.outcomes()) {
      const double g = binomial_g(yi, c.data, c.prior);
      const double lo = std::min(yi, g), hi = std::max(yi, g);
      for (int j = 0; j <= 4000; ++j) {
        const double y = -m + 3.0 * m * j / 4000.0;
        if (std::fabs(y - lo) < 1e-7 || std::fabs(y - hi) < 1e-7) continue;
        const double centre = binomial_centre(y, c.data, c.prior);
        const bool inside = std::fabs(y - centre) <= std::fabs(yi - centre);
        CHECK(inside == (y >= lo && y <= hi));
      }
    }
  }
}

TEST_CASE("reflection vector") {
  const auto data = ObservedSample::counts(std::vector<int>{3, 5, 4}, 8);
  const auto rv = ReflectionVector::build(data, BetaPrior{2, 2}, 0.5);
  REQUIRE(rv.v.size() == 6);
  CHECK(rv.k == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rv.v[i] == data[i]);
    CHECK(rv.v[i + 3] == binomial_g(data[i], data, BetaPrior{2, 2}));
  }
  CHECK(ReflectionVector::build(data, BetaPrior{2, 2}, 0.2).k == 0);
}

TEST_CASE("k = 0 gives the whole space") {
  const auto data = ObservedSample::counts(std::vector<int>{3, 5, 4}, 8);
  const auto r = analytic_full_cp(data, BetaPrior{}, 0.2);
  CHECK(r.diagnostics.whole_space);
  CHECK(r.set == PredictionSet::integer_range(0, 8));
  CHECK(!analytic_bounds(data, BetaPrior{}, 0.2).has_value());
  const auto real = analytic_full_cp(ObservedSample::real({1.0, 2.0}), NormalGammaPrior{}, 0.1);
  CHECK(real.diagnostics.whole_space);
  CHECK(real.set == PredictionSet::whole_line());
}

TEST_CASE("k = n gives the innermost order-statistic pair") {
  const auto data = ObservedSample::real({0.3, 1.9, 1.1, 0.7});
  const NormalGammaPrior prior{};
  auto rv = ReflectionVector::build(data, prior, 0.85);
  REQUIRE(rv.k == 4);
  std::sort(rv.v.begin(), rv.v.end());
  const auto b = analytic_bounds(data, prior, 0.85);
  REQUIRE(b.has_value());
  CHECK(b->lower == rv.v[3]);
  CHECK(b->upper == rv.v[4]);
}

TEST_CASE("analytic Binomial sets equal grid full CP with BRes") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 300; ++t) {
    const auto c = random_binomial(gen);
    const auto grid = CandidateGrid::support(*c.data.trial_size());
    const auto exact = full_cp_grid(c.data, c.prior, ConformityScoreSpec(ScoreKind::BRes), grid, c.alpha);
    const auto closed = analytic_full_cp(c.data, c.prior, c.alpha);
    INFO("instance " << t);
    CHECK(closed.set == exact.set);
  }
}

TEST_CASE("analytic Normal intervals match grid full CP within one step") {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 40; ++t) {
    const auto c = random_normal(gen);
    const auto closed = analytic_full_cp(c.data, c.prior, c.alpha);
    if (closed.diagnostics.whole_space) continue;
    const auto iv = closed.set.as_interval();
    const double pad = 0.5 * (iv.upper - iv.lower) + 1.0;
    const auto grid = CandidateGrid::uniform(iv.lower - pad, iv.upper + pad, 4001);
    const double step = grid.points()[1] - grid.points()[0];
    const auto exact = full_cp_grid(c.data, c.prior, ConformityScoreSpec(ScoreKind::BRes), grid, c.alpha);
    REQUIRE(exact.set.is_interval());
    CHECK(std::fabs(exact.set.as_interval().lower - iv.lower) <= step * (1 + 1e-9));
    CHECK(std::fabs(exact.set.as_interval().upper - iv.upper) <= step * (1 + 1e-9));
  }
}

TEST_CASE("analytic intervals contain the predictive mean") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 500; ++t) {
    const auto b = random_binomial(gen);
    const auto bb = analytic_bounds(b.data, b.prior, b.alpha);
    if (bb) {
      const double mean = ppd_mean(betabinomial_ppd(b.data, b.prior));
      CHECK(bb->lower <= mean);
      CHECK(mean <= bb->upper);
    }
    const auto n = random_normal(gen);
    const auto nb = analytic_bounds(n.data, n.prior, n.alpha);
    if (nb) {
      const double mean = normal_ppd(n.data, n.prior).location;
      CHECK(nb->lower <= mean);
      CHECK(mean <= nb->upper);
    }
  }
}

TEST_CASE("Bayesian residuals on augmented and deleted samples are equivalent") {
  std::mt19937_64 gen(13);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_binomial(gen);
    const auto grid = CandidateGrid::support(*c.data.trial_size());
    const auto r = ecm_check(c.data, c.prior, ScoringScheme::BResAugmented, ScoringScheme::BResDeleted, grid);
    CHECK(r.equivalent);
    CHECK(!r.counterexample.has_value());
  }
}

TEST_CASE("a measure is always equivalent to itself") {
  const auto data = ObservedSample::counts(std::vector<int>{3, 5, 4}, 8);
  const auto grid = CandidateGrid::support(8);
  for (auto s : {ScoringScheme::BResAugmented, ScoringScheme::BResDeleted, ScoringScheme::PPDAugmented,
                 ScoringScheme::PPDDeleted}) {
    CHECK(ecm_check(data, BetaPrior{}, s, s, grid).equivalent);
  }
}

TEST_CASE("predictive densities on augmented and deleted samples are not equivalent") {
  std::mt19937_64 gen(17);
  std::optional<EcmResult> found;
  BinomialCase witness{ObservedSample::counts(std::vector<int>{0}, 1), BetaPrior{}, 0.1};
  for (int t = 0; t < 200 && !found; ++t) {
    const auto c = random_binomial(gen);
    const auto r = ecm_check(c.data, c.prior, ScoringScheme::PPDAugmented, ScoringScheme::PPDDeleted,
                             CandidateGrid::support(*c.data.trial_size()));
    if (!r.equivalent) {
      found = r;
      witness = c;
    }
  }
  REQUIRE(found.has_value());
  REQUIRE(found->counterexample.has_value());
  // Recheck the witness directly: the two indicators disagree at (i, y).
  const auto [i, y] = *found->counterexample;
  const auto aug = betabinomial_ppd(witness.data.augmented(y), witness.prior);
  const bool r_ind = score_ppd(witness.data[i], aug) <= score_ppd(y, aug);
  const auto base = betabinomial_ppd(witness.data, witness.prior);
  const auto del = betabinomial_ppd(witness.data.augmented(y).without(i), witness.prior);
  const bool s_ind = score_ppd(witness.data[i], del) <= score_ppd(y, base);
  CHECK(r_ind != s_ind);
}
