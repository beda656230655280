// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "../tools/cli.hpp"
#include "confbayes/analytic_cp.hpp"
#include "confbayes/full_cp.hpp"
#include "confbayes/rng.hpp"
#include "confbayes/sampler.hpp"
#include "confbayes/sim.hpp"

using namespace confbayes;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

// 0.9 - 3 sqrt(0.9 * 0.1 / 1000)
double coverage_floor(double alpha, int reps) { return 1 - alpha - 3 * std::sqrt(alpha * (1 - alpha) / reps); }

struct BinomialCase {
  ObservedSample data;
  BetaPrior prior;
  double alpha;
};

BinomialCase random_binomial(std::mt19937_64& gen, bool continuous_alpha) {
  std::uniform_int_distribution<int> nd(1, 25), md(1, 25);
  std::uniform_real_distribution<double> hyper(0.1, 30.0), theta(0.05, 0.95), ad(0.02, 0.5);
  const int n = nd(gen), m = md(gen);
  std::binomial_distribution<int> bin(m, theta(gen));
  std::vector<int> y(n);
  for (auto& v : y) v = bin(gen);
  const double alphas[] = {0.05, 0.1, 0.2};
  const double alpha = continuous_alpha ? ad(gen) : alphas[gen() % 3];
  return {ObservedSample::counts(y, m), BetaPrior{hyper(gen), hyper(gen)}, alpha};
}

void coverage_validity() {
  const auto t0 = Clock::now();
  StudyConfig cfg;
  const auto rep = run_study(cfg, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const double floor = coverage_floor(cfg.alpha, cfg.n_rep);
  bool ok = true;
  std::string worst;
  double lowest = 2.0;
  for (const auto& s : rep.methods) {
    if (s.method.engine == Engine::Hppd) continue;
    if (s.coverage < floor || s.failures > 0) ok = false;
    if (s.coverage < lowest) {
      lowest = s.coverage;
      worst = s.method.label();
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 600;
  report("coverage validity", ok,
         fmt::format("9 CP methods, 1000 reps; lowest coverage {} ({}) vs floor {:.4f}; {:.1f}s", lowest, worst, floor,
                     secs));
}

void analytic_equals_grid() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const auto c = random_binomial(gen, false);
    const auto grid = CandidateGrid::support(*c.data.trial_size());
    const auto a = analytic_full_cp(c.data, c.prior, c.alpha);
    const auto g = full_cp_grid(c.data, c.prior, ConformityScoreSpec(ScoreKind::BRes), grid, c.alpha);
    if (!(a.set == g.set)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  report("analytic equals grid", mismatches == 0 && secs < 60,
         fmt::format("{} mismatches over 200 Binomial instances; {:.2f}s", mismatches, secs));
}

void mean_containment() {
  std::mt19937_64 gen(7);
  int violations = 0, bounded_binomial = 0, bounded_normal = 0;
  for (int t = 0; t < 500; ++t) {
    const auto c = random_binomial(gen, false);
    if (const auto b = analytic_bounds(c.data, c.prior, c.alpha)) {
      ++bounded_binomial;
      const double mean = ppd_mean(betabinomial_ppd(c.data, c.prior));
      if (mean < b->lower || mean > b->upper) ++violations;
    }
  }
  std::uniform_int_distribution<int> nd(1, 30);
  std::uniform_real_distribution<double> mu(-5, 5), tau2(0.05, 20), scale(0.2, 4), hyper(0.5, 5);
  std::normal_distribution<double> z;
  const double alphas[] = {0.05, 0.1, 0.2};
  for (int t = 0; t < 500; ++t) {
    const int n = nd(gen);
    const double centre = mu(gen), s = scale(gen);
    std::vector<double> y(n);
    for (auto& v : y) v = centre + s * z(gen);
    const auto data = ObservedSample::real(y);
    const NormalGammaPrior prior{mu(gen), tau2(gen), hyper(gen), hyper(gen)};
    const auto r = analytic_full_cp(data, prior, alphas[gen() % 3]);
    if (r.diagnostics.whole_space) continue;
    ++bounded_normal;
    if (!r.set.contains(normal_ppd(data, prior).location)) ++violations;
  }
  report("mean containment", violations == 0,
         fmt::format("{} violations; bounded intervals checked: {} Binomial, {} Normal of 500 each", violations,
                     bounded_binomial, bounded_normal));
}

void weight_fidelity() {
  const StudyConfig design;
  const auto rec = run_replication(design, 0);
  const auto data = ObservedSample::counts(rec.data, design.m);
  const BetaPrior prior = design.prior;
  const int m = design.m;
  const LikelihoodModel model = BinomialLikelihood{m};

  // Add-One-In: sup over candidate y and outcome ỹ, averaged over seeds.
  double aoi_mean = 0.0, aoi_max = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    const auto draws = sample_posterior(data, prior, 20000, derive_seed(1, {static_cast<std::uint64_t>(seed)}));
    double sup = 0.0;
    for (int y = 0; y <= m; ++y) {
      const auto w = aoi_weights(y, draws, model);
      const auto exact = betabinomial_ppd(data.augmented(y), prior).pmf_table();
      for (int yt = 0; yt <= m; ++yt) sup = std::max(sup, std::fabs(weighted_ppd(yt, w, draws, model) - exact[yt]));
    }
    aoi_mean += sup / 50;
    aoi_max = std::max(aoi_max, sup);
  }

  // Leave-One-Out: sup over candidate y and deleted index i of the deleted-set
  // predictive at y_i, averaged over seeds.
  double loo_mean = 0.0, loo_max = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    const auto draws = sample_posterior(data, prior, 50000, derive_seed(2, {static_cast<std::uint64_t>(seed)}));
    std::vector<std::vector<double>> loglik(m + 1);
    for (int v = 0; v <= m; ++v) {
      for (const auto& d : draws.draws) loglik[v].push_back(log_likelihood(v, d, model));
    }
    double sup = 0.0;
    std::vector<double> lw(draws.size());
    for (int y = 0; y <= m; ++y) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const int yi = static_cast<int>(data[i]);
        for (std::size_t g = 0; g < draws.size(); ++g) lw[g] = loglik[y][g] - loglik[yi][g];
        const auto w = ImportanceWeights::from_log(lw);
        double est = 0.0;
        for (std::size_t g = 0; g < draws.size(); ++g) est += w.weights[g] * std::exp(loglik[yi][g]);
        const double exact = ppd_density(fit_ppd(data.augmented(y).without(i), prior), yi);
        sup = std::max(sup, std::fabs(est - exact));
      }
    }
    loo_mean += sup / 50;
    loo_max = std::max(loo_max, sup);
  }
  report("add-one-in / leave-one-out fidelity", aoi_mean <= 0.005 && loo_mean <= 0.01,
         fmt::format("AOI sup error mean {:.5f} (worst seed {:.5f}) <= 0.005 at G=2e4; LOO sup error mean {:.5f} "
                     "(worst seed {:.5f}) <= 0.01 at G=5e4; 50 seeds each",
                     aoi_mean, aoi_max, loo_mean, loo_max));
}

void pvalue_equivalence() {
  std::mt19937_64 gen(11);
  int mismatches = 0;
  const ScoreKind kinds[] = {ScoreKind::PPD, ScoreKind::BRes, ScoreKind::QBRes, ScoreKind::DBRes};
  for (int t = 0; t < 100; ++t) {
    const auto c = random_binomial(gen, true);
    const auto grid = CandidateGrid::support(*c.data.trial_size());
    for (auto k : kinds) {
      const ConformityScoreSpec spec(k);
      if (!(full_cp_grid(c.data, c.prior, spec, grid, c.alpha).set ==
            full_cp_pvalue(c.data, c.prior, spec, grid, c.alpha).set)) {
        ++mismatches;
      }
    }
  }

  // Null simulations: the future outcome comes from the data law, and its
  // full-CP p-value must be super-uniform.
  const int sims = 10000, n = 20, m = 20;
  const BetaPrior prior{0.5, 0.5};
  Rng rng(12);
  const double levels[] = {0.05, 0.1, 0.25};
  std::vector<std::vector<int>> hits(4, std::vector<int>(3, 0));
  const auto grid = CandidateGrid::support(m);
  for (int s = 0; s < sims; ++s) {
    std::vector<int> y(n);
    for (auto& v : y) v = rng.binomial(m, 0.7);
    const int future = rng.binomial(m, 0.7);
    const auto data = ObservedSample::counts(y, m);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto r = full_cp_pvalue(data, prior, ConformityScoreSpec(kinds[k]), grid, 0.1);
      const double p = r.diagnostics.candidates[future].p_value;
      for (std::size_t a = 0; a < 3; ++a) hits[k][a] += p <= levels[a];
    }
  }
  bool uniform_ok = true;
  std::string rates;
  for (std::size_t a = 0; a < 3; ++a) {
    const double bound = levels[a] + 3 * std::sqrt(levels[a] * (1 - levels[a]) / sims);
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, static_cast<double>(hits[k][a]) / sims);
    uniform_ok = uniform_ok && worst <= bound;
    rates += fmt::format(" a={}: max P(p<=a) {:.4f} <= {:.4f};", levels[a], worst, bound);
  }
  report("p-value/threshold equivalence", mismatches == 0 && uniform_ok,
         fmt::format("{} set mismatches over 100 instances x 4 scores;{}", mismatches, rates));
}

void prior_sweep_shape() {
  const auto t0 = Clock::now();
  StudyConfig cfg;
  cfg.methods = {parse_method("analytic"), parse_method("hppd")};
  const auto grid = default_sweep_grid();
  const auto cells = prior_sweep(cfg, grid, grid, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const double floor = coverage_floor(cfg.alpha, cfg.n_rep);

  double min_cp = 2.0, min_hppd = 2.0;
  const SweepCell* narrowest = nullptr;
  for (const auto& c : cells) {
    const auto& cp = c.report.summary(parse_method("analytic"));
    min_cp = std::min(min_cp, cp.coverage);
    min_hppd = std::min(min_hppd, c.report.summary(parse_method("hppd")).coverage);
    if (!narrowest || cp.mean_width < narrowest->report.summary(parse_method("analytic")).mean_width) narrowest = &c;
  }
  // The grid prior means nearest to 0.7 from below and from above.
  double below = -INFINITY, above = INFINITY;
  for (double a : grid) {
    for (double b : grid) {
      const double mean = a / (a + b);
      if (mean <= 0.7) below = std::max(below, mean);
      if (mean >= 0.7) above = std::min(above, mean);
    }
  }
  const double mean = narrowest->a / (narrowest->a + narrowest->b);
  const bool a_ok = min_cp >= floor, b_ok = min_hppd < floor;
  const bool c_ok = std::fabs(mean - below) < 1e-12 || std::fabs(mean - above) < 1e-12;
  report("prior sweep", a_ok && b_ok && c_ok,
         fmt::format("(a) min analytic coverage {} >= {:.4f}: {}; (b) min HPPD coverage {} < {:.4f}: {}; "
                     "(c) narrowest analytic cell a={} b={} has prior mean {:.4f}, nearest grid means to 0.7 are "
                     "{:.4f} and {:.4f}: {}; {:.1f}s",
                     min_cp, floor, a_ok ? "yes" : "no", min_hppd, floor, b_ok ? "yes" : "no", narrowest->a,
                     narrowest->b, mean, below, above, c_ok ? "yes" : "no", seconds_since(t0)));
}

void quantile_law() {
  // Full-CP style BRes scores on Normal data: the fit uses all n + 1 points,
  // so the scores are exchangeable and continuous.
  const int batches = 10000, n = 19;
  const double alpha = 0.1;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(1.0, 2.0);
  const NormalGammaPrior prior{};
  std::vector<int> rank_count(n + 1, 0);
  int covered = 0;
  for (int b = 0; b < batches; ++b) {
    std::vector<double> y(n + 1);
    for (auto& v : y) v = z(gen);
    const auto fit = normal_ppd(ObservedSample::real(y), prior);
    std::vector<double> r(n + 1);
    for (int i = 0; i <= n; ++i) r[i] = std::fabs(y[i] - fit.location);
    const double future = r[n];
    int rank = 1;
    for (int i = 0; i < n; ++i) rank += r[i] < future;
    ++rank_count[rank - 1];
    r.pop_back();
    if (future <= conformal_quantile_nonconformity(r, alpha)) ++covered;
  }
  const double p = 1.0 / (n + 1);
  const double se = std::sqrt(p * (1 - p) / batches);
  double worst = 0.0;
  for (int c : rank_count) worst = std::max(worst, std::fabs(static_cast<double>(c) / batches - p) / se);
  const double cov = static_cast<double>(covered) / batches;
  const double floor = coverage_floor(alpha, batches);
  report("quantile law", worst <= 3.0 && cov >= floor,
         fmt::format("largest rank-frequency deviation {:.2f} se (<= 3); P(R <= q) = {:.4f} >= {:.4f}", worst, cov,
                     floor));
}

void determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / ("confbayes_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto simulate = [&](const std::string& name, const std::string& workers) {
    const auto path = (dir / name).string();
    std::ostringstream out, err;
    const int code = cli::run_cli({"simulate", "--seed", "123", "--workers", workers, "--out", path}, out, err);
    std::ifstream in(path, std::ios::binary);
    return std::make_pair(code, std::string(std::istreambuf_iterator<char>(in), {}));
  };
  const auto a = simulate("a.csv", "1"), b = simulate("b.csv", "1"), c = simulate("c.csv", "4");
  fs::remove_all(dir);
  const bool ok = a.first == 0 && b.first == 0 && c.first == 0 && !a.second.empty() && a.second == b.second &&
                  a.second == c.second;
  report("determinism", ok,
         fmt::format("simulate --seed 123: repeat run identical: {}; --workers 4 identical: {}; {} bytes",
                     a.second == b.second ? "yes" : "no", a.second == c.second ? "yes" : "no", a.second.size()));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"coverage validity", coverage_validity},
      {"analytic equals grid", analytic_equals_grid},
      {"mean containment", mean_containment},
      {"add-one-in / leave-one-out fidelity", weight_fidelity},
      {"p-value/threshold equivalence", pvalue_equivalence},
      {"prior sweep", prior_sweep_shape},
      {"quantile law", quantile_law},
      {"determinism", determinism},
  };
  for (const auto& [name, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(name, false, std::string("threw: ") + e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
