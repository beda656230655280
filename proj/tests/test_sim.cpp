#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "confbayes/errors.hpp"
#include "confbayes/sim.hpp"

using namespace confbayes;

namespace {

std::string csv_of(const SimReport& report) {
  std::ostringstream out;
  write_csv_header(out);
  write_csv_rows(out, report);
  return out.str();
}

StudyConfig small(int reps) {
  StudyConfig cfg;
  cfg.n_rep = reps;
  return cfg;
}

}  // namespace

TEST_CASE("method identifiers") {
  for (const auto& id : default_methods()) CHECK(parse_method(id.label()) == id);
  CHECK(default_methods().size() == 10);
  CHECK(parse_method("hppd").score_name() == "none");
  CHECK(parse_method("analytic").score_name() == "bres");
  CHECK(parse_method("full-loo").engine_name() == "full-loo");
  CHECK(parse_method("split/qbres").label() == "split/qbres");
  CHECK_THROWS_AS(parse_method("split"), InvalidInput);
  CHECK_THROWS_AS(parse_method("full/residual"), InvalidInput);
  CHECK_THROWS_AS(parse_method("bayes/ppd"), InvalidInput);
}

TEST_CASE("study configuration checks") {
  StudyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = StudyConfig{};
  cfg.theta_true = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = StudyConfig{};
  cfg.prior.a = -1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = StudyConfig{};
  cfg.methods.clear();
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("replications are reproducible") {
  const StudyConfig cfg;
  const auto a = run_replication(cfg, 17), b = run_replication(cfg, 17);
  CHECK(a.data == b.data);
  CHECK(a.future == b.future);
  REQUIRE(a.methods.size() == b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    CHECK(a.methods[i].covered == b.methods[i].covered);
    CHECK(a.methods[i].width == b.methods[i].width);
  }
  CHECK(run_replication(cfg, 18).data != a.data);
}

TEST_CASE("a certain outcome is always covered") {
  auto cfg = small(30);
  cfg.theta_true = 1.0;
  cfg.methods.push_back(parse_method("full-loo"));
  cfg.loo_draws = 200;
  const auto report = run_study(cfg);
  for (const auto& s : report.methods) {
    INFO(s.method.label());
    CHECK(s.coverage == 1.0);
    CHECK(s.failures == 0);
  }
}

TEST_CASE("study summaries") {
  const auto report = run_study(small(200), 2);
  CHECK(report.analytic_grid_mismatches == 0);
  REQUIRE(report.methods.size() == 10);
  for (const auto& s : report.methods) {
    INFO(s.method.label());
    CHECK(s.coverage >= 0.0);
    CHECK(s.coverage <= 1.0);
    CHECK(s.coverage_se == Catch::Approx(std::sqrt(s.coverage * (1 - s.coverage) / 200)));
    CHECK(s.mean_relative_width > 0.0);
    CHECK(s.mean_relative_width <= 1.0);
    CHECK(s.mean_relative_width == Catch::Approx(s.mean_width / 21.0));
    CHECK(s.failures == 0);
  }
  // Analytic CP and grid full CP with BRes produce the same sets.
  CHECK(report.summary(parse_method("analytic")).mean_width ==
        report.summary(parse_method("full/bres")).mean_width);
  CHECK_THROWS_AS(report.summary(parse_method("full-loo")), InvalidInput);
}

TEST_CASE("CSV output is a pure function of the config") {
  const auto cfg = small(120);
  const auto one = csv_of(run_study(cfg, 1));
  CHECK(one == csv_of(run_study(cfg, 1)));
  CHECK(one == csv_of(run_study(cfg, 3)));
  CHECK(one == csv_of(run_study(cfg, 8)));
  auto other = cfg;
  other.master_seed += 1;
  CHECK(one != csv_of(run_study(other, 1)));
}

TEST_CASE("CSV schema round trip") {
  auto cfg = small(50);
  cfg.study_id = "fig1";
  const auto report = run_study(cfg);
  std::stringstream io(csv_of(report));
  const auto rows = read_csv(io);
  REQUIRE(rows.size() == report.methods.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& s = report.methods[i];
    CHECK(r.study_id == "fig1");
    CHECK(r.method == s.method.engine_name());
    CHECK(r.score == s.method.score_name());
    CHECK(r.n == 20);
    CHECK(r.m == 20);
    CHECK(r.n_rep == 50);
    CHECK(r.theta == 0.7);
    CHECK(r.a == 0.5);
    CHECK(r.b == 0.5);
    CHECK(r.alpha == 0.1);
    // Shortest round-trip formatting preserves every double exactly.
    CHECK(r.coverage == s.coverage);
    CHECK(r.coverage_se == s.coverage_se);
    CHECK(r.mean_width == s.mean_width);
    CHECK(r.mean_rel_width == s.mean_relative_width);
    CHECK(r.width_se == s.width_se);
    CHECK(!r.runtime_ms.has_value());
  }

  std::ostringstream timed;
  write_csv_header(timed);
  write_csv_rows(timed, report, true);
  std::stringstream tin(timed.str());
  for (const auto& r : read_csv(tin)) CHECK(r.runtime_ms.has_value());

  std::stringstream missing("study_id,method,score,n,m,theta,a,b,alpha,n_rep,coverage\n");
  CHECK_THROWS_AS(read_csv(missing), InvalidInput);
  std::string text = csv_of(report);
  text.insert(text.find('\n') + 1, "x,full,ppd,20,20,0.7,0.5,0.5,0.1,50,bad,0,0,0,0,NA\n");
  std::stringstream bad(text);
  CHECK_THROWS_AS(read_csv(bad), InvalidInput);
}

TEST_CASE("prior sweep") {
  auto cfg = small(40);
  cfg.methods = {parse_method("hppd"), parse_method("analytic")};
  const auto cells = prior_sweep(cfg, {0.5, 2.0}, {1.0, 5.0, 10.0});
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].a == 0.5);
  CHECK(cells[0].b == 1.0);
  CHECK(cells[5].a == 2.0);
  CHECK(cells[5].b == 10.0);
  for (const auto& c : cells) {
    CHECK(c.report.config.prior.a == c.a);
    CHECK(c.report.config.prior.b == c.b);
    CHECK(c.report.config.master_seed == cfg.master_seed);
    CHECK(c.report.config.study_id.find(',') == std::string::npos);
  }
  CHECK(default_sweep_grid() == std::vector<double>{0.5, 1, 2, 5, 10, 20, 30});
}
