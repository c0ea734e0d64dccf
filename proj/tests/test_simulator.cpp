#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rarerate/error.hpp"
#include "rarerate/simulator.hpp"

using namespace rarerate;

namespace {

Scenario small_scenario() {
  Scenario sc;
  sc.lambda = 20000;
  sc.pi = 0.005;
  sc.budget = 0.05;
  sc.methods = {parse_study_method("pb"), parse_study_method("eb2m")};
  sc.replicates = 20;
  sc.bootstrap_draws = 500;
  return sc;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("true positive probability") {
  Scenario sc;
  sc.pi = 1e-3;
  CHECK(true_positive_prob(sc, 0.0) == doctest::Approx(1e-3).epsilon(1e-12));
  // Bayes ratio with f1(2)/f0(2) = exp(2).
  const double odds = 1e-3 / (1 - 1e-3) * std::exp(2.0);
  CHECK(true_positive_prob(sc, 2.0) == doctest::Approx(odds / (1 + odds)).epsilon(1e-12));
  CHECK(true_positive_prob(sc, 2.0) == doctest::Approx(0.007342).epsilon(1e-3));
  sc.pi = 1.0;
  CHECK(true_positive_prob(sc, -5.0) == 1.0);
  CHECK(true_positive_prob(sc, 40.0) == 1.0);
  sc.pi = 1e-3;
  CHECK(true_positive_prob(sc, 60.0) == doctest::Approx(1.0));
  CHECK(true_positive_prob(sc, -60.0) >= 0.0);
}

TEST_CASE("population generation") {
  Scenario sc;
  sc.lambda = 1e6;
  sc.pi = 1e-3;
  const auto pop = generate_population(sc, 1);
  CHECK(std::abs(static_cast<double>(pop.size()) - 1e6) < 5 * 1000);
  const auto tp = std::count_if(pop.begin(), pop.end(), [](const Candidate& c) { return c.true_positive; });
  CHECK(std::abs(static_cast<double>(tp) - 1000.0) < 5 * std::sqrt(1000.0));
  const auto again = generate_population(sc, 1);
  REQUIRE(again.size() == pop.size());
  CHECK(std::equal(pop.begin(), pop.end(), again.begin(),
                   [](const Candidate& x, const Candidate& y) { return x.v == y.v && x.true_positive == y.true_positive; }));
  sc.lambda = 0;
  CHECK(generate_population(sc, 1).empty());
}

TEST_CASE("zero budget samples nothing") {
  auto sc = small_scenario();
  sc.budget = 0.0;
  const auto pop = generate_population(sc, 3);
  const auto out = apply_sampling(pop, sc, 4);
  CHECK(out.sample.empty());
  CHECK(out.records.size() == pop.size());
}

TEST_CASE("uniform sampling gives equal weights") {
  auto sc = small_scenario();
  sc.sampling.gamma = 0.0;
  sc.budget = 0.2;
  const auto pop = generate_population(sc, 5);
  const auto out = apply_sampling(pop, sc, 6);
  REQUIRE(!out.sample.empty());
  for (double w : out.sample.weights()) CHECK(w == doctest::Approx(5.0));
}

TEST_CASE("weights are inverse sampling probabilities") {
  for (bool two_stage : {false, true}) {
    auto sc = small_scenario();
    if (two_stage) sc.two_stage = TwoStage{0.3, 0.25, 0.25};
    sc.budget = two_stage ? 0.3 : 0.05;
    const auto pop = generate_population(sc, 7);
    const auto out = apply_sampling(pop, sc, 8);
    REQUIRE(out.event_records.size() == out.sample.size());
    REQUIRE(!out.sample.empty());
    for (std::size_t i = 0; i < out.sample.size(); ++i) {
      const auto& rec = out.records[out.event_records[i]];
      CHECK(rec.p_prob > 0.0);
      CHECK(rec.p_prob <= 1.0);
      CHECK(std::abs(out.sample.weights()[i] * rec.p_prob - 1.0) <= 1e-12);
      CHECK(rec.outcome.value_or(false));
    }
    for (const auto& rec : out.records) CHECK_NOTHROW(validate_record(rec));
  }
}

TEST_CASE("misspecified model depresses high-r candidates") {
  SamplingModel m{SamplingModelKind::SqrtTimesOneMinusR, 0.0};
  CHECK(m.score(0.99) < m.score(0.3));
  CHECK(m.score(1.0) == 0.0);
  SamplingModel q{SamplingModelKind::RTimesOnePlusR, 0.0};
  CHECK(q.score(0.5) == doctest::Approx(0.75));
  SamplingModel p{SamplingModelKind::Power, 0.5};
  CHECK(p.score(0.25) == doctest::Approx(0.5));
  CHECK(SamplingModel{SamplingModelKind::Power, 0.0}.score(0.0) == 1.0);
}

TEST_CASE("Horvitz-Thompson estimate is unbiased") {
  Scenario sc;
  sc.lambda = 1e5;
  sc.pi = 1e-3;
  sc.sampling.gamma = 0.5;
  sc.budget = 0.05;
  const int reps = 2000;
  double sum = 0.0, sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto pop = generate_population(sc, replicate_seed(1, 0, r));
    const double est = apply_sampling(pop, sc, replicate_seed(2, 0, r)).sample.point_estimate();
    sum += est;
    sq += est * est;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  INFO("mean " << mean << " se " << se);
  CHECK(std::abs(mean - sc.true_rate()) <= 3 * se);
}

TEST_CASE("two-stage weights resemble one-stage weights") {
  // Generous budgets keep every probability below one.
  Scenario one;
  one.lambda = 2e5;
  one.pi = 0.01;
  one.sampling.gamma = 0.5;
  one.budget = 0.02;
  Scenario two = one;
  two.two_stage = TwoStage{0.2, 0.25, 0.25};
  two.budget = 0.1;
  std::vector<double> w1, w2;
  for (std::uint64_t r = 0; w1.size() < 500 || w2.size() < 500; ++r) {
    const auto pop = generate_population(one, 100 + r);
    if (w1.size() < 500) {
      const auto s = apply_sampling(pop, one, 200 + r).sample;
      for (double w : s.weights()) {
        CHECK(w > 1.0);
        if (w1.size() < 500) w1.push_back(w);
      }
    }
    if (w2.size() < 500) {
      const auto s = apply_sampling(pop, two, 300 + r).sample;
      for (double w : s.weights()) {
        CHECK(w > 1.0);
        if (w2.size() < 500) w2.push_back(w);
      }
    }
  }
  // Critical value of the two-sample KS test at level 0.01 with n = m = 500.
  const double critical = 1.628 * std::sqrt(2.0 / 500.0);
  CHECK(ks_statistic(w1, w2) < critical);
}

TEST_CASE("study runs are deterministic and independent of the job count") {
  const std::vector<Scenario> cells{small_scenario()};
  const auto a = run_study(cells, 1);
  const auto b = run_study(cells, 3);
  REQUIRE(a.rows.size() == 2);
  REQUIRE(b.rows.size() == 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].coverage_error == b.rows[i].coverage_error);
    CHECK(a.rows[i].mean_width == b.rows[i].mean_width);
    CHECK(a.rows[i].mean_point_estimate == b.rows[i].mean_point_estimate);
    CHECK(a.rows[i].replicates == 20);
  }
  CHECK(a.find(0, "EB2m") != nullptr);
  CHECK(a.find(0, "nope") == nullptr);
}

TEST_CASE("single replicate gives coverage error 0 or 1") {
  auto sc = small_scenario();
  sc.replicates = 1;
  const std::vector<Scenario> cells{sc};
  for (const auto& row : run_study(cells, 1).rows) {
    CHECK((row.coverage_error == 0.0 || row.coverage_error == 1.0));
  }
}

TEST_CASE("uniform sampling at a tiny budget defeats the Poisson bootstrap") {
  auto sc = small_scenario();
  sc.lambda = 1e5;
  sc.pi = 1e-3;
  sc.sampling.gamma = 0.0;
  sc.budget = 0.001;
  sc.replicates = 200;
  const std::vector<Scenario> cells{sc};
  const auto report = run_study(cells, 0);
  CHECK(report.find(0, "PB")->coverage_error > 0.8);
  CHECK(report.find(0, "EB2m")->coverage_error < 0.2);
}

TEST_CASE("scenario validation") {
  auto sc = small_scenario();
  sc.methods.clear();
  std::vector<Scenario> cells{sc};
  CHECK_THROWS_AS(run_study(cells, 1), Error);
  sc = small_scenario();
  sc.sampling.kind = SamplingModelKind::SqrtTimesOneMinusR;
  cells = {sc};
  CHECK_THROWS_AS(run_study(cells, 1), Error);  // oracle gamma_hat needs a power model
  sc.gamma_hat = {false, 0.5};
  cells = {sc};
  CHECK_NOTHROW(run_study(cells, 1));
  CHECK_THROWS_AS(parse_study_method("eb3"), Error);
  CHECK(parse_study_method("GO2m").method == CiMethod::GO);
}

TEST_CASE("gamma labels") {
  Scenario sc;
  sc.sampling.gamma = 0.5;
  CHECK(sc.gamma_label() == "0.5");
  CHECK(*sc.overall_gamma() == 0.5);
  sc.two_stage = TwoStage{0.1, 0.25, 0.25};
  CHECK(sc.gamma_label() == "0.25+0.25");
  CHECK(*sc.overall_gamma() == 0.5);
}
