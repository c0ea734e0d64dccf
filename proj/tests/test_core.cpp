#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "rarerate/core.hpp"
#include "rarerate/error.hpp"

using namespace rarerate;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("validate_weights accepts positive weights and keeps order") {
  const std::vector<double> raw{1.0, 2.5};
  const auto s = validate_weights(raw);
  CHECK(s.size() == 2);
  CHECK(s.weights()[0] == 1.0);
  CHECK(s.weights()[1] == 2.5);
  CHECK(s.ids()[1] == 1);
  CHECK(s.total() == doctest::Approx(3.5));
  CHECK(s.point_estimate() == doctest::Approx(3.5));
}

TEST_CASE("empty sample is valid") {
  const auto s = validate_weights(std::vector<double>{});
  CHECK(s.empty());
  CHECK(s.total() == 0.0);
  CHECK(s.max_weight() == 0.0);
}

TEST_CASE("invalid weights are rejected") {
  CHECK(code_of([] { validate_weights(std::vector<double>{1.0, -3.0}); }) == ErrorCode::NonPositiveWeight);
  CHECK(code_of([] { validate_weights(std::vector<double>{0.0}); }) == ErrorCode::NonPositiveWeight);
  CHECK(code_of([] { validate_weights(std::vector<double>{NAN}); }) == ErrorCode::NonFiniteWeight);
  CHECK(code_of([] { validate_weights(std::vector<double>{INFINITY}); }) == ErrorCode::NonFiniteWeight);
  CHECK(code_of([] { validate_weights(std::vector<double>{1.0}, {"a", "b"}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("miles normalizer scales the point estimate") {
  const auto s = validate_weights(std::vector<double>{2.0, 4.0}, {}, 3.0);
  CHECK(s.point_estimate() == doctest::Approx(2.0));
}

TEST_CASE("subset keeps parent ids and rejects unknown categories") {
  const auto full = fixtures::counter_example();
  const auto b = full.subset("B");
  REQUIRE(b.size() == 1);
  CHECK(b.ids()[0] == 100);
  CHECK(b.weights()[0] == 100.0);
  CHECK(full.subset("A").size() == 100);
  CHECK(full.category_names() == std::vector<std::string>{"A", "B"});
  CHECK(code_of([&] { full.subset("C"); }) == ErrorCode::UnknownCategory);
}

TEST_CASE("group_weights merges equal weights") {
  CHECK(group_weights(validate_weights(std::vector<double>{1, 1, 1})) == std::vector<Stratum>{{1.0, 3}});
  CHECK(group_weights(validate_weights(std::vector<double>{100, 1})) ==
        std::vector<Stratum>{{1.0, 1}, {100.0, 1}});
  CHECK(group_weights(WeightSample{}).empty());
}

TEST_CASE("group_weights honours the relative tolerance") {
  const auto s = validate_weights(std::vector<double>{1.0, 1.0 + 1e-14, 1.0 + 1e-6});
  const auto strata = group_weights(s);
  REQUIRE(strata.size() == 2);
  CHECK(strata[0].count == 2);
  CHECK(group_weights(s, 1e-5).size() == 1);
  CHECK(group_weights(s, 0.0).size() == 3);
}

TEST_CASE("case-study category A groups into 21 strata") {
  // The listed 38 weights contain 21 distinct values.
  const auto strata = group_weights(fixtures::case_study_union().subset("A"));
  REQUIRE(strata.size() == 21);
  CHECK(strata.front() == Stratum{1.0, 12});
  CHECK(strata[2] == Stratum{1.18, 3});
  CHECK(strata.back() == Stratum{20.0, 2});
}

TEST_CASE("grouping preserves the total on random samples") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(1 + trial);
    for (auto& x : w) x = pick(rng) * 0.37;
    const auto s = validate_weights(w);
    const auto strata = group_weights(s);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& st : strata) {
      total += st.weight * static_cast<double>(st.count);
      count += st.count;
    }
    CHECK(count == s.size());
    CHECK(std::abs(total - s.total()) <= 1e-12 * s.total());
    for (std::size_t k = 1; k < strata.size(); ++k) CHECK(strata[k - 1].weight < strata[k].weight);
  }
}

TEST_CASE("GammaSumSpec moments include the next weight") {
  const GammaSumSpec spec({{1.0, 3.0}, {2.0, 1.0}}, 4.0);
  CHECK(spec.all_terms().size() == 3);
  CHECK(spec.mean() == doctest::Approx(3 + 2 + 4));
  CHECK(spec.variance() == doctest::Approx(3 + 4 + 16));
  CHECK(spec.max_weight() == 4.0);
  CHECK(GammaSumSpec({{1.0, 3.0}}).all_terms().size() == 1);
  CHECK(GammaSumSpec().empty());
  CHECK(code_of([] { GammaSumSpec({{0.0, 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { GammaSumSpec({{1.0, -1.0}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("GammaSumSpec from strata and from weights") {
  const std::vector<Stratum> strata{{1.0, 100}, {100.0, 1}};
  const auto a = GammaSumSpec::from_strata(strata, 100.0);
  CHECK(a.mean() == doctest::Approx(300.0));
  const std::vector<double> w{1.0, 2.0};
  const auto b = GammaSumSpec::from_weights(w);
  CHECK(b.terms().size() == 2);
  CHECK(b.variance() == doctest::Approx(5.0));
}

TEST_CASE("enum parsing") {
  CHECK(parse_method("eb") == CiMethod::EB);
  CHECK(parse_method("GP") == CiMethod::GP);
  CHECK(parse_backend("mc") == Backend::MonteCarlo);
  CHECK(parse_backend("saddlepoint") == Backend::Saddlepoint);
  CHECK(code_of([] { parse_method("xx"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_backend("analytic"); }) == ErrorCode::InvalidArgument);
  CHECK(to_string(CiMethod::GM) == "gm");
}

TEST_CASE("CiConfig validation") {
  CiConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
  cfg.alpha = 0.1;
  cfg.bootstrap_draws = 99;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("error classification") {
  CHECK(is_input_error(ErrorCode::NonPositiveWeight));
  CHECK(is_input_error(ErrorCode::ConfigError));
  CHECK_FALSE(is_input_error(ErrorCode::ConvergenceError));
  CHECK(to_string(ErrorCode::NoRows) == "NoRows");
}
