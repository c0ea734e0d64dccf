#pragma once

// Synthetic data-generating process and coverage-study engine.
//
// A population of N ~ Poisson(lambda) candidate events is drawn, each a true
// positive with probability pi and carrying a scalar feature v from f1 (true
// positives) or f0 (false positives). Candidates are importance-sampled with
// probabilities tied to r(v) = P(true positive | v), and every CI method is
// scored on whether it covers the true rate pi * lambda.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rarerate/core.hpp"
#include "rarerate/next_weight.hpp"

namespace rarerate {

struct NormalDensity {
  double mean = 0.0;
  double sd = 1.0;
};

enum class SamplingModelKind { Power, SqrtTimesOneMinusR, RTimesOnePlusR };

/// Unnormalized sampling score as a function of r.
struct SamplingModel {
  SamplingModelKind kind = SamplingModelKind::Power;
  double gamma = 0.5;  // exponent of the power model

  double score(double r) const;
  std::string label() const;
};

/// First-stage parameters; the second-stage budget is Scenario::budget.
struct TwoStage {
  double b1 = 0.1;
  double gamma1 = 0.25;
  double gamma2 = 0.25;
};

struct GammaHatPolicy {
  bool oracle = true;  // use the scenario's own index
  double value = kDefaultGammaHat;
};

/// A CI method as run in studies, with its next-weight rule.
struct StudyMethod {
  std::string label;
  CiMethod method = CiMethod::EB;
  NextWeightMode next_weight = NextWeightMode::Wm;
  Backend backend = Backend::Saddlepoint;
};

/// Accepts pb, eb2, eb2m, eb2-mc, eb2m-mc, go2m, gp2m, wg2m (case-insensitive).
StudyMethod parse_study_method(std::string_view name);

struct Scenario {
  double lambda = 1e5;
  double pi = 1e-3;
  NormalDensity f1{2.0, 2.0};
  NormalDensity f0{-2.0, 2.0};
  SamplingModel sampling;
  double budget = 0.01;  // b, or b2 for two-stage sampling
  std::optional<TwoStage> two_stage;
  double alpha = 0.1;
  std::vector<StudyMethod> methods;
  GammaHatPolicy gamma_hat;
  std::size_t replicates = 2000;
  std::uint64_t base_seed = 0;
  std::size_t bootstrap_draws = kDefaultBootstrapDraws;

  double true_rate() const { return pi * lambda; }
  /// gamma for one-stage power sampling, gamma1 + gamma2 for two stages.
  std::optional<double> overall_gamma() const;
  std::string gamma_label() const;
};

struct Candidate {
  double v = 0.0;
  bool true_positive = false;
};

/// r(v) = pi f1(v) / (pi f1(v) + (1 - pi) f0(v)).
double true_positive_prob(const Scenario& scenario, double v);

std::vector<Candidate> generate_population(const Scenario& scenario, std::uint64_t seed);

struct SamplingOutcome {
  WeightSample sample;
  /// Records for every simulated segment (all of them for one-stage sampling).
  std::vector<SegmentRecord> records;
  /// records[event_records[i]] is the segment behind sample weight i.
  std::vector<std::size_t> event_records;
};

SamplingOutcome apply_sampling(std::span<const Candidate> population, const Scenario& scenario,
                               std::uint64_t seed);

struct CoverageRow {
  std::size_t cell = 0;
  double budget = 0.0;
  std::string gamma;
  std::string method;
  double coverage_error = 0.0;
  double mean_width = 0.0;
  std::size_t replicates = 0;
  double mean_point_estimate = 0.0;
  std::size_t failures = 0;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;

  const CoverageRow* find(std::size_t cell, std::string_view method) const;
};

/// Seed of one replicate: a stable hash of (base_seed, cell, replicate).
std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t cell, std::size_t replicate);

/// Runs every cell for its configured replicates. Replicates run on up to
/// `jobs` threads (0 = hardware concurrency); results do not depend on `jobs`.
/// A failing method is counted in CoverageRow::failures and excluded from
/// the coverage and width averages.
CoverageReport run_study(std::span<const Scenario> cells, std::size_t jobs = 0);

}  // namespace rarerate
