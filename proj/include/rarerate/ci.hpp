#pragma once

// Confidence intervals for the rate: Poisson bootstrap (PB), Exponential
// bootstrap (EB), weighted Gamma (WG), and the Gamma-family extensions GO
// (original), GP (mid-p) and GM (modified).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rarerate/core.hpp"
#include "rarerate/next_weight.hpp"

namespace rarerate {

/// Per-event unit draws for bootstrap replicates, addressed by (event id,
/// replicate). Draws are a pure function of (seed, id, replicate), so an event
/// receives identical draws in any subset or superset that contains it.
/// Callers must keep event ids stable across the samples they compare.
class CoupledDraws {
 public:
  enum class Kind { Exponential, Poisson };

  CoupledDraws(Kind kind, std::uint64_t seed, std::size_t replicates)
      : kind_(kind), seed_(seed), replicates_(replicates) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t replicates() const noexcept { return replicates_; }

  double event(std::uint64_t event_id, std::size_t replicate) const noexcept;
  /// The extra draw multiplying the next weight (exponential kind only).
  double next(std::size_t replicate) const noexcept;

  /// sum_i w_i e_(id_i, b) for every replicate b.
  std::vector<double> replicate_sums(std::span<const double> weights,
                                     std::span<const std::uint64_t> ids) const;

 private:
  Kind kind_;
  std::uint64_t seed_;
  std::size_t replicates_;
};

CiResult pb_ci(const WeightSample& sample, const CiConfig& cfg);

/// Exponential bootstrap with the next weight resolved from cfg.next_weight.
/// A wm rule without records or supplied norm falls back to max-observed and
/// sets CiResult::next_weight_fallback.
CiResult eb_ci(const WeightSample& sample, const CiConfig& cfg,
               std::span<const SegmentRecord> records = {});

/// Exponential bootstrap for an already resolved next weight.
CiResult eb_ci_with_next_weight(const WeightSample& sample, double next_weight, const CiConfig& cfg);

struct BackendOptions {
  Backend backend = Backend::Saddlepoint;
  std::size_t draws = kDefaultBootstrapDraws;
  std::uint64_t seed = 0;
};

CiResult weighted_gamma_ci(std::span<const Stratum> strata, double next_weight, double alpha,
                           const BackendOptions& backend = {});

CiResult go_ci(const WeightSample& sample, double next_weight, double alpha);
CiResult gp_ci(const WeightSample& sample, double next_weight, double alpha);
CiResult gm_ci(std::span<const Stratum> strata, double alpha);

/// Dispatches on cfg.method, resolving the next weight where the method uses one.
CiResult compute_ci(const WeightSample& sample, const CiConfig& cfg,
                    std::span<const SegmentRecord> records = {});

/// Mean and variance of the single Gammas behind GO's bounds.
struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;
};
MomentPair go_lower_moments(const WeightSample& sample);
MomentPair go_upper_moments(const WeightSample& sample, double next_weight);

struct MonotonicityRow {
  CiMethod method = CiMethod::EB;
  CiResult subset;
  CiResult full;
  bool lower_violation = false;
  bool upper_violation = false;
};

/// Compares each method's CI on one category against the CI on the whole
/// sample. Monte Carlo methods use coupled draws keyed by event id.
std::vector<MonotonicityRow> check_monotonicity(const WeightSample& full, std::string_view subset_category,
                                                std::span<const CiMethod> methods, const CiConfig& cfg,
                                                std::span<const SegmentRecord> records = {});

}  // namespace rarerate
