#pragma once

// Estimation of the next weight w**: the gamma-index power-law model
// r(v) ~ p(v)^(1/gamma), a Hajek estimator of E(W^2 | W > 0), and the
// rule w_m = max(||w||_2, observed weights).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rarerate/core.hpp"

namespace rarerate {

/// Sampling metadata for one run segment. h, J and Y are only observable
/// for simulated segments; Y only when the segment was also reviewed.
struct SegmentRecord {
  std::string segment_id;
  double s_prob = 1.0;            // simulation sampling probability s(V_i)
  std::optional<double> h_prob;   // review probability h(V_i)
  double p_prob = 0.0;            // overall p = s * h
  bool simulated = false;         // I_i
  bool reviewed = false;          // J_i
  std::optional<bool> outcome;    // Y_i
};

/// Throws InvalidRecord if probabilities are out of range, p != s*h, or the
/// observability rules (outcome => reviewed => simulated) are broken.
void validate_record(const SegmentRecord& record);

/// Hajek ratio sum(r_i / (s_i p_i)) / sum(r_i p_i / s_i) over simulated
/// records with p > 0, for explicit unnormalized true-positive scores r_i
/// (one per record, ignored for unsimulated ones).
double hajek_second_moment(std::span<const SegmentRecord> records, std::span<const double> r_hat);

/// Estimate of E(W^2 | W > 0) with r_hat(v) proportional to p(v)^(1/gamma_hat).
double estimate_second_moment(std::span<const SegmentRecord> records, double gamma_hat);

/// sqrt(estimate_second_moment(...)), the ||w||_2 estimate.
double estimate_norm2(std::span<const SegmentRecord> records, double gamma_hat);

inline constexpr std::size_t kMinRecordsForGammaFit = 30;
inline constexpr double kMaxGammaIndex = 2.0;

/// Maximum-likelihood fit of gamma in Y ~ Bernoulli(min(1, c p^(1/gamma)))
/// over reviewed records with known outcomes, gamma in (0, 2].
double fit_gamma_index(std::span<const SegmentRecord> records);

/// Resolves w** for the requested mode. `records` may be empty. Throws
/// NextWeightUnresolved for w2/wm with neither records nor a supplied norm,
/// GreedySamplingVariance when an estimated norm is non-finite or implausibly
/// large relative to the observed weights.
double resolve_next_weight(const NextWeightSpec& spec, const WeightSample& sample,
                           std::span<const SegmentRecord> records = {});

}  // namespace rarerate
