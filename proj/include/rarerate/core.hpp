#pragma once

// Shared domain types for rate estimation under importance sampling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rarerate {

/// Observed positive importance weights {w_i : W_i > 0}, one per confirmed event.
///
/// Input order is preserved. Each event carries a stable id (its index in the
/// sample it was originally loaded from); subsets keep the ids of the parent so
/// Monte Carlo draws can be coupled across subset/union computations.
class WeightSample {
 public:
  WeightSample() = default;

  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::string> categories() const noexcept { return categories_; }
  std::span<const std::uint64_t> ids() const noexcept { return ids_; }
  double miles_normalizer() const noexcept { return miles_; }

  double total() const noexcept;
  double sum_of_squares() const noexcept;
  /// Horvitz-Thompson point estimate: sum of weights per million miles.
  double point_estimate() const noexcept { return total() / miles_; }
  /// Largest observed weight, 0 for an empty sample.
  double max_weight() const noexcept;

  bool has_category(std::string_view name) const;
  /// Distinct category labels in order of first appearance.
  std::vector<std::string> category_names() const;
  /// Events of one category; throws UnknownCategory if none carry the label.
  WeightSample subset(std::string_view category) const;

  friend WeightSample validate_weights(std::span<const double> raw,
                                       std::vector<std::string> categories,
                                       double miles_normalizer);

 private:
  std::vector<double> weights_;
  std::vector<std::string> categories_;
  std::vector<std::uint64_t> ids_;
  double miles_ = 1.0;
};

/// Builds a WeightSample, rejecting non-positive or non-finite weights.
/// `categories` is either empty or has one label per weight.
WeightSample validate_weights(std::span<const double> raw,
                              std::vector<std::string> categories = {},
                              double miles_normalizer = 1.0);

/// A group of equal weights: w_k* observed x_k times.
struct Stratum {
  double weight = 0.0;
  std::size_t count = 0;

  friend bool operator==(const Stratum&, const Stratum&) = default;
};

inline constexpr double kDefaultGroupingTolerance = 1e-12;

/// Merges weights equal within `rel_tol` relative difference into strata,
/// ascending by weight. The stratum weight is the mean of its members.
std::vector<Stratum> group_weights(const WeightSample& sample,
                                   double rel_tol = kDefaultGroupingTolerance);

struct GammaTerm {
  double weight = 0.0;
  double shape = 0.0;
};

/// Z = sum_k weight_k * Gamma(shape_k, rate 1) [+ next_weight * Gamma(1, 1)].
class GammaSumSpec {
 public:
  GammaSumSpec() = default;
  explicit GammaSumSpec(std::vector<GammaTerm> terms, double next_weight = 0.0);

  static GammaSumSpec from_strata(std::span<const Stratum> strata, double next_weight = 0.0);
  /// One shape-1 term per weight.
  static GammaSumSpec from_weights(std::span<const double> weights, double next_weight = 0.0);

  std::span<const GammaTerm> terms() const noexcept { return terms_; }
  double next_weight() const noexcept { return next_weight_; }
  /// Terms plus the next-weight term when next_weight > 0.
  std::span<const GammaTerm> all_terms() const noexcept { return all_; }

  bool empty() const noexcept { return all_.empty(); }
  double mean() const noexcept;
  double variance() const noexcept;
  double max_weight() const noexcept;

 private:
  std::vector<GammaTerm> terms_;
  double next_weight_ = 0.0;
  std::vector<GammaTerm> all_;
};

enum class CiMethod { PB, EB, WG, GO, GP, GM };
// Analytic marks results of the closed-form Gamma methods (GO, GP, GM); it is
// never accepted as a requested backend.
enum class Backend { MonteCarlo, Saddlepoint, Analytic };
enum class NextWeightMode { Fixed, MaxObserved, W2, Wm };

std::string_view to_string(CiMethod method);
std::string_view to_string(Backend backend);
std::string_view to_string(NextWeightMode mode);
/// Case-insensitive; throws InvalidArgument on unknown names.
CiMethod parse_method(std::string_view name);
Backend parse_backend(std::string_view name);

inline constexpr double kDefaultGammaHat = 0.5;

struct NextWeightSpec {
  NextWeightMode mode = NextWeightMode::MaxObserved;
  double value = 0.0;                  // used by Fixed
  double gamma_hat = kDefaultGammaHat;  // used by W2/Wm when estimating from records
  std::optional<double> norm2;         // externally supplied ||w||_2, skips estimation

  static NextWeightSpec fixed(double v) { return {NextWeightMode::Fixed, v, kDefaultGammaHat, {}}; }
  static NextWeightSpec max_observed() { return {}; }
  static NextWeightSpec w2(double gamma_hat = kDefaultGammaHat) {
    return {NextWeightMode::W2, 0.0, gamma_hat, {}};
  }
  static NextWeightSpec wm(double gamma_hat = kDefaultGammaHat) {
    return {NextWeightMode::Wm, 0.0, gamma_hat, {}};
  }
  static NextWeightSpec wm_with_norm2(double norm2) {
    return {NextWeightMode::Wm, 0.0, kDefaultGammaHat, norm2};
  }
};

inline constexpr std::size_t kDefaultBootstrapDraws = 10'000;

struct CiConfig {
  double alpha = 0.1;
  CiMethod method = CiMethod::EB;
  Backend backend = Backend::MonteCarlo;
  std::size_t bootstrap_draws = kDefaultBootstrapDraws;
  std::uint64_t seed = 0;
  NextWeightSpec next_weight;

  /// Throws InvalidArgument unless 0 < alpha < 1 and bootstrap_draws >= 100.
  void validate() const;
};

struct CiResult {
  double point_estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  CiMethod method = CiMethod::EB;
  double alpha = 0.1;
  double next_weight_used = 0.0;
  Backend backend = Backend::Saddlepoint;
  /// Set when the wm rule had no segment data and fell back to max-observed.
  bool next_weight_fallback = false;
};

}  // namespace rarerate
