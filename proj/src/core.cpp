#include "rarerate/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "rarerate/error.hpp"

namespace rarerate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ConvergenceError: return "ConvergenceError";
    case ErrorCode::NextWeightUnresolved: return "NextWeightUnresolved";
    case ErrorCode::GreedySamplingVariance: return "GreedySamplingVariance";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::NoSimulatedRecords: return "NoSimulatedRecords";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::Unidentifiable: return "Unidentifiable";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::NoRows: return "NoRows";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

WeightSample validate_weights(std::span<const double> raw, std::vector<std::string> categories,
                              double miles_normalizer) {
  if (!categories.empty() && categories.size() != raw.size()) {
    throw Error(ErrorCode::InvalidArgument, "category count does not match weight count");
  }
  if (!(miles_normalizer > 0.0) || !std::isfinite(miles_normalizer)) {
    throw Error(ErrorCode::InvalidArgument, "miles normalizer must be positive and finite");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw Error(ErrorCode::NonFiniteWeight, "weight #" + std::to_string(i) + " is not finite");
    }
    if (raw[i] <= 0.0) {
      throw Error(ErrorCode::NonPositiveWeight,
                  "weight #" + std::to_string(i) + " is not positive: " + std::to_string(raw[i]));
    }
  }
  WeightSample s;
  s.weights_.assign(raw.begin(), raw.end());
  s.categories_ = categories.empty() ? std::vector<std::string>(raw.size()) : std::move(categories);
  s.ids_.resize(raw.size());
  std::iota(s.ids_.begin(), s.ids_.end(), std::uint64_t{0});
  s.miles_ = miles_normalizer;
  return s;
}

double WeightSample::total() const noexcept {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double WeightSample::sum_of_squares() const noexcept {
  double acc = 0.0;
  for (double w : weights_) acc += w * w;
  return acc;
}

double WeightSample::max_weight() const noexcept {
  return weights_.empty() ? 0.0 : *std::max_element(weights_.begin(), weights_.end());
}

bool WeightSample::has_category(std::string_view name) const {
  return std::find(categories_.begin(), categories_.end(), name) != categories_.end();
}

std::vector<std::string> WeightSample::category_names() const {
  std::vector<std::string> names;
  for (const auto& c : categories_) {
    if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);
  }
  return names;
}

WeightSample WeightSample::subset(std::string_view category) const {
  if (!has_category(category)) {
    throw Error(ErrorCode::UnknownCategory, "no events in category '" + std::string(category) + "'");
  }
  WeightSample out;
  out.miles_ = miles_;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (categories_[i] != category) continue;
    out.weights_.push_back(weights_[i]);
    out.categories_.push_back(categories_[i]);
    out.ids_.push_back(ids_[i]);
  }
  return out;
}

std::vector<Stratum> group_weights(const WeightSample& sample, double rel_tol) {
  std::vector<double> sorted(sample.weights().begin(), sample.weights().end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<Stratum> strata;
  std::size_t start = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Compare against the first member so a chain of tiny steps cannot drift.
    if (i > start && sorted[i] - sorted[start] > rel_tol * sorted[i]) {
      strata.push_back({sum / static_cast<double>(i - start), i - start});
      start = i;
      sum = 0.0;
    }
    sum += sorted[i];
  }
  if (!sorted.empty()) {
    strata.push_back({sum / static_cast<double>(sorted.size() - start), sorted.size() - start});
  }
  return strata;
}

GammaSumSpec::GammaSumSpec(std::vector<GammaTerm> terms, double next_weight)
    : terms_(std::move(terms)), next_weight_(next_weight) {
  for (const auto& t : terms_) {
    if (!(t.weight > 0.0) || !(t.shape > 0.0) || !std::isfinite(t.weight) || !std::isfinite(t.shape)) {
      throw Error(ErrorCode::InvalidArgument, "gamma sum terms need positive finite weight and shape");
    }
  }
  if (!(next_weight >= 0.0) || !std::isfinite(next_weight)) {
    throw Error(ErrorCode::InvalidArgument, "next weight must be nonnegative and finite");
  }
  all_ = terms_;
  if (next_weight_ > 0.0) all_.push_back({next_weight_, 1.0});
}

GammaSumSpec GammaSumSpec::from_strata(std::span<const Stratum> strata, double next_weight) {
  std::vector<GammaTerm> terms;
  terms.reserve(strata.size());
  for (const auto& s : strata) {
    if (s.count > 0) terms.push_back({s.weight, static_cast<double>(s.count)});
  }
  return GammaSumSpec(std::move(terms), next_weight);
}

GammaSumSpec GammaSumSpec::from_weights(std::span<const double> weights, double next_weight) {
  std::vector<GammaTerm> terms;
  terms.reserve(weights.size());
  for (double w : weights) terms.push_back({w, 1.0});
  return GammaSumSpec(std::move(terms), next_weight);
}

double GammaSumSpec::mean() const noexcept {
  double m = 0.0;
  for (const auto& t : all_) m += t.weight * t.shape;
  return m;
}

double GammaSumSpec::variance() const noexcept {
  double v = 0.0;
  for (const auto& t : all_) v += t.weight * t.weight * t.shape;
  return v;
}

double GammaSumSpec::max_weight() const noexcept {
  double m = 0.0;
  for (const auto& t : all_) m = std::max(m, t.weight);
  return m;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(CiMethod method) {
  switch (method) {
    case CiMethod::PB: return "pb";
    case CiMethod::EB: return "eb";
    case CiMethod::WG: return "wg";
    case CiMethod::GO: return "go";
    case CiMethod::GP: return "gp";
    case CiMethod::GM: return "gm";
  }
  return "?";
}

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::MonteCarlo: return "mc";
    case Backend::Saddlepoint: return "saddlepoint";
    case Backend::Analytic: return "analytic";
  }
  return "?";
}

std::string_view to_string(NextWeightMode mode) {
  switch (mode) {
    case NextWeightMode::Fixed: return "fixed";
    case NextWeightMode::MaxObserved: return "max-observed";
    case NextWeightMode::W2: return "w2";
    case NextWeightMode::Wm: return "wm";
  }
  return "?";
}

CiMethod parse_method(std::string_view name) {
  const auto n = lower(name);
  for (auto m : {CiMethod::PB, CiMethod::EB, CiMethod::WG, CiMethod::GO, CiMethod::GP, CiMethod::GM}) {
    if (n == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

Backend parse_backend(std::string_view name) {
  const auto n = lower(name);
  if (n == "mc" || n == "monte_carlo" || n == "monte-carlo") return Backend::MonteCarlo;
  if (n == "saddlepoint" || n == "sp") return Backend::Saddlepoint;
  throw Error(ErrorCode::InvalidArgument, "unknown backend '" + std::string(name) + "'");
}

void CiConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
  if (bootstrap_draws < 100) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap_draws must be at least 100");
  }
}

}  // namespace rarerate
