#include "rarerate/next_weight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rarerate/error.hpp"

namespace rarerate {
namespace {

constexpr double kProbClamp = 1.0 - 1e-12;
constexpr double kGreedyRatio = 1e6;

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

[[noreturn]] void bad_record(const SegmentRecord& r, const std::string& why) {
  throw Error(ErrorCode::InvalidRecord, "segment '" + r.segment_id + "': " + why);
}

// Inner maximization over a = log c for fixed log q_i = log(p_i) / gamma.
// The log-likelihood is concave in a, so bisect on the sign of its slope.
double profile_loglik(std::span<const double> log_q, std::span<const char> y) {
  const double log_clamp = std::log(kProbClamp);
  auto slope = [&](double a) {
    double g = 0.0;
    for (std::size_t i = 0; i < log_q.size(); ++i) {
      const double lp = a + log_q[i];
      if (lp >= log_clamp) continue;  // clamped terms do not depend on a
      const double p = std::exp(lp);
      g += y[i] ? 1.0 : -p / (1.0 - p);
    }
    return g;
  };
  const double top = -*std::max_element(log_q.begin(), log_q.end());
  double lo = top - 80.0;
  double hi = top + 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  double ll = 0.0;
  for (std::size_t i = 0; i < log_q.size(); ++i) {
    const double lp = std::min(a + log_q[i], log_clamp);
    ll += y[i] ? lp : std::log1p(-std::exp(lp));
  }
  return ll;
}

}  // namespace

void validate_record(const SegmentRecord& r) {
  if (!(r.s_prob > 0.0 && r.s_prob <= 1.0)) bad_record(r, "s_prob must lie in (0, 1]");
  if (!in_unit(r.p_prob)) bad_record(r, "p_prob must lie in [0, 1]");
  if (r.h_prob) {
    if (!in_unit(*r.h_prob)) bad_record(r, "h_prob must lie in [0, 1]");
    if (std::abs(r.p_prob - r.s_prob * *r.h_prob) > 1e-12) bad_record(r, "p_prob != s_prob * h_prob");
    if (!r.simulated) bad_record(r, "h_prob is only observable for simulated segments");
  }
  if (r.reviewed && !r.simulated) bad_record(r, "reviewed segment was not simulated");
  if (r.outcome && !r.reviewed) bad_record(r, "outcome is only observable for reviewed segments");
}

double hajek_second_moment(std::span<const SegmentRecord> records, std::span<const double> r_hat) {
  if (r_hat.size() != records.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one score per record");
  }
  // Both sums are taken relative to a reference probability p_ref, so that
  // equal p cancel exactly and the result is 1/p_ref^2 to the last bit.
  double p_ref = 0.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.simulated || !(r.p_prob > 0.0)) continue;
    if (p_ref == 0.0) p_ref = r.p_prob;
    const double base = r_hat[i] / r.s_prob;
    num += base * (p_ref / r.p_prob);
    den += base * (r.p_prob / p_ref);
  }
  if (p_ref == 0.0) throw Error(ErrorCode::NoSimulatedRecords, "no simulated segments with p > 0");
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroDenominator, "second-moment denominator is zero");
  return num / den / (p_ref * p_ref);
}

double estimate_second_moment(std::span<const SegmentRecord> records, double gamma_hat) {
  if (!(gamma_hat > 0.0) || !std::isfinite(gamma_hat)) {
    throw Error(ErrorCode::InvalidArgument, "gamma_hat must be positive");
  }
  // r_hat = p^(1/gamma_hat), rescaled by the largest value; the scale cancels.
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.simulated && r.p_prob > 0.0) top = std::max(top, std::log(r.p_prob) / gamma_hat);
  }
  std::vector<double> r_hat(records.size(), 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.simulated && r.p_prob > 0.0) r_hat[i] = std::exp(std::log(r.p_prob) / gamma_hat - top);
  }
  return hajek_second_moment(records, r_hat);
}

double estimate_norm2(std::span<const SegmentRecord> records, double gamma_hat) {
  return std::sqrt(estimate_second_moment(records, gamma_hat));
}

double fit_gamma_index(std::span<const SegmentRecord> records) {
  std::vector<double> log_p;
  std::vector<char> y;
  for (const auto& r : records) {
    if (!r.reviewed || !r.outcome || !(r.p_prob > 0.0)) continue;
    log_p.push_back(std::log(r.p_prob));
    y.push_back(*r.outcome ? 1 : 0);
  }
  if (log_p.size() < kMinRecordsForGammaFit) {
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(kMinRecordsForGammaFit) +
                                                 " reviewed segments with outcomes, got " +
                                                 std::to_string(log_p.size()));
  }
  const auto [mn, mx] = std::minmax_element(log_p.begin(), log_p.end());
  if (*mx - *mn <= 1e-12) {
    throw Error(ErrorCode::Unidentifiable, "all sampling probabilities are equal");
  }

  std::vector<double> log_q(log_p.size());
  auto loglik = [&](double gamma) {
    for (std::size_t i = 0; i < log_p.size(); ++i) log_q[i] = log_p[i] / gamma;
    return profile_loglik(log_q, y);
  };

  // Coarse grid over (0, 2], then golden-section refinement around the best cell.
  constexpr int kGrid = 100;
  const double step = kMaxGammaIndex / kGrid;
  int best = 1;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kGrid; ++k) {
    const double ll = loglik(k * step);
    if (ll > best_ll) {
      best_ll = ll;
      best = k;
    }
  }
  if (best == kGrid) {
    throw Error(ErrorCode::GreedySamplingVariance,
                "fitted gamma index reaches the search bound 2; sampling looks pathologically greedy");
  }
  double lo = std::max(best - 1, 0) * step;
  double hi = (best + 1) * step;
  if (lo <= 0.0) lo = step * 1e-3;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = loglik(x1);
  double f2 = loglik(x2);
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = loglik(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = loglik(x1);
    }
  }
  return 0.5 * (lo + hi);
}

double resolve_next_weight(const NextWeightSpec& spec, const WeightSample& sample,
                           std::span<const SegmentRecord> records) {
  const double observed_max = sample.max_weight();
  auto norm2 = [&]() -> double {
    if (spec.norm2) {
      if (!(*spec.norm2 >= 0.0) || !std::isfinite(*spec.norm2)) {
        throw Error(ErrorCode::InvalidArgument, "supplied ||w||_2 must be finite and nonnegative");
      }
      return *spec.norm2;
    }
    if (records.empty()) {
      throw Error(ErrorCode::NextWeightUnresolved,
                  "next weight needs segment records or a supplied ||w||_2");
    }
    const double est = estimate_norm2(records, spec.gamma_hat);
    if (!std::isfinite(est) || (observed_max > 0.0 && est > kGreedyRatio * observed_max)) {
      throw Error(ErrorCode::GreedySamplingVariance,
                  "estimated ||w||_2 = " + std::to_string(est) +
                      " is implausibly large; the sampling may be too greedy for a finite variance");
    }
    return est;
  };

  switch (spec.mode) {
    case NextWeightMode::Fixed:
      if (!(spec.value >= 0.0) || !std::isfinite(spec.value)) {
        throw Error(ErrorCode::InvalidArgument, "fixed next weight must be finite and nonnegative");
      }
      return spec.value;
    case NextWeightMode::MaxObserved:
      return observed_max;
    case NextWeightMode::W2:
      return norm2();
    case NextWeightMode::Wm:
      return std::max(norm2(), observed_max);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown next-weight mode");
}

}  // namespace rarerate
