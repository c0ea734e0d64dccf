#include "rarerate/ci.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "rarerate/error.hpp"
#include "rarerate/gamma_engine.hpp"
#include "rarerate/numeric.hpp"
#include "rarerate/random.hpp"

namespace rarerate {
namespace {

constexpr std::uint64_t kNextWeightStream = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

double unit_uniform(std::uint64_t stream_base, std::size_t replicate) {
  const std::uint64_t bits = splitmix64(stream_base + kGolden * static_cast<std::uint64_t>(replicate));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

CiResult make_result(CiMethod method, double alpha, Backend backend, double point, double lower,
                     double upper, double next_weight) {
  CiResult r;
  r.method = method;
  r.alpha = alpha;
  r.backend = backend;
  r.point_estimate = point;
  r.lower = std::max(lower, 0.0);
  r.upper = std::max(upper, r.lower);
  r.next_weight_used = next_weight;
  return r;
}

CiResult rescaled(CiResult r, double miles) {
  r.point_estimate /= miles;
  r.lower /= miles;
  r.upper /= miles;
  return r;
}

double strata_total(std::span<const Stratum> strata) {
  double m = 0.0;
  for (const auto& s : strata) m += s.weight * static_cast<double>(s.count);
  return m;
}

double gamma_quantile_by_moments(const MomentPair& mp, double prob) {
  if (!(mp.mean > 0.0)) return 0.0;
  return single_gamma_quantile(mp.mean * mp.mean / mp.variance, mp.mean / mp.variance, prob);
}

double gamma_cdf_by_moments(const MomentPair& mp, double z) {
  if (!(mp.mean > 0.0)) return z >= 0.0 ? 1.0 : 0.0;
  return single_gamma_cdf(mp.mean * mp.mean / mp.variance, mp.mean / mp.variance, z);
}

// Smallest z with (F_L(z) + F_U(z)) / 2 >= prob.
double mixture_quantile(const MomentPair& lower, const MomentPair& upper, double prob) {
  auto cdf = [&](double z) { return 0.5 * (gamma_cdf_by_moments(lower, z) + gamma_cdf_by_moments(upper, z)); };
  if (cdf(0.0) >= prob) return 0.0;
  const auto& big = lower.mean > upper.mean ? lower : upper;
  double hi = big.mean + 20.0 * std::sqrt(big.variance);
  for (int i = 0; cdf(hi) < prob; ++i) {
    if (i > 200) throw Error(ErrorCode::ConvergenceError, "cannot bracket mid-p quantile");
    hi *= 2.0;
  }
  return numeric::bisect(cdf, prob, 0.0, hi, /*increasing=*/true, 1e-14, 2000);
}

std::pair<double, bool> resolve_with_fallback(const NextWeightSpec& spec, const WeightSample& sample,
                                              std::span<const SegmentRecord> records) {
  if (spec.mode == NextWeightMode::Wm && records.empty() && !spec.norm2) {
    return {sample.max_weight(), true};
  }
  return {resolve_next_weight(spec, sample, records), false};
}

}  // namespace

double CoupledDraws::event(std::uint64_t event_id, std::size_t replicate) const noexcept {
  const double u = unit_uniform(derive_seed({seed_, event_id}), replicate);
  return kind_ == Kind::Exponential ? unit_exponential(u) : static_cast<double>(unit_poisson(u));
}

double CoupledDraws::next(std::size_t replicate) const noexcept {
  return unit_exponential(unit_uniform(derive_seed({seed_, kNextWeightStream}), replicate));
}

std::vector<double> CoupledDraws::replicate_sums(std::span<const double> weights,
                                                 std::span<const std::uint64_t> ids) const {
  std::vector<double> sums(replicates_, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::uint64_t base = derive_seed({seed_, ids[i]});
    const double w = weights[i];
    if (kind_ == Kind::Exponential) {
      for (std::size_t b = 0; b < replicates_; ++b) sums[b] += w * unit_exponential(unit_uniform(base, b));
    } else {
      for (std::size_t b = 0; b < replicates_; ++b) sums[b] += w * unit_poisson(unit_uniform(base, b));
    }
  }
  return sums;
}

CiResult pb_ci(const WeightSample& sample, const CiConfig& cfg) {
  cfg.validate();
  if (sample.empty()) {
    return make_result(CiMethod::PB, cfg.alpha, Backend::MonteCarlo, 0.0, 0.0, 0.0, 0.0);
  }
  const CoupledDraws draws(CoupledDraws::Kind::Poisson, cfg.seed, cfg.bootstrap_draws);
  auto sums = draws.replicate_sums(sample.weights(), sample.ids());
  const double lower = nearest_rank_quantile(sums, cfg.alpha / 2.0);
  const double upper = nearest_rank_quantile(sums, 1.0 - cfg.alpha / 2.0);
  return rescaled(make_result(CiMethod::PB, cfg.alpha, Backend::MonteCarlo, sample.total(), lower, upper, 0.0),
                  sample.miles_normalizer());
}

CiResult eb_ci_with_next_weight(const WeightSample& sample, double next_weight, const CiConfig& cfg) {
  cfg.validate();
  if (!(next_weight >= 0.0) || !std::isfinite(next_weight)) {
    throw Error(ErrorCode::InvalidArgument, "next weight must be finite and nonnegative");
  }
  const double a = cfg.alpha;
  double lower = 0.0;
  double upper = 0.0;
  if (cfg.backend == Backend::MonteCarlo) {
    const CoupledDraws draws(CoupledDraws::Kind::Exponential, cfg.seed, cfg.bootstrap_draws);
    auto low = draws.replicate_sums(sample.weights(), sample.ids());
    std::vector<double> up(low.size());
    for (std::size_t b = 0; b < low.size(); ++b) up[b] = low[b] + next_weight * draws.next(b);
    lower = nearest_rank_quantile(low, a / 2.0);
    upper = nearest_rank_quantile(up, 1.0 - a / 2.0);
  } else {
    if (!sample.empty()) {
      lower = saddlepoint_quantile(GammaSumSpec::from_weights(sample.weights()), 1.0 - a / 2.0);
    }
    const auto upper_spec = GammaSumSpec::from_weights(sample.weights(), next_weight);
    if (!upper_spec.empty()) upper = saddlepoint_quantile(upper_spec, a / 2.0);
  }
  return rescaled(make_result(CiMethod::EB, a, cfg.backend, sample.total(), lower, upper, next_weight),
                  sample.miles_normalizer());
}

CiResult eb_ci(const WeightSample& sample, const CiConfig& cfg, std::span<const SegmentRecord> records) {
  const auto [next_weight, fallback] = resolve_with_fallback(cfg.next_weight, sample, records);
  auto r = eb_ci_with_next_weight(sample, next_weight, cfg);
  r.next_weight_fallback = fallback;
  return r;
}

CiResult weighted_gamma_ci(std::span<const Stratum> strata, double next_weight, double alpha,
                           const BackendOptions& backend) {
  check_alpha(alpha);
  const auto lower_spec = GammaSumSpec::from_strata(strata);
  const auto upper_spec = GammaSumSpec::from_strata(strata, next_weight);
  double lower = 0.0;
  double upper = 0.0;
  if (backend.backend == Backend::MonteCarlo) {
    if (!lower_spec.empty()) lower = mc_quantile(lower_spec, alpha / 2.0, backend.draws, backend.seed);
    if (!upper_spec.empty()) upper = mc_quantile(upper_spec, 1.0 - alpha / 2.0, backend.draws, backend.seed);
  } else {
    if (!lower_spec.empty()) lower = saddlepoint_quantile(lower_spec, 1.0 - alpha / 2.0);
    if (!upper_spec.empty()) upper = saddlepoint_quantile(upper_spec, alpha / 2.0);
  }
  const Backend used = backend.backend == Backend::MonteCarlo ? Backend::MonteCarlo : Backend::Saddlepoint;
  return make_result(CiMethod::WG, alpha, used, strata_total(strata), lower, upper, next_weight);
}

MomentPair go_lower_moments(const WeightSample& sample) {
  return {sample.total(), sample.sum_of_squares()};
}

MomentPair go_upper_moments(const WeightSample& sample, double next_weight) {
  return {sample.total() + next_weight, sample.sum_of_squares() + next_weight * next_weight};
}

CiResult go_ci(const WeightSample& sample, double next_weight, double alpha) {
  check_alpha(alpha);
  const double lower = gamma_quantile_by_moments(go_lower_moments(sample), alpha / 2.0);
  const double upper = gamma_quantile_by_moments(go_upper_moments(sample, next_weight), 1.0 - alpha / 2.0);
  return rescaled(make_result(CiMethod::GO, alpha, Backend::Analytic, sample.total(), lower, upper, next_weight),
                  sample.miles_normalizer());
}

CiResult gp_ci(const WeightSample& sample, double next_weight, double alpha) {
  check_alpha(alpha);
  const auto lo = go_lower_moments(sample);
  const auto up = go_upper_moments(sample, next_weight);
  const double lower = mixture_quantile(lo, up, alpha / 2.0);
  const double upper = mixture_quantile(lo, up, 1.0 - alpha / 2.0);
  return rescaled(make_result(CiMethod::GP, alpha, Backend::Analytic, sample.total(), lower, upper, next_weight),
                  sample.miles_normalizer());
}

CiResult gm_ci(std::span<const Stratum> strata, double alpha) {
  check_alpha(alpha);
  if (strata.empty()) return make_result(CiMethod::GM, alpha, Backend::Analytic, 0.0, 0.0, 0.0, 0.0);
  MomentPair lo;
  double weight_sum = 0.0;
  double weight_sq_sum = 0.0;
  for (const auto& s : strata) {
    const auto x = static_cast<double>(s.count);
    lo.mean += s.weight * x;
    lo.variance += s.weight * s.weight * x;
    weight_sum += s.weight;
    weight_sq_sum += s.weight * s.weight;
  }
  const auto k = static_cast<double>(strata.size());
  const MomentPair up{lo.mean + weight_sum / k, lo.variance + weight_sq_sum / k};
  const double lower = gamma_quantile_by_moments(lo, alpha / 2.0);
  const double upper = gamma_quantile_by_moments(up, 1.0 - alpha / 2.0);
  // Reported next weight: the mean-part contribution.
  return make_result(CiMethod::GM, alpha, Backend::Analytic, lo.mean, lower, upper, weight_sum / k);
}

CiResult compute_ci(const WeightSample& sample, const CiConfig& cfg, std::span<const SegmentRecord> records) {
  cfg.validate();
  switch (cfg.method) {
    case CiMethod::PB:
      return pb_ci(sample, cfg);
    case CiMethod::EB:
      return eb_ci(sample, cfg, records);
    case CiMethod::GM:
      return rescaled(gm_ci(group_weights(sample), cfg.alpha), sample.miles_normalizer());
    default:
      break;
  }
  const auto [next_weight, fallback] = resolve_with_fallback(cfg.next_weight, sample, records);
  CiResult r;
  if (cfg.method == CiMethod::WG) {
    r = rescaled(weighted_gamma_ci(group_weights(sample), next_weight, cfg.alpha,
                                   {cfg.backend, cfg.bootstrap_draws, cfg.seed}),
                 sample.miles_normalizer());
  } else if (cfg.method == CiMethod::GO) {
    r = go_ci(sample, next_weight, cfg.alpha);
  } else {
    r = gp_ci(sample, next_weight, cfg.alpha);
  }
  r.next_weight_fallback = fallback;
  return r;
}

std::vector<MonotonicityRow> check_monotonicity(const WeightSample& full, std::string_view subset_category,
                                                std::span<const CiMethod> methods, const CiConfig& cfg,
                                                std::span<const SegmentRecord> records) {
  const WeightSample subset = full.subset(subset_category);
  std::vector<MonotonicityRow> rows;
  for (CiMethod m : methods) {
    CiConfig c = cfg;
    c.method = m;
    MonotonicityRow row;
    row.method = m;
    row.subset = compute_ci(subset, c, records);
    row.full = compute_ci(full, c, records);
    row.lower_violation = row.subset.lower > row.full.lower;
    row.upper_violation = row.subset.upper > row.full.upper;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rarerate
