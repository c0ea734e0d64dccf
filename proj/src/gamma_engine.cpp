#include "rarerate/gamma_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "rarerate/error.hpp"
#include "rarerate/numeric.hpp"

namespace rarerate {
namespace {

constexpr int kMaxBisection = 500;

void check_domain(const GammaSumSpec& spec, double t) {
  const double wmax = spec.max_weight();
  if (wmax > 0.0 && !(t * wmax < 1.0)) {
    throw Error(ErrorCode::DomainError,
                "cgf evaluated at t = " + std::to_string(t) + " beyond pole 1/" + std::to_string(wmax));
  }
  if (std::isnan(t)) throw Error(ErrorCode::DomainError, "cgf evaluated at NaN");
}

// u/(1-u) + log(1-u), the per-unit-shape contribution to t kappa'(t) - kappa(t).
// Summed as its power series near 0 where the closed form cancels.
double legendre_term(double u) {
  if (std::abs(u) < 1e-2) {
    double acc = 0.0;
    double pk = u;
    for (int k = 2; k <= 12; ++k) {
      pk *= u;
      acc += pk * (k - 1) / k;
    }
    return acc;
  }
  return u / (1.0 - u) + std::log1p(-u);
}

double near_mean_tail(const GammaSumSpec& spec) {
  const auto d0 = cgf_derivatives(spec, 0.0);
  const double sigma = std::sqrt(d0.k2);
  return 0.5 - d0.k3 / (6.0 * std::sqrt(2.0 * std::numbers::pi) * sigma * sigma * sigma);
}

struct LrParts {
  double omega;
  double xi;
  double tail;
};

LrParts lugannani_rice(const GammaSumSpec& spec, double t) {
  double k2 = 0.0;
  double legendre = 0.0;
  for (const auto& term : spec.all_terms()) {
    const double u = term.weight * t;
    const double inv = 1.0 / (1.0 - u);
    k2 += term.weight * term.weight * term.shape * inv * inv;
    legendre += term.shape * legendre_term(u);
  }
  const double omega = t * std::sqrt(k2);
  const double xi = std::copysign(std::sqrt(2.0 * std::max(legendre, 0.0)), t);
  const double tail =
      numeric::normal_upper_tail(xi) + numeric::normal_pdf(xi) * (1.0 / omega - 1.0 / xi);
  return {omega, xi, tail};
}

}  // namespace

double cgf(const GammaSumSpec& spec, double t) {
  check_domain(spec, t);
  double acc = 0.0;
  for (const auto& term : spec.all_terms()) acc -= term.shape * std::log1p(-term.weight * t);
  return acc;
}

CgfDerivatives cgf_derivatives(const GammaSumSpec& spec, double t) {
  check_domain(spec, t);
  CgfDerivatives d;
  for (const auto& term : spec.all_terms()) {
    const double r = term.weight / (1.0 - term.weight * t);
    d.k1 += term.shape * r;
    d.k2 += term.shape * r * r;
    d.k3 += 2.0 * term.shape * r * r * r;
  }
  return d;
}

double saddlepoint_tail_at(const GammaSumSpec& spec, double t) {
  if (spec.empty()) throw Error(ErrorCode::DomainError, "saddlepoint needs a nonempty spec");
  check_domain(spec, t);
  const double sigma = std::sqrt(spec.variance());
  if (std::abs(t) * sigma < kNearMeanThreshold) return near_mean_tail(spec);
  return lugannani_rice(spec, t).tail;
}

SaddlepointSolution saddlepoint_solve(const GammaSumSpec& spec, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::DomainError, "saddlepoint tail needs z > 0");
  }
  if (spec.empty()) throw Error(ErrorCode::DomainError, "saddlepoint needs a nonempty spec");

  // Work in s = t * wmax, so the admissible range is s < 1 for every scale.
  const double wmax = spec.max_weight();
  auto k1_at = [&](double s) { return cgf_derivatives(spec, s / wmax).k1; };
  const double mean = spec.mean();
  double lo = 0.0;
  double hi = 0.0;
  if (z > mean) {
    // kappa' grows without bound towards the pole.
    double gap = 0.5;
    while (k1_at(1.0 - gap) < z) {
      lo = 1.0 - gap;
      gap *= 0.5;
      if (gap < 1e-300) throw Error(ErrorCode::ConvergenceError, "cannot bracket saddlepoint");
    }
    hi = 1.0 - gap;
  } else if (z < mean) {
    // kappa'(t) <= sum(x) / (-t) for t < 0.
    double shape_total = 0.0;
    for (const auto& term : spec.all_terms()) shape_total += term.shape;
    lo = -shape_total * wmax / z;
    hi = 0.0;
  }
  double s = lo;
  if (lo != hi) {
    for (int i = 0; i < kMaxBisection; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (k1_at(mid) < z ? lo : hi) = mid;
    }
    s = 0.5 * (lo + hi);
  }

  SaddlepointSolution sol;
  sol.t_star = s / wmax;
  const double sigma = std::sqrt(spec.variance());
  if (std::abs(sol.t_star) * sigma < kNearMeanThreshold) {
    sol.near_mean = true;
    sol.tail_prob = near_mean_tail(spec);
  } else {
    const auto parts = lugannani_rice(spec, sol.t_star);
    sol.omega = parts.omega;
    sol.xi = parts.xi;
    sol.tail_prob = parts.tail;
  }
  sol.tail_prob = std::clamp(sol.tail_prob, 0.0, 1.0);
  return sol;
}

double saddlepoint_tail(const GammaSumSpec& spec, double z) {
  if (spec.empty()) {
    if (!(z > 0.0)) throw Error(ErrorCode::DomainError, "saddlepoint tail needs z > 0");
    return 0.0;
  }
  return saddlepoint_solve(spec, z).tail_prob;
}

double saddlepoint_quantile(const GammaSumSpec& spec, double prob_at_least) {
  if (!(prob_at_least > 0.0 && prob_at_least < 1.0)) {
    throw Error(ErrorCode::DomainError, "tail probability must lie in (0, 1)");
  }
  if (spec.empty()) throw Error(ErrorCode::DomainError, "saddlepoint needs a nonempty spec");

  // f is strictly decreasing in t. Bracket from t = 0 outward in s = t * wmax:
  // towards the pole by halving the gap, or towards -inf by doubling.
  const double wmax = spec.max_weight();
  const double sigma_s = std::sqrt(spec.variance()) / wmax;
  auto f = [&](double s) { return saddlepoint_tail_at(spec, s / wmax); };

  const double f0 = f(0.0);
  if (f0 == prob_at_least) return spec.mean();

  double lo = 0.0;
  double hi = 0.0;
  if (f0 > prob_at_least) {
    double gap = 0.5;
    for (;;) {
      const double s = 1.0 - gap;
      if (f(s) < prob_at_least) {
        hi = s;
        break;
      }
      lo = s;
      gap *= 0.5;
      if (gap < 1e-15) throw Error(ErrorCode::ConvergenceError, "cannot bracket upper quantile");
    }
  } else {
    double step = 1.0 / sigma_s;
    for (;;) {
      const double s = -step;
      if (f(s) > prob_at_least) {
        lo = s;
        break;
      }
      hi = s;
      step *= 2.0;
      if (!std::isfinite(step)) throw Error(ErrorCode::ConvergenceError, "cannot bracket lower quantile");
    }
  }

  for (int i = 0; i < kMaxBisection; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm - prob_at_least) < 1e-10 || hi - lo < 1e-12 * (1.0 + std::abs(mid))) {
      return cgf_derivatives(spec, mid / wmax).k1;
    }
    (fm > prob_at_least ? lo : hi) = mid;
  }
  throw Error(ErrorCode::ConvergenceError, "saddlepoint quantile bisection did not converge");
}

double nearest_rank_quantile(std::span<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty set");
  const auto n = values.size();
  // The small slack keeps e.g. 0.05 * 10000 from rounding up to rank 501.
  auto rank = static_cast<std::size_t>(std::ceil(prob * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto it = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

double mc_quantile(const GammaSumSpec& spec, double prob_at_most, std::size_t draws,
                   std::uint64_t seed) {
  if (draws < 100) throw Error(ErrorCode::InvalidArgument, "mc_quantile needs at least 100 draws");
  std::mt19937_64 gen(seed);
  std::vector<std::gamma_distribution<double>> dists;
  for (const auto& term : spec.all_terms()) dists.emplace_back(term.shape, 1.0);
  std::vector<double> values(draws, 0.0);
  for (auto& v : values) {
    for (std::size_t k = 0; k < dists.size(); ++k) v += spec.all_terms()[k].weight * dists[k](gen);
  }
  return nearest_rank_quantile(values, prob_at_most);
}

double single_gamma_cdf(double shape, double rate, double z) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw Error(ErrorCode::DomainError, "gamma shape and rate must be positive");
  }
  return numeric::regularized_gamma_p(shape, rate * z);
}

double single_gamma_quantile(double shape, double rate, double prob_at_most) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw Error(ErrorCode::DomainError, "gamma shape and rate must be positive");
  }
  if (!(prob_at_most > 0.0 && prob_at_most < 1.0)) {
    throw Error(ErrorCode::DomainError, "probability must lie in (0, 1)");
  }
  // Solve in the unit-rate variable x = rate * z.
  auto cdf = [shape](double x) { return numeric::regularized_gamma_p(shape, x); };
  double hi = shape + 20.0 * std::sqrt(shape);
  for (int i = 0; cdf(hi) < prob_at_most; ++i) {
    if (i > 200) throw Error(ErrorCode::ConvergenceError, "cannot bracket gamma quantile");
    hi *= 2.0;
  }
  const double x = numeric::bisect(cdf, prob_at_most, 0.0, hi, /*increasing=*/true, 1e-15, 2000);
  return x / rate;
}

}  // namespace rarerate
