#pragma once

// Quantiles of weighted sums of independent Gamma variables
//
//   Z = sum_k w_k G_k,  G_k ~ Gamma(shape x_k, rate 1),
//
// with cumulant generating function kappa(t) = -sum_k x_k log(1 - w_k t),
// defined for t < 1 / max_k w_k. Two backends are provided: plain Monte Carlo
// and the Lugannani-Rice saddlepoint approximation of P(Z >= z).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rarerate/core.hpp"

namespace rarerate {

struct CgfDerivatives {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
};

/// kappa(t); DomainError when t >= 1 / max weight.
double cgf(const GammaSumSpec& spec, double t);
/// (kappa', kappa'', kappa''') at t; DomainError when t >= 1 / max weight.
CgfDerivatives cgf_derivatives(const GammaSumSpec& spec, double t);

struct SaddlepointSolution {
  double t_star = 0.0;
  double omega = 0.0;
  double xi = 0.0;
  double tail_prob = 0.0;
  /// True when |t*| sqrt(kappa''(0)) fell below the switch-over threshold and
  /// the z = EZ expansion was used.
  bool near_mean = false;
};

/// |t| sqrt(kappa''(0)) below this uses the expansion at z = EZ.
inline constexpr double kNearMeanThreshold = 1e-6;

/// Lugannani-Rice tail f(t) = 1 - Phi(xi(t)) + phi(xi(t)) (1/omega(t) - 1/xi(t)),
/// i.e. the approximate P(Z >= kappa'(t)). Strictly decreasing in t.
double saddlepoint_tail_at(const GammaSumSpec& spec, double t);

/// Solves kappa'(t*) = z and evaluates the tail approximation there.
SaddlepointSolution saddlepoint_solve(const GammaSumSpec& spec, double z);

/// Approximate P(Z >= z) for z > 0, clamped to [0, 1].
double saddlepoint_tail(const GammaSumSpec& spec, double z);

/// z such that the approximate P(Z >= z) equals prob_at_least.
double saddlepoint_quantile(const GammaSumSpec& spec, double prob_at_least);

/// Nearest-rank empirical quantile: the ceil(prob * n)-th smallest value
/// (1-based, clamped to [1, n]). Reorders `values`.
double nearest_rank_quantile(std::span<double> values, double prob);

/// Monte Carlo quantile of Z from `draws` independent realizations.
double mc_quantile(const GammaSumSpec& spec, double prob_at_most, std::size_t draws,
                   std::uint64_t seed);

/// CDF of Gamma(shape, rate) at z.
double single_gamma_cdf(double shape, double rate, double z);

/// Inverse CDF of Gamma(shape, rate), by bracketed root finding.
double single_gamma_quantile(double shape, double rate, double prob_at_most);

}  // namespace rarerate
