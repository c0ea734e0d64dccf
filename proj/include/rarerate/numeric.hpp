#pragma once

// Scalar special functions and root bracketing shared by the engines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "rarerate/error.hpp"

namespace rarerate::numeric {

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Phi(x) via erfc, accurate in both tails.
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x) without cancellation for large x.
inline double normal_upper_tail(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Regularized lower incomplete gamma P(shape, x).
double regularized_gamma_p(double shape, double x);
/// Regularized upper incomplete gamma Q(shape, x) = 1 - P(shape, x).
double regularized_gamma_q(double shape, double x);

/// Bisection on a monotone function that changes sign over [lo, hi].
/// `increasing` states the direction of `f`. Stops when the bracket is
/// narrower than `rel_tol * max(|lo|, |hi|)` or stops shrinking.
template <class F>
double bisect(F&& f, double target, double lo, double hi, bool increasing, double rel_tol,
              std::size_t max_iter = 400) {
  for (std::size_t i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double v = f(mid);
    if (v == target) return mid;
    if ((v < target) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= rel_tol * std::max(std::abs(lo), std::abs(hi))) return 0.5 * (lo + hi);
  }
  throw Error(ErrorCode::ConvergenceError, "bisection did not converge");
}

}  // namespace rarerate::numeric
