#include "rarerate/numeric.hpp"

#include <limits>
#include <string>

namespace rarerate::numeric {
namespace {

constexpr int kMaxIterations = 1'000'000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// log of x^a e^-x / Gamma(a)
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// P(a, x) by its power series, for x < a + 1.
double lower_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) {
      return sum * std::exp(log_prefactor(a, x));
    }
  }
  throw Error(ErrorCode::ConvergenceError, "incomplete gamma series did not converge");
}

// Q(a, x) by Lentz's continued fraction, for x >= a + 1.
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return std::exp(log_prefactor(a, x)) * h;
  }
  throw Error(ErrorCode::ConvergenceError, "incomplete gamma continued fraction did not converge");
}

void check_args(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::DomainError, "incomplete gamma needs a positive shape, got " + std::to_string(a));
  }
  if (std::isnan(x)) throw Error(ErrorCode::DomainError, "incomplete gamma argument is NaN");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  check_args(a, x);
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? lower_series(a, x) : 1.0 - upper_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_args(a, x);
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - lower_series(a, x) : upper_fraction(a, x);
}

}  // namespace rarerate::numeric
