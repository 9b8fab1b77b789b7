#include "gevbev/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gevbev {

namespace {

// Upward recurrence moves the argument past this point before the asymptotic series.
constexpr double kAsymptoticThreshold = 10.0;

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || std::isinf(x)) {
    throw std::domain_error(std::string(name) + " requires a finite positive argument");
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  // ln Gamma(x) = ln Gamma(x + n) - ln(x (x+1) ... (x+n-1))
  double shift = 0.0;
  double product = 1.0;
  while (x < kAsymptoticThreshold) {
    product *= x;
    x += 1.0;
    // Keep the running product in range for tiny starting arguments.
    if (product < 1e-280 || product > 1e280) {
      shift += std::log(product);
      product = 1.0;
    }
  }
  shift += std::log(product);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series with Bernoulli coefficients B_2k / (2k (2k-1)).
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0)))))));
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (x - 0.5) * std::log(x) - x + half_log_two_pi + series - shift;
}

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  // psi(x) ~ ln x - 1/(2x) - sum B_2k / (2k x^2k)
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
  const double series =
      inv * inv2 *
      (1.0 / 6.0 -
       inv2 * (1.0 / 30.0 -
               inv2 * (1.0 / 42.0 -
                       inv2 * (1.0 / 30.0 -
                               inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
  return acc + inv + 0.5 * inv2 + series;
}

}  // namespace gevbev
