#pragma once

namespace gevbev {

/// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

/// Digamma psi(x) = d/dx ln Gamma(x), x > 0.
double digamma(double x);

/// Trigamma psi'(x), x > 0.
double trigamma(double x);

}  // namespace gevbev
