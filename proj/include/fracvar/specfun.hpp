#pragma once

namespace fracvar {

/// Gamma function for z > 0. Relative error below 1e-13 on [0.05, 50].
/// Throws DomainError for z <= 0 or NaN.
double gamma_fn(double z);

/// Natural log of the Gamma function for z > 0.
double log_gamma(double z);

/// Digamma psi(z) = Gamma'(z)/Gamma(z) for z > 0.
double digamma(double z);

/// One-parameter Mittag-Leffler function E_alpha(z) = sum_{k>=0} z^k / Gamma(alpha*k + 1).
///
/// Compensated power series; no asymptotic branch. Arguments for which the series
/// cannot deliver ~1e-10 relative accuracy in double precision (overflowing terms, or
/// cancellation when z < 0 is large) are rejected with DomainError, as is alpha <= 0.
double mittag_leffler(double alpha, double z);

/// d/dz E_alpha(z), by term-wise differentiation of the same series.
double mittag_leffler_derivative(double alpha, double z);

}  // namespace fracvar
