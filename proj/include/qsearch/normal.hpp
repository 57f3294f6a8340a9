// Standard normal cdf and quantile.
#pragma once

namespace qsearch {

/// Phi(x), evaluated through erfc for accuracy in both tails.
double gaussian_cdf(double x);

/// Phi^{-1}(eps) for eps in (0,1), absolute error below 1e-9.
/// Rational approximation refined by one Halley step against erfc.
double gaussian_quantile(double eps);

}  // namespace qsearch
