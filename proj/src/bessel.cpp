#include <cmath>

#include "wiball/error.hpp"
#include "wiball/trrs.hpp"

namespace wiball {

namespace {

constexpr double kSeriesLimit = 20.0;

double j0_series(double x) {
  const long double q = static_cast<long double>(x) * x / 4.0L;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * k);
    sum += term;
    if (k > x && std::fabs(term) < 1e-22L) break;
  }
  return static_cast<double>(sum);
}

// Hankel expansion; terms are summed until they stop shrinking.
double j0_asymptotic(double x) {
  double p = 0.0;
  double q = 0.0;
  double a = 1.0;  // a_k(0) / x^k
  double prev = INFINITY;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      const double m = 2.0 * k - 1.0;
      a *= -(m * m) / (8.0 * k * x);
    }
    const double mag = std::fabs(a);
    if (mag > prev) break;
    prev = mag;
    // (-1)^(k/2) for even k, (-1)^((k-1)/2) for odd k
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0)
      p += sign * a;
    else
      q += sign * a;
    if (mag < 1e-18) break;
  }
  const double chi = x - kPi / 4.0;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  x = std::fabs(x);
  return x <= kSeriesLimit ? j0_series(x) : j0_asymptotic(x);
}

double bessel_reference(double distance, double wavelength) {
  if (!(distance >= 0)) throw ParameterError("bessel_reference: distance must be >= 0");
  if (!(wavelength > 0)) throw ParameterError("bessel_reference: wavelength must be positive");
  const double j = bessel_j0(kTwoPi * distance / wavelength);
  return j * j;
}

}  // namespace wiball
