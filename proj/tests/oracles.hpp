#pragma once
// Reference computations written independently of the library code paths.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "wiball/channel.hpp"

namespace oracle {

inline constexpr long double kPiL = 3.141592653589793238462643383279502884L;

/// J0 from Bessel's integral (1/pi) * int_0^pi cos(x sin t) dt. The
/// integrand is smooth and periodic, so the trapezoid rule converges
/// geometrically; 2000 panels are plenty for |x| <= 100.
inline double j0_integral(double x) {
  const int n = 2000;
  long double acc = 0.5L * (std::cos(0.0L) + std::cos(static_cast<long double>(x) * std::sin(kPiL)));
  for (int i = 1; i < n; ++i) {
    const long double t = kPiL * i / n;
    acc += std::cos(static_cast<long double>(x) * std::sin(t));
  }
  return static_cast<double>(acc / n);
}

/// J0 from the C++17 special math functions.
inline double j0_std(double x) { return std::cyl_bessel_j(0.0, x); }

/// Root of f in [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F f, double lo, double hi) {
  const bool lo_neg = f(lo) < 0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == lo_neg)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// First zero of J0 and first zero of J1 (the first extremum of J0 after
/// its zero), in wavelengths: x / (2 pi).
inline double first_null_wavelengths() {
  return bisect([](double x) { return std::cyl_bessel_j(0.0, x); }, 2.0, 3.0) / (2 * M_PI);
}
inline double first_peak_wavelengths() {
  return bisect([](double x) { return std::cyl_bessel_j(1.0, x); }, 3.0, 4.5) / (2 * M_PI);
}

/// Direct TRRS formula in long double.
inline double trrs(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
  std::complex<long double> s = 0;
  long double ea = 0, eb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::complex<long double> x(a[i].real(), a[i].imag()), y(b[i].real(), b[i].imag());
    s += x * std::conj(y);
    ea += std::norm(x);
    eb += std::norm(y);
  }
  return static_cast<double>(std::norm(s) / (ea * eb));
}

inline std::vector<std::complex<double>> random_taps(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::complex<double>> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

/// Tap index and complex contribution of a path of length r, from the
/// baseband model: gain * exp(i 2 pi (f0 l / B - r f0 / c)), without the
/// fractional-cycle reduction used by the library.
inline std::pair<long, std::complex<double>> tap_contribution(double r, double gain, double f0, double bandwidth) {
  const long double c = 299792458.0L;
  const long l = std::lround(std::floor(static_cast<long double>(r) * bandwidth / c + 0.5L));
  const long double cycles = static_cast<long double>(f0) * l / bandwidth - static_cast<long double>(r) * f0 / c;
  const long double phase = 2 * kPiL * (cycles - std::floor(cycles));
  return {l, {static_cast<double>(gain * std::cos(phase)), static_cast<double>(gain * std::sin(phase))}};
}

}  // namespace oracle
