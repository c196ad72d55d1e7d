#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wiball/channel.hpp"

namespace wiball {

/// Zeroth-order Bessel function of the first kind. Power series in long
/// double for |x| <= 20, Hankel asymptotic expansion beyond. Absolute error
/// stays below 1e-12 on [0, 100].
double bessel_j0(double x);

/// Focal-spot decay model J0^2(2 pi d / lambda).
double bessel_reference(double distance, double wavelength);

/// Resonating strength between two CIRs at zero lag, normalized to [0, 1].
/// Throws ParameterError on tap-count mismatch and DegenerateInputError on a
/// zero-energy CIR.
double trrs(const Cir& a, const Cir& b);
double trrs(std::span<const Complex> a, std::span<const Complex> b);

/// Number of TRRS values that rounded above 1 by at most 1e-12 and were
/// clamped, since process start.
std::size_t trrs_clamp_count();

/// Normalized received energy |s(k)|^2 / (E_a E_b) for every lag k in
/// [-(L-1), L-1], where s(k) = sum_l a(l) conj(b(l - k)). The value at
/// k = 0 equals trrs(a, b).
std::vector<double> trrs_lag_profile(const Cir& a, const Cir& b);

struct TrrsEntry {
  double timestamp = 0.0;
  double value = 0.0;
};

struct TrrsSeries {
  double reference_timestamp = 0.0;
  std::vector<TrrsEntry> entries;
};

TrrsSeries trrs_series(const Cir& reference, const std::vector<Cir>& stream);

/// TRRS between each CIR and its predecessors within max_lag. Column c
/// belongs to stream[c]; row j holds lag (j + 1) * sample_period. Lags with
/// no matching CIR (lost packets, start of stream) are absent.
class TrrsMatrix {
 public:
  TrrsMatrix() = default;
  TrrsMatrix(std::vector<double> times, double sample_period, std::size_t lag_count);

  std::size_t columns() const { return times_.size(); }
  std::size_t lag_count() const { return lag_count_; }
  double sample_period() const { return sample_period_; }
  double time(std::size_t col) const { return times_[col]; }
  double lag(std::size_t row) const { return static_cast<double>(row + 1) * sample_period_; }

  const std::optional<double>& at(std::size_t col, std::size_t row) const {
    return values_[col * lag_count_ + row];
  }
  std::optional<double>& at(std::size_t col, std::size_t row) { return values_[col * lag_count_ + row]; }

  /// (lag, value) pairs of one column, absent entries included.
  std::vector<std::pair<double, std::optional<double>>> column(std::size_t col) const;

 private:
  std::vector<double> times_;
  double sample_period_ = 0.0;
  std::size_t lag_count_ = 0;
  std::vector<std::optional<double>> values_;
};

/// Smallest positive gap between consecutive timestamps.
double infer_sample_period(const std::vector<Cir>& stream);

TrrsMatrix trrs_sliding_matrix(const std::vector<Cir>& stream, double max_lag);
TrrsMatrix trrs_sliding_matrix(const std::vector<Cir>& stream, double max_lag, double sample_period,
                               std::size_t column_stride = 1);

/// Column-major CSV with header "timestamp,lag,value"; absent cells have an
/// empty value field.
std::string matrix_to_csv(const TrrsMatrix& m);
std::string series_to_csv(const TrrsSeries& s);

}  // namespace wiball
