#include "wiball/trrs.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wiball/error.hpp"

namespace wiball {

namespace {

std::atomic<std::size_t> g_clamps{0};

struct Inner {
  double re;
  double im;
};

// sum_l a(l) * conj(b(l)). Swapping the arguments yields the exact complex
// conjugate, which keeps trrs() bitwise symmetric.
Inner inner_conj(const Complex* a, const Complex* b, std::size_t n) {
  const auto* pa = reinterpret_cast<const double*>(a);
  const auto* pb = reinterpret_cast<const double*>(b);
  // Four independent accumulator pairs keep the FP adders busy. Swapping a
  // and b negates every imaginary term exactly, so symmetry is preserved.
  double re[4] = {0, 0, 0, 0};
  double im[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 3 < n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double ar = pa[2 * (i + k)], ai = pa[2 * (i + k) + 1];
      const double br = pb[2 * (i + k)], bi = pb[2 * (i + k) + 1];
      re[k] += ar * br + ai * bi;
      im[k] += ai * br - ar * bi;
    }
  }
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double ar = pa[2 * i], ai = pa[2 * i + 1], br = pb[2 * i], bi = pb[2 * i + 1];
    re[k] += ar * br + ai * bi;
    im[k] += ai * br - ar * bi;
  }
  return {(re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3])};
}

// Same kernel as the cross term, so trrs(h, h) is exactly 1: the real part
// of <h, h> is then bitwise equal to the energy and the imaginary part is 0.
double energy_of(std::span<const Complex> a) { return inner_conj(a.data(), a.data(), a.size()).re; }

double normalized(Inner s, double ea, double eb) {
  double v = (s.re * s.re + s.im * s.im) / (ea * eb);
  if (v > 1.0) {
    g_clamps.fetch_add(1, std::memory_order_relaxed);
    v = 1.0;
  }
  return v;
}

}  // namespace

std::size_t trrs_clamp_count() { return g_clamps.load(); }

double trrs(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw ParameterError("trrs: tap counts differ");
  const double ea = energy_of(a);
  const double eb = energy_of(b);
  if (!(ea > 0) || !(eb > 0)) throw DegenerateInputError("trrs: zero-energy CIR");
  return normalized(inner_conj(a.data(), b.data(), a.size()), ea, eb);
}

double trrs(const Cir& a, const Cir& b) { return trrs(std::span(a.taps), std::span(b.taps)); }

std::vector<double> trrs_lag_profile(const Cir& a, const Cir& b) {
  if (a.taps.size() != b.taps.size()) throw ParameterError("trrs_lag_profile: tap counts differ");
  const double ea = energy_of(a.taps);
  const double eb = energy_of(b.taps);
  if (!(ea > 0) || !(eb > 0)) throw DegenerateInputError("trrs_lag_profile: zero-energy CIR");
  const auto n = static_cast<long>(a.taps.size());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * n - 1));
  for (long k = -(n - 1); k <= n - 1; ++k) {
    Complex s{};
    for (long l = std::max(0L, k); l < std::min(n, n + k); ++l) s += a.taps[l] * std::conj(b.taps[l - k]);
    out.push_back(std::norm(s) / (ea * eb));
  }
  return out;
}

TrrsSeries trrs_series(const Cir& reference, const std::vector<Cir>& stream) {
  TrrsSeries s;
  s.reference_timestamp = reference.timestamp;
  s.entries.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (i > 0 && !(stream[i].timestamp > stream[i - 1].timestamp))
      throw ParameterError("trrs_series: stream timestamps not increasing");
    s.entries.push_back({stream[i].timestamp, trrs(reference, stream[i])});
  }
  return s;
}

TrrsMatrix::TrrsMatrix(std::vector<double> times, double sample_period, std::size_t lag_count)
    : times_(std::move(times)),
      sample_period_(sample_period),
      lag_count_(lag_count),
      values_(times_.size() * lag_count) {}

std::vector<std::pair<double, std::optional<double>>> TrrsMatrix::column(std::size_t col) const {
  std::vector<std::pair<double, std::optional<double>>> out;
  out.reserve(lag_count_);
  for (std::size_t r = 0; r < lag_count_; ++r) out.emplace_back(lag(r), at(col, r));
  return out;
}

double infer_sample_period(const std::vector<Cir>& stream) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < stream.size(); ++i) {
    const double d = stream[i].timestamp - stream[i - 1].timestamp;
    if (d > 0 && d < best) best = d;
  }
  return best;
}

TrrsMatrix trrs_sliding_matrix(const std::vector<Cir>& stream, double max_lag) {
  const double period = infer_sample_period(stream);
  if (!std::isfinite(period)) {
    if (!(max_lag > 0)) throw ParameterError("trrs_sliding_matrix: max_lag must be positive");
    std::vector<double> times;
    for (const auto& c : stream) times.push_back(c.timestamp);
    return TrrsMatrix(std::move(times), max_lag, 1);
  }
  return trrs_sliding_matrix(stream, max_lag, period);
}

TrrsMatrix trrs_sliding_matrix(const std::vector<Cir>& stream, double max_lag, double sample_period,
                               std::size_t column_stride) {
  if (!(max_lag > 0)) throw ParameterError("trrs_sliding_matrix: max_lag must be positive");
  if (!(sample_period > 0)) throw ParameterError("trrs_sliding_matrix: sample period must be positive");
  if (column_stride == 0) throw ParameterError("trrs_sliding_matrix: column stride must be >= 1");
  for (std::size_t i = 1; i < stream.size(); ++i)
    if (!(stream[i].timestamp > stream[i - 1].timestamp))
      throw ParameterError("trrs_sliding_matrix: stream not sorted by timestamp");

  const auto lag_count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(max_lag / sample_period + 1e-9)));
  std::vector<double> energies(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    energies[i] = energy_of(stream[i].taps);
    if (!(energies[i] > 0)) throw DegenerateInputError("trrs_sliding_matrix: zero-energy CIR at index " + std::to_string(i));
    if (stream[i].taps.size() != stream[0].taps.size()) throw ParameterError("trrs_sliding_matrix: tap counts differ");
  }

  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < stream.size(); i += column_stride) cols.push_back(i);
  std::vector<double> times;
  times.reserve(cols.size());
  for (auto i : cols) times.push_back(stream[i].timestamp);
  TrrsMatrix m(std::move(times), sample_period, lag_count);

  const double tol = 0.5 * sample_period;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::size_t i = cols[c];
    const Cir& cur = stream[i];
    for (std::size_t j = i; j-- > 0;) {
      const double dt = cur.timestamp - stream[j].timestamp;
      if (dt > max_lag + tol) break;
      const auto step = static_cast<long>(std::lround(dt / sample_period));
      if (step < 1 || static_cast<std::size_t>(step) > lag_count) continue;
      auto& cell = m.at(c, static_cast<std::size_t>(step - 1));
      if (cell) continue;
      // Argument order matches trrs(cir(t - lag), cir(t)).
      cell = normalized(inner_conj(stream[j].taps.data(), cur.taps.data(), cur.taps.size()), energies[j],
                        energies[i]);
    }
  }
  return m;
}

std::string matrix_to_csv(const TrrsMatrix& m) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "timestamp,lag,value\n";
  for (std::size_t c = 0; c < m.columns(); ++c) {
    for (std::size_t r = 0; r < m.lag_count(); ++r) {
      os << m.time(c) << ',' << m.lag(r) << ',';
      if (const auto& v = m.at(c, r)) os << *v;
      os << '\n';
    }
  }
  return os.str();
}

std::string series_to_csv(const TrrsSeries& s) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "timestamp,lag,value\n";
  for (const auto& e : s.entries) os << e.timestamp << ',' << (e.timestamp - s.reference_timestamp) << ',' << e.value << '\n';
  return os.str();
}

}  // namespace wiball
