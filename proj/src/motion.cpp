#include "wiball/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "wiball/error.hpp"

namespace wiball {

namespace {

// Least-squares y = a u^2 + b u + c with u = x - x0. Returns the vertex
// offset when the parabola opens downward.
std::optional<double> quadratic_vertex(std::span<const double> u, std::span<const double> y) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = u[i], x2 = x * x;
    s0 += 1;
    s1 += x;
    s2 += x2;
    s3 += x2 * x;
    s4 += x2 * x2;
    t0 += y[i];
    t1 += x * y[i];
    t2 += x2 * y[i];
  }
  // [s4 s3 s2; s3 s2 s1; s2 s1 s0] [a b c]' = [t2 t1 t0]'
  auto det3 = [](double a11, double a12, double a13, double a21, double a22, double a23, double a31,
                 double a32, double a33) {
    return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) + a13 * (a21 * a32 - a22 * a31);
  };
  const double d = det3(s4, s3, s2, s3, s2, s1, s2, s1, s0);
  if (std::fabs(d) < 1e-300) return std::nullopt;
  const double a = det3(t2, s3, s2, t1, s2, s1, t0, s1, s0) / d;
  const double b = det3(s4, t2, s2, s3, t1, s1, s2, t0, s0) / d;
  if (!(a < 0)) return std::nullopt;
  return -b / (2 * a);
}

}  // namespace

PeakResult find_first_peak(const LagProfile& profile, const PeakFitConfig& cfg) {
  std::vector<double> x, y;
  x.reserve(profile.size());
  y.reserve(profile.size());
  for (const auto& [lag, v] : profile) {
    if (!v) continue;
    if (!x.empty() && !(lag > x.back())) throw ParameterError("find_first_peak: lags must increase");
    x.push_back(lag);
    y.push_back(*v);
  }
  PeakResult res;
  const std::size_t n = x.size();
  if (n < std::max<std::size_t>(3, cfg.min_entries)) {
    res.reason = NoPeakReason::too_few_entries;
    return res;
  }
  if (*std::min_element(y.begin(), y.end()) >= cfg.stationary_level) {
    res.reason = NoPeakReason::stationary;
    return res;
  }

  // Grid spacing: the smallest lag step present.
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) step = std::min(step, x[k] - x[k - 1]);

  double running_min = y[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    running_min = std::min(running_min, y[i - 1]);
    const bool decayed = running_min < cfg.stationary_level;
    if (!decayed || !(y[i] > y[i - 1] && y[i] > y[i + 1]) || y[i] - running_min < cfg.prominence) continue;

    std::size_t lo = i, hi = i;
    while (lo > 0 && y[lo - 1] < y[lo]) --lo;
    while (hi + 1 < n && y[hi + 1] < y[hi]) ++hi;
    std::size_t half = std::max<std::size_t>(1, cfg.window / 2);
    while (half > 1 && (i < lo + half || i + half > hi)) --half;

    bool gapped = false;
    for (std::size_t k = i - half; k < i + half; ++k) gapped = gapped || x[k + 1] - x[k] > 1.5 * step;

    std::vector<double> u, w;
    double lag = x[i];
    if (!gapped) {
      for (std::size_t k = i - half; k <= i + half; ++k) {
        u.push_back(x[k] - x[i]);
        w.push_back(y[k]);
      }
      if (auto off = quadratic_vertex(u, w)) lag = std::clamp(x[i] + *off, x[i - half], x[i + half]);
    } else {
      // Missing samples: fit over a lag window instead of an index window,
      // widening it within the lobe until the parabola is concave.
      for (std::size_t reach = half; reach <= half + 2; ++reach) {
        const double span = static_cast<double>(reach) * step * (1 + 1e-9);
        u.clear();
        w.clear();
        for (std::size_t k = lo; k <= hi; ++k) {
          if (std::fabs(x[k] - x[i]) > span) continue;
          u.push_back(x[k] - x[i]);
          w.push_back(y[k]);
        }
        if (u.size() < 3) continue;
        if (auto off = quadratic_vertex(u, w); off && std::fabs(*off) <= span) {
          lag = std::clamp(x[i] + *off, x[i] + u.front(), x[i] + u.back());
          break;
        }
      }
    }

    PeakFit fit;
    fit.peak_lag = lag;
    fit.peak_value = y[i];
    fit.valley_value = running_min;
    fit.confidence = running_min < 1.0 ? std::clamp((y[i] - running_min) / (1.0 - running_min), 0.0, 1.0) : 0.0;
    res.peak = fit;
    return res;
  }
  res.reason = NoPeakReason::no_maximum;
  return res;
}

SpeedEstimate estimate_speed(const LagProfile& column, double timestamp, double wavelength,
                             const PeakFitConfig& cfg) {
  if (!(wavelength > 0)) throw ParameterError("estimate_speed: wavelength must be positive");
  LagProfile profile;
  profile.reserve(column.size() + 1);
  profile.emplace_back(0.0, 1.0);
  for (const auto& e : column)
    if (e.first > 0) profile.push_back(e);

  SpeedEstimate est;
  est.timestamp = timestamp;
  const PeakResult r = find_first_peak(profile, cfg);
  if (!r || !(r.peak->peak_lag > 0)) {
    est.stationary = r.reason == NoPeakReason::stationary;
    return est;
  }
  est.peak_lag = r.peak->peak_lag;
  est.speed = kFirstPeakWavelengths * wavelength / est.peak_lag;
  est.confidence = r.peak->confidence;
  return est;
}

std::vector<SpeedEstimate> estimate_speeds(const TrrsMatrix& matrix, double wavelength, const PeakFitConfig& cfg) {
  std::vector<SpeedEstimate> out;
  out.reserve(matrix.columns());
  for (std::size_t c = 0; c < matrix.columns(); ++c)
    out.push_back(estimate_speed(matrix.column(c), matrix.time(c), wavelength, cfg));
  return out;
}

std::vector<SpeedEstimate> median_smooth(const std::vector<SpeedEstimate>& speeds, std::size_t window) {
  if (window <= 1) return speeds;
  const std::size_t half = window / 2;
  std::vector<SpeedEstimate> out = speeds;
  std::vector<double> buf;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (!(speeds[i].peak_lag > 0)) continue;
    buf.clear();
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(speeds.size() - 1, i + half);
    for (std::size_t k = lo; k <= hi; ++k)
      if (speeds[k].peak_lag > 0) buf.push_back(speeds[k].speed);
    auto mid = buf.begin() + static_cast<long>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    double med = *mid;
    if (buf.size() % 2 == 0) med = 0.5 * (med + *std::max_element(buf.begin(), mid));
    out[i].speed = med;
  }
  return out;
}

double DistanceTrack::distance_at(double t) const {
  if (increments.empty() || t <= increments.front().t_start) return 0.0;
  double acc = 0.0;
  for (const auto& inc : increments) {
    if (t >= inc.t_end) {
      acc += inc.distance;
      continue;
    }
    const double span = inc.t_end - inc.t_start;
    if (span > 0 && t > inc.t_start) acc += inc.distance * (t - inc.t_start) / span;
    break;
  }
  return acc;
}

DistanceTrack integrate_distance(const std::vector<SpeedEstimate>& speeds, const IntegrationConfig& cfg) {
  DistanceTrack track;
  if (speeds.empty()) return track;
  std::vector<double> v(speeds.size(), 0.0);
  std::optional<std::pair<double, double>> last;  // (time, speed)
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const auto& s = speeds[i];
    if (i > 0 && !(s.timestamp > speeds[i - 1].timestamp))
      throw ParameterError("integrate_distance: timestamps must increase");
    if (s.stationary) {
      v[i] = 0.0;
      last = {s.timestamp, 0.0};
    } else if (s.peak_lag > 0 && s.confidence >= cfg.min_confidence) {
      v[i] = std::max(0.0, s.speed);
      last = {s.timestamp, v[i]};
    } else if (last) {
      const double age = s.timestamp - last->first;
      if (age <= cfg.hold_time)
        v[i] = last->second;
      else if (cfg.decay_time > 0 && age <= cfg.hold_time + cfg.decay_time)
        v[i] = last->second * (1.0 - (age - cfg.hold_time) / cfg.decay_time);
    }
  }
  track.increments.reserve(speeds.size() - 1);
  for (std::size_t i = 1; i < speeds.size(); ++i) {
    const double dt = speeds[i].timestamp - speeds[i - 1].timestamp;
    const double d = 0.5 * (v[i - 1] + v[i]) * dt;
    track.increments.push_back({speeds[i - 1].timestamp, speeds[i].timestamp, d});
    track.cumulative_distance += d;
  }
  return track;
}

DistanceResult estimate_distance(const std::vector<Cir>& stream, double wavelength,
                                 const DistancePipelineConfig& cfg) {
  DistanceResult res;
  if (stream.size() < 2) return res;
  const double period = cfg.sample_period > 0 ? cfg.sample_period : infer_sample_period(stream);
  const TrrsMatrix m = trrs_sliding_matrix(stream, cfg.max_lag, period, cfg.column_stride);
  res.speeds = median_smooth(estimate_speeds(m, wavelength, cfg.peak), cfg.smoothing_window);
  res.track = integrate_distance(res.speeds, cfg.integration);
  return res;
}

std::vector<LossSweepRow> packet_loss_sweep(const std::vector<Cir>& trajectory,
                                            const std::vector<double>& loss_rates, std::size_t trials,
                                            std::uint64_t seed, double wavelength,
                                            const DistancePipelineConfig& cfg) {
  if (trials == 0) throw ParameterError("packet_loss_sweep: trials must be >= 1");
  for (double p : loss_rates)
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("packet_loss_sweep: loss rates must be in [0,1)");
  DistancePipelineConfig run_cfg = cfg;
  if (!(run_cfg.sample_period > 0)) run_cfg.sample_period = infer_sample_period(trajectory);

  std::vector<LossSweepRow> rows;
  std::vector<Cir> kept;
  for (std::size_t r = 0; r < loss_rates.size(); ++r) {
    std::vector<double> dist;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(trial)};
      std::mt19937_64 rng(ss);
      std::bernoulli_distribution drop(loss_rates[r]);
      kept.clear();
      for (const auto& c : trajectory)
        if (!drop(rng)) kept.push_back(c);
      dist.push_back(estimate_distance(kept, wavelength, run_cfg).track.cumulative_distance);
    }
    const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
    double var = 0.0;
    for (double d : dist) var += (d - mean) * (d - mean);
    const double sd = dist.size() > 1 ? std::sqrt(var / static_cast<double>(dist.size() - 1)) : 0.0;
    rows.push_back({loss_rates[r], mean, sd});
  }
  return rows;
}

}  // namespace wiball
