// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Tolerances and time limits are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wiball/channel.hpp"
#include "wiball/heading.hpp"
#include "wiball/motion.hpp"
#include "wiball/scenarios.hpp"
#include "wiball/tracker.hpp"
#include "wiball/trrs.hpp"

using namespace wiball;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const double kLambda = kSpeedOfLight / 5.8e9;

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_std(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. TRRS algebra over 1000 random CIRs.
Outcome trrs_algebra() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(1, 300);
  std::uniform_real_distribution<double> mag(-8, 8), ph(0, 2 * M_PI);
  std::size_t failures = 0;
  double worst_scale = 0;
  std::vector<std::vector<Complex>> cirs;
  for (int i = 0; i < 1000; ++i) {
    auto taps = oracle::random_taps(rng, len(rng));
    const double s = std::exp(mag(rng));
    for (auto& t : taps) t *= s;
    cirs.push_back(std::move(taps));
  }
  for (std::size_t i = 0; i < cirs.size(); ++i) {
    const auto& a = cirs[i];
    auto b = oracle::random_taps(rng, a.size());
    if (trrs(std::span<const Complex>(a), std::span<const Complex>(a)) != 1.0) ++failures;
    const double ab = trrs(std::span<const Complex>(a), std::span<const Complex>(b));
    const double ba = trrs(std::span<const Complex>(b), std::span<const Complex>(a));
    if (ab != ba) ++failures;
    if (!(ab >= 0.0 && ab <= 1.0)) ++failures;
    const Complex c = std::polar(std::exp(mag(rng)), ph(rng));
    auto ca = a;
    for (auto& x : ca) x *= c;
    const double d = std::abs(trrs(std::span<const Complex>(ca), std::span<const Complex>(b)) - ab);
    worst_scale = std::max(worst_scale, d);
    if (d > 1e-12) ++failures;
    // Near-identical pairs exercise the upper end of the range.
    auto near = a;
    near[0] += Complex(1e-9 * std::abs(a[0]), 0);
    const double v = trrs(std::span<const Complex>(a), std::span<const Complex>(near));
    if (!(v >= 0.0 && v <= 1.0)) ++failures;
  }
  return {failures == 0, "failures=" + std::to_string(failures) + fmt(" worst_scale_dev=%.2e", worst_scale)};
}

// 2. Focal-spot statistics against J0^2.
Outcome bessel_focal_spot() {
  const double null_ref = oracle::first_null_wavelengths();
  const double peak_ref = oracle::first_peak_wavelengths();
  FocalCurveConfig cfg;
  cfg.scene.n_scatterers = 200;
  cfg.scene.region_side = 7.5;
  cfg.scene.tx_rx_separation = 30.0;
  cfg.scene.direct_path = false;
  for (std::uint64_t s = 1; s <= 50; ++s) cfg.seeds.push_back(s);
  std::vector<double> rmse;
  FocalCurve wide;
  for (double b : {40e6, 125e6, 500e6}) {
    cfg.scene.bandwidth = b;
    FocalCurve c = focal_curve(cfg);
    // RMSE recomputed against the test-side oracle.
    double se = 0;
    for (std::size_t i = 0; i < c.distance_wl.size(); ++i) {
      const double j = oracle::j0_std(2 * M_PI * c.distance_wl[i]);
      se += (c.mean_trrs[i] - j * j) * (c.mean_trrs[i] - j * j);
    }
    rmse.push_back(std::sqrt(se / static_cast<double>(c.distance_wl.size())));
    if (b == 500e6) wide = c;
  }
  const bool decreasing = rmse[0] > rmse[1] && rmse[1] > rmse[2];
  const double null_err = wide.first_null_wl ? std::abs(*wide.first_null_wl - null_ref) / null_ref : 1.0;
  const double peak_err = wide.first_peak_wl ? std::abs(*wide.first_peak_wl - peak_ref) / peak_ref : 1.0;
  const bool pass = decreasing && null_err < 0.15 && peak_err < 0.15;
  return {pass, fmt("rmse40=%.4f", rmse[0]) + fmt(" rmse125=%.4f", rmse[1]) + fmt(" rmse500=%.4f", rmse[2]) +
                    fmt(" null_err=%.3f", null_err) + fmt(" peak_err=%.3f", peak_err)};
}

// 3. Speed estimator accuracy.
Outcome speed_accuracy() {
  bool pass = true;
  std::string detail;
  const double k = 2 * M_PI / kLambda;
  for (double v : {0.5, 1.0, 2.0}) {
    // Noiseless oracle profile.
    LagProfile prof;
    for (int i = 1; i * 0.005 <= 0.16 + 1e-12; ++i) {
      const double j = oracle::j0_std(k * v * i * 0.005);
      prof.emplace_back(i * 0.005, j * j);
    }
    const double oracle_err = std::abs(estimate_speed(prof, 0.0, kLambda).speed - v) / v;
    // Synthesized trajectories, averaged over seeds.
    std::vector<double> est;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      SpeedTrialConfig cfg;
      cfg.scene.direct_path = false;
      cfg.scene.bandwidth = 500e6;
      cfg.speed = v;
      cfg.seed = seed;
      est.push_back(constant_speed_trial(cfg).mean_speed);
    }
    const double sim_err = std::abs(mean(est) - v) / v;
    pass = pass && oracle_err < 0.02 && sim_err < 0.05;
    detail += fmt(" v=%.1f:", v) + fmt("oracle=%.4f", oracle_err) + fmt(",sim=%.4f", sim_err);
  }
  return {pass, detail.substr(1)};
}

// 4. Loop-distance consistency.
Outcome loop_distance() {
  LoopConfig cfg;
  cfg.loop_length = 8.0;
  std::vector<double> err;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const LapResult r = simulate_lap(cfg, seed);
    err.push_back(r.estimated_length - r.true_length);
  }
  const double m = mean(err), s = sample_std(err);
  return {std::abs(m) < 0.1 && s < 0.2, fmt("mean_err=%.4f m", m) + fmt(" std=%.4f m", s)};
}

// 5. Packet-loss trend.
Outcome packet_loss() {
  LossConfig cfg;
  cfg.length = 10.0;
  cfg.loss_rates = {0.0, 0.1, 0.2, 0.3, 0.4};
  cfg.trials = 100;
  const auto rows = run_loss_sweep(cfg);
  bool pass = rows.size() == 5;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) pass = pass && rows[i].mean_distance <= rows[i - 1].mean_distance && rows[i].std_distance >= rows[i - 1].std_distance;
    detail += fmt(" p=%.1f:", rows[i].loss_rate) + fmt("mean=%.3f", rows[i].mean_distance) + fmt(",std=%.4f", rows[i].std_distance);
  }
  return {pass, detail.substr(1)};
}

// 6. Map-corrected tracking.
Outcome map_tracking() {
  OfficeConfig cfg;
  cfg.scale_error = 0.10;
  cfg.drift_deg_per_min = 2.0;
  const std::vector<double> lengths{5, 21, 25, 30, 40, 64, 69};
  std::vector<double> corrected, uncorrected;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    for (const auto& t : simulate_office_walks(cfg, lengths, seed)) {
      corrected.push_back(t.corrected_error);
      uncorrected.push_back(t.uncorrected_error);
    }
  }
  const double mc = median(corrected), mu = median(uncorrected);
  return {corrected.size() == 175 && mc < 0.5 && mc < mu,
          fmt("median_corrected=%.3f m", mc) + fmt(" median_uncorrected=%.3f m", mu) +
              " n=" + std::to_string(corrected.size())};
}

// 7. Heading projection identities.
Outcome heading_math() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> dtd(1e-3, 1.0), ang(-M_PI, M_PI);
  double worst_flat = 0, worst_orth = 0, worst_rot = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 w{n(rng), n(rng), n(rng)};
    const double dt = dtd(rng);
    ImuSample s{0.0, w, {}};
    worst_flat = std::max(worst_flat, std::abs(heading_delta(s, {0, 0, 1}, dt).delta_theta - w.z * dt));

    Vec3 g{n(rng), n(rng), n(rng)};
    g = g * (1.0 / g.norm());
    // Component of w orthogonal to g.
    Vec3 perp = w - g * w.dot(g);
    ImuSample sp{0.0, perp, {}};
    worst_orth = std::max(worst_orth, std::abs(heading_delta(sp, g, dt).delta_theta));

    // Random rigid rotation from yaw-pitch-roll.
    const double a = ang(rng), b = ang(rng), c = ang(rng);
    auto rot = [&](Vec3 v) {
      Vec3 r1{std::cos(a) * v.x - std::sin(a) * v.y, std::sin(a) * v.x + std::cos(a) * v.y, v.z};
      Vec3 r2{std::cos(b) * r1.x + std::sin(b) * r1.z, r1.y, -std::sin(b) * r1.x + std::cos(b) * r1.z};
      return Vec3{r2.x, std::cos(c) * r2.y - std::sin(c) * r2.z, std::sin(c) * r2.y + std::cos(c) * r2.z};
    };
    Vec3 rg = rot(g);
    rg = rg * (1.0 / rg.norm());
    ImuSample sr{0.0, rot(w), {}};
    worst_rot = std::max(worst_rot, std::abs(heading_delta(sr, rg, dt).delta_theta - heading_delta(s, g, dt).delta_theta));
  }
  const bool pass = worst_flat == 0.0 && worst_orth <= 1e-12 && worst_rot <= 1e-12;
  return {pass, fmt("flat=%.1e", worst_flat) + fmt(" orth=%.1e", worst_orth) + fmt(" rot=%.1e", worst_rot)};
}

// 8. Dead-reckoning fold against the closed-form sum.
Outcome dead_reckoning() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dd(0.0, 1.5), th(-0.8, 0.8), pos(-50, 50), h0(-M_PI, M_PI);
  std::uniform_int_distribution<int> len(1, 200);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    TrackerConfig cfg;
    cfg.initial_position = {pos(rng), pos(rng)};
    cfg.initial_heading = h0(rng);
    cfg.scale_grid = {1.0};
    cfg.bias_grid = {0.0};
    TrackState s = initial_state(cfg);
    long double x = cfg.initial_position.x, y = cfg.initial_position.y;
    long double theta = cfg.initial_heading;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      const double d = dd(rng), dth = th(rng);
      theta += dth;
      x += d * std::cos(theta);
      y += d * std::sin(theta);
      s = dead_reckon_step(std::move(s), i + 1.0, d, dth);
    }
    worst = std::max(worst, std::hypot(s.current_pose.pos.x - static_cast<double>(x),
                                       s.current_pose.pos.y - static_cast<double>(y)));
  }
  return {worst < 1e-9, fmt("worst=%.2e m", worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1 trrs-algebra", 10, trrs_algebra},
      {"C2 bessel-focal-spot", 180, bessel_focal_spot},
      {"C3 speed-accuracy", 60, speed_accuracy},
      {"C4 loop-distance", 180, loop_distance},
      {"C5 packet-loss-trend", 180, packet_loss},
      {"C6 map-corrected-tracking", 300, map_tracking},
      {"C7 heading-math", 5, heading_math},
      {"C8 dead-reckoning-additivity", 5, dead_reckoning},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %s: %s time=%.1fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.limit_s, in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
