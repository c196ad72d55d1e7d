// Command-line front end: trace synthesis, TRRS, distance, tracking,
// experiment scenarios and trace conversion.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wiball/error.hpp"
#include "wiball/io.hpp"
#include "wiball/scenarios.hpp"
#include "wiball/tracker.hpp"
#include "wiball/trrs.hpp"
#include "wiball/walker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wiball;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON config document")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed override");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Tabular output format")->check(CLI::IsMember({"csv", "jsonl"}));
}

json load_config(const CommonOptions& o) { return o.config.empty() ? json::object() : io::load_json(o.config); }

fs::path out_dir(const CommonOptions& o, const std::string& fallback) {
  const fs::path dir = o.out.empty() ? fs::path(fallback) : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

// Writes rows either as CSV (header + lines) or JSONL (one object per row).
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<double> row) { rows_.push_back(std::move(row)); }
  void add_cells(std::vector<std::optional<double>> row) { sparse_.push_back(std::move(row)); }

  std::string render(const std::string& format) const {
    std::ostringstream os;
    os.precision(12);
    if (format == "csv") {
      for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
      os << '\n';
      for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
      }
      for (const auto& r : sparse_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          if (i) os << ',';
          if (r[i]) os << *r[i];
        }
        os << '\n';
      }
    } else {
      for (const auto& r : rows_) {
        json j;
        for (std::size_t i = 0; i < r.size(); ++i) j[columns_[i]] = r[i];
        os << j.dump() << '\n';
      }
      for (const auto& r : sparse_) {
        json j;
        for (std::size_t i = 0; i < r.size(); ++i) j[columns_[i]] = r[i] ? json(*r[i]) : json();
        os << j.dump() << '\n';
      }
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<std::optional<double>>> sparse_;
};

std::string ext(const std::string& format) { return format == "csv" ? ".csv" : ".jsonl"; }

Vec2 vec2_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

// simulate ------------------------------------------------------------------

// Config: {"scene": {...}, "path": [[x,y],...], "speed": m/s,
//          "fillet_radius": m, "sample_period": s, "snr_db": dB (optional),
//          "imu": {"drift_deg_per_min": .., "rate": ..}, "trace_format": "binary"|"jsonl"}
int cmd_simulate(const CommonOptions& o) {
  json cfg = load_config(o);
  SceneParams sp = reverberant_scene_defaults();
  if (cfg.contains("scene")) sp = io::scene_params_from_json(cfg["scene"], sp);
  if (o.seed) sp.seed = *o.seed;
  std::vector<Vec2> path;
  for (const auto& p : cfg.value("path", json::array({json::array({-2.0, 0.0}), json::array({2.0, 0.0})}))) {
    if (!p.is_array() || p.size() != 2) throw ConfigError("path entries must be [x, y]");
    path.push_back(sp.center + Vec2{p[0].get<double>(), p[1].get<double>()});
  }
  const double speed = cfg.value("speed", 1.0);
  const double period = cfg.value("sample_period", 0.005);
  const double fillet = cfg.value("fillet_radius", 0.3);
  if (!(speed > 0) || !(period > 0) || !(fillet > 0)) throw ConfigError("speed, sample_period and fillet_radius must be positive");
  const io::TraceFormat trace_format = io::parse_format(cfg.value("trace_format", std::string("binary")));
  if (trace_format == io::TraceFormat::csv) throw ConfigError("trace_format must be binary or jsonl");

  Route route = [&] {
    try {
      return Route::rounded_polyline(path, fillet);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }();
  double radius = 0.0;
  for (const auto& p : path) radius = std::max(radius, (p - sp.center).norm());
  sp.roaming_radius = std::max(sp.roaming_radius, radius + 1.0);
  const Scene scene = generate_scene(sp);
  const Motion motion(0.0, route.length(), [&](double, double) { return speed; });
  std::vector<double> times;
  for (double t = 0.0; t <= motion.duration() + 1e-12; t = static_cast<double>(times.size()) * period) times.push_back(t);
  auto cirs = synthesize_along(scene, times, [&](double t) { return route.at(motion.s_at(t)).pos; });
  if (cfg.contains("snr_db")) add_noise(cirs, {cfg["snr_db"].get<double>(), sp.seed + 1});

  ImuModel im;
  const json imu_cfg = cfg.value("imu", json::object());
  im.rate = imu_cfg.value("rate", im.rate);
  im.yaw_bias = imu_cfg.value("drift_deg_per_min", 0.0) * kPi / 180.0 / 60.0;
  im.seed = sp.seed + 2;
  const auto imu = synthesize_imu(route, motion, motion.duration(), im);

  const fs::path dir = out_dir(o, "out/simulate");
  const std::string cir_name = trace_format == io::TraceFormat::binary ? "cir.bin" : "cir.jsonl";
  io::save_cir_trace(dir / cir_name, {scene.tap_count, cirs}, trace_format);
  io::save_imu_trace(dir / ("imu" + ext(o.format)), imu, io::parse_format(o.format));
  io::write_text(dir / "scene.json", io::scene_to_json(scene).dump(2) + "\n");
  std::cout << "wrote " << cirs.size() << " CIRs (" << scene.tap_count << " taps) and " << imu.size()
            << " IMU samples to " << dir.string() << "\n";
  return kExitOk;
}

// trrs ------------------------------------------------------------------------

int cmd_trrs(const CommonOptions& o, const std::string& input, double max_lag, std::optional<std::size_t> reference) {
  const auto trace = io::load_cir_trace(input);
  const fs::path dir = out_dir(o, "out/trrs");
  if (reference) {
    if (*reference >= trace.records.size()) throw ConfigError("--reference is past the end of the trace");
    const auto series = trrs_series(trace.records[*reference], trace.records);
    Table t({"timestamp", "lag", "value"});
    for (const auto& e : series.entries) t.add({e.timestamp, e.timestamp - series.reference_timestamp, e.value});
    io::write_text(dir / ("trrs_series" + ext(o.format)), t.render(o.format));
  } else {
    const auto m = trrs_sliding_matrix(trace.records, max_lag);
    if (o.format == "csv") {
      io::write_text(dir / "trrs.csv", matrix_to_csv(m));
    } else {
      Table t({"timestamp", "lag", "value"});
      for (std::size_t c = 0; c < m.columns(); ++c)
        for (std::size_t r = 0; r < m.lag_count(); ++r) t.add_cells({m.time(c), m.lag(r), m.at(c, r)});
      io::write_text(dir / "trrs.jsonl", t.render(o.format));
    }
  }
  std::cout << "wrote TRRS for " << trace.records.size() << " CIRs to " << dir.string() << "\n";
  return kExitOk;
}

// estimate-distance -----------------------------------------------------------

DistancePipelineConfig pipeline_from(const json& cfg) {
  DistancePipelineConfig p;
  p.max_lag = cfg.value("max_lag", p.max_lag);
  p.smoothing_window = cfg.value("smoothing_window", p.smoothing_window);
  p.column_stride = cfg.value("column_stride", p.column_stride);
  p.peak.prominence = cfg.value("prominence", p.peak.prominence);
  p.peak.window = cfg.value("fit_window", p.peak.window);
  p.integration.min_confidence = cfg.value("min_confidence", p.integration.min_confidence);
  if (!(p.max_lag > 0) || p.smoothing_window == 0 || p.column_stride == 0 || p.peak.prominence < 0)
    throw ConfigError("distance pipeline parameters out of range");
  return p;
}

int cmd_estimate_distance(const CommonOptions& o, const std::string& input) {
  const json cfg = load_config(o);
  const double f0 = cfg.value("carrier_f0", 5.8e9);
  if (!(f0 > 0)) throw ConfigError("carrier_f0 must be positive");
  const auto trace = io::load_cir_trace(input);
  const auto res = estimate_distance(trace.records, kSpeedOfLight / f0, pipeline_from(cfg));
  const fs::path dir = out_dir(o, "out/distance");
  Table t({"timestamp", "speed", "peak_lag", "confidence", "stationary", "cum_distance"});
  for (const auto& s : res.speeds)
    t.add({s.timestamp, s.speed, s.peak_lag, s.confidence, s.stationary ? 1.0 : 0.0, res.track.distance_at(s.timestamp)});
  io::write_text(dir / ("speed" + ext(o.format)), t.render(o.format));
  io::write_text(dir / "summary.json",
                 json{{"distance", res.track.cumulative_distance}, {"columns", res.speeds.size()}}.dump(2) + "\n");
  std::printf("distance %.4f m\n", res.track.cumulative_distance);
  return kExitOk;
}

// track -----------------------------------------------------------------------

int cmd_track(const CommonOptions& o, const std::string& cir_path, const std::string& imu_path,
              const std::string& plan_path) {
  const json cfg = load_config(o);
  TrackerConfig tc;
  tc.wavelength = kSpeedOfLight / cfg.value("carrier_f0", 5.8e9);
  if (cfg.contains("initial_position")) tc.initial_position = vec2_field(cfg, "initial_position");
  tc.initial_heading = cfg.value("initial_heading_deg", 0.0) * kPi / 180.0;
  tc.map_correction = cfg.value("map_correction", true);
  tc.capture_radius = cfg.value("capture_radius", tc.capture_radius);
  tc.distance = pipeline_from(cfg);
  if (!(tc.wavelength > 0) || !(tc.capture_radius > 0)) throw ConfigError("tracker parameters out of range");

  FloorPlan plan;
  plan.bounds = {-1e6, -1e6, 1e6, 1e6};
  if (!plan_path.empty()) plan = io::load_floorplan(plan_path);
  const auto trace = io::load_cir_trace(cir_path);
  const auto imu = io::load_imu_trace(imu_path);
  const auto res = track(trace.records, imu, plan, tc);

  const fs::path dir = out_dir(o, "out/track");
  if (o.format == "csv") {
    io::write_text(dir / "trace.csv", trace_to_csv(res.trace));
  } else {
    Table t({"timestamp", "x", "y", "heading", "cum_distance", "dominant_scale"});
    for (const auto& p : res.trace) t.add({p.timestamp, p.x, p.y, p.heading, p.cum_distance, p.dominant_scale});
    io::write_text(dir / "trace.jsonl", t.render(o.format));
  }
  json gaps = json::array();
  for (const auto& g : res.gaps) gaps.push_back({{"stream", g.stream}, {"t_start", g.t_start}, {"t_end", g.t_end}});
  io::write_text(dir / "summary.json",
                 json{{"points", res.trace.size()}, {"snaps", res.snaps}, {"recoveries", res.recoveries}, {"gaps", gaps}}
                         .dump(2) + "\n");
  for (const auto& g : res.gaps)
    std::cerr << "warning: " << g.stream << " stream gap from " << g.t_start << " s to " << g.t_end << " s\n";
  std::cout << "wrote " << res.trace.size() << " trace points to " << dir.string() << "\n";
  return kExitOk;
}

// experiment ------------------------------------------------------------------

int cmd_experiment(const CommonOptions& o, const std::string& name, bool print_default) {
  const Scenario scenario = parse_scenario(name);
  if (print_default) {
    std::cout << default_experiment_json(scenario).dump(2) << "\n";
    return kExitOk;
  }
  json cfg = load_config(o);
  if (o.seed) {
    cfg.erase("seeds");
    cfg["seed"] = *o.seed;
  }
  if (!o.out.empty()) cfg["output_dir"] = o.out;
  const ExperimentConfig ec = experiment_config_from_json(cfg, scenario);
  const ScenarioOutput out = run_scenario(ec);
  write_scenario_output(out, ec.output_dir);
  for (const auto& c : out.report["checks"])
    std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " = "
              << c["value"].dump() << " (" << c["relation"].get<std::string>() << " " << c["threshold"].dump() << ")\n";
  std::cout << "wrote " << out.files.size() + 1 << " files to " << ec.output_dir.string() << "\n";
  return kExitOk;
}

// convert ---------------------------------------------------------------------

int cmd_convert(const std::string& input, const std::string& to, const std::string& output) {
  const fs::path written = io::convert_trace(input, io::parse_format(to), output);
  std::cout << "wrote " << written.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiBall indoor tracking toolkit"};
  app.require_subcommand(1);

  CommonOptions sim_o, trrs_o, dist_o, track_o, exp_o;

  auto* sim = app.add_subcommand("simulate", "Synthesize a CIR trace and IMU stream along a path");
  add_common(sim, sim_o);

  std::string trrs_in;
  double max_lag = 0.16;
  std::optional<std::size_t> reference;
  auto* trrs_cmd = app.add_subcommand("trrs", "TRRS sliding matrix or series against one reference CIR");
  add_common(trrs_cmd, trrs_o);
  trrs_cmd->add_option("input", trrs_in, "CIR trace")->required()->check(CLI::ExistingFile);
  trrs_cmd->add_option("--max-lag", max_lag, "Largest lag in seconds")->check(CLI::PositiveNumber);
  trrs_cmd->add_option("--reference", reference, "Record index of the reference CIR");

  std::string dist_in;
  auto* dist = app.add_subcommand("estimate-distance", "Speed and moving distance from a CIR trace");
  add_common(dist, dist_o);
  dist->add_option("input", dist_in, "CIR trace")->required()->check(CLI::ExistingFile);

  std::string track_cir, track_imu, track_plan;
  auto* trk = app.add_subcommand("track", "Fuse CIR and IMU traces into a floor-plan constrained trace");
  add_common(trk, track_o);
  trk->add_option("cir", track_cir, "CIR trace")->required()->check(CLI::ExistingFile);
  trk->add_option("imu", track_imu, "IMU trace")->required()->check(CLI::ExistingFile);
  trk->add_option("--floorplan", track_plan, "Floor plan JSON")->check(CLI::ExistingFile);

  std::string scenario;
  bool print_default = false;
  auto* exp = app.add_subcommand("experiment", "Run an experiment scenario");
  add_common(exp, exp_o);
  exp->add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(scenario_names()));
  exp->add_flag("--print-default-config", print_default, "Print the default config and exit");

  std::string conv_in, conv_to = "jsonl", conv_out;
  auto* conv = app.add_subcommand("convert", "Convert CIR/IMU traces between binary, JSONL and CSV");
  conv->add_option("input", conv_in, "Trace file")->required()->check(CLI::ExistingFile);
  conv->add_option("--to", conv_to, "Target encoding")->check(CLI::IsMember({"binary", "jsonl", "csv"}));
  conv->add_option("--output", conv_out, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_o);
    if (*trrs_cmd) return cmd_trrs(trrs_o, trrs_in, max_lag, reference);
    if (*dist) return cmd_estimate_distance(dist_o, dist_in);
    if (*trk) return cmd_track(track_o, track_cir, track_imu, track_plan);
    if (*exp) return cmd_experiment(exp_o, scenario, print_default);
    if (*conv) return cmd_convert(conv_in, conv_to, conv_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateInputError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
