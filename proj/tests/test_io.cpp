#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "wiball/error.hpp"
#include "wiball/io.hpp"

using namespace wiball;
namespace fs = std::filesystem;

namespace {

io::CirTrace sample_trace(std::size_t n, std::size_t taps = 6) {
  std::mt19937_64 rng(12);
  io::CirTrace t;
  t.tap_count = taps;
  for (std::size_t i = 0; i < n; ++i) {
    Cir c;
    c.taps = oracle::random_taps(rng, taps);
    c.timestamp = 0.005 * static_cast<double>(i) + 1.0 / 3.0;
    if (i % 2 == 0) c.pose = Vec2{0.1 * static_cast<double>(i), -1.0 / 7.0};
    t.records.push_back(std::move(c));
  }
  return t;
}

std::vector<ImuSample> sample_imu(std::size_t n) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  std::vector<ImuSample> v;
  for (std::size_t i = 0; i < n; ++i)
    v.push_back({0.01 * static_cast<double>(i), {g(rng), g(rng), g(rng)}, {g(rng), g(rng), 9.81 + g(rng)}});
  return v;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wiball_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void check_same(const io::CirTrace& a, const io::CirTrace& b) {
  REQUIRE(a.tap_count == b.tap_count);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].timestamp == b.records[i].timestamp);
    CHECK(a.records[i].taps == b.records[i].taps);
    CHECK(a.records[i].pose == b.records[i].pose);
  }
}

}  // namespace

TEST_CASE("binary CIR layout") {
  std::ostringstream os;
  io::write_cir_binary(os, sample_trace(3, 4));
  const std::string s = os.str();
  CHECK(s.size() == 16 + 3 * (32 + 16 * 4));
  CHECK(s.substr(0, 8) == "WBCIR001");
  CHECK(static_cast<unsigned char>(s[8]) == 4);
  // Record 0 carries a pose, record 1 does not.
  CHECK(static_cast<unsigned char>(s[16 + 8]) == 1);
  CHECK(static_cast<unsigned char>(s[16 + 96 + 8]) == 0);
}

TEST_CASE("CIR round trips in memory") {
  const auto t = sample_trace(25);
  std::stringstream bin, js;
  io::write_cir_binary(bin, t);
  io::write_cir_jsonl(js, t);
  check_same(io::read_cir_binary(bin), t);
  check_same(io::read_cir_jsonl(js), t);
}

TEST_CASE("binary -> JSONL -> binary is byte-identical") {
  TempDir dir;
  const fs::path a = dir.path / "trace.bin";
  io::save_cir_trace(a, sample_trace(40), io::TraceFormat::binary);
  const fs::path j = io::convert_trace(a, io::TraceFormat::jsonl);
  CHECK(j.extension() == ".jsonl");
  const fs::path b = io::convert_trace(j, io::TraceFormat::binary, dir.path / "back.bin");
  CHECK(bytes_of(a) == bytes_of(b));

  const fs::path imu = dir.path / "imu.bin";
  io::save_imu_trace(imu, sample_imu(30), io::TraceFormat::binary);
  const fs::path ij = io::convert_trace(imu, io::TraceFormat::jsonl);
  const fs::path ib = io::convert_trace(ij, io::TraceFormat::binary, dir.path / "imu_back.bin");
  CHECK(bytes_of(imu) == bytes_of(ib));
  const fs::path ic = io::convert_trace(ib, io::TraceFormat::csv, dir.path / "imu.csv");
  const auto via_csv = io::load_imu_trace(ic);
  const auto orig = sample_imu(30);
  REQUIRE(via_csv.size() == orig.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(via_csv[i].timestamp == orig[i].timestamp);
    CHECK(via_csv[i].angular_velocity == orig[i].angular_velocity);
    CHECK(via_csv[i].acceleration == orig[i].acceleration);
  }
}

TEST_CASE("truncated binary file names the truncated record") {
  std::ostringstream os;
  io::write_cir_binary(os, sample_trace(10));
  std::string s = os.str();
  s.resize(s.size() - 20);
  std::istringstream is(s);
  try {
    io::read_cir_binary(is);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.record_index() == 9);
    CHECK(std::string(e.what()).find("record 9") != std::string::npos);
  }

  std::ostringstream imu;
  io::write_imu_binary(imu, sample_imu(5));
  std::string si = imu.str();
  si.resize(si.size() - 3);
  std::istringstream iis(si);
  CHECK_THROWS_AS(io::read_imu_binary(iis), DataError);
}

TEST_CASE("malformed JSONL records report their index") {
  std::stringstream js;
  io::write_cir_jsonl(js, sample_trace(5));
  std::string text = js.str();
  // Corrupt the fourth record (line 5: header + records 0..3).
  std::vector<std::string> lines;
  std::istringstream split(text);
  for (std::string l; std::getline(split, l);) lines.push_back(l);
  lines[4] = "{\"timestamp\": 1.0, \"taps\": [1, 2]}";
  std::string rebuilt;
  for (const auto& l : lines) rebuilt += l + "\n";
  std::istringstream is(rebuilt);
  try {
    io::read_cir_jsonl(is);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.record_index() == 3);
  }
}

TEST_CASE("non-monotonic timestamps are data errors") {
  auto t = sample_trace(4);
  t.records[2].timestamp = t.records[1].timestamp;
  std::stringstream bin;
  io::write_cir_binary(bin, t);
  try {
    io::read_cir_binary(bin);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.record_index() == 2);
  }
}

TEST_CASE("empty traces convert to empty outputs") {
  TempDir dir;
  io::CirTrace empty;
  empty.tap_count = 8;
  const fs::path a = dir.path / "empty.bin";
  io::save_cir_trace(a, empty, io::TraceFormat::binary);
  const fs::path j = io::convert_trace(a, io::TraceFormat::jsonl);
  const auto back = io::load_cir_trace(j);
  CHECK(back.records.empty());
  CHECK(back.tap_count == 8);

  const fs::path imu = dir.path / "empty_imu.csv";
  io::save_imu_trace(imu, {}, io::TraceFormat::csv);
  CHECK(io::load_imu_trace(io::convert_trace(imu, io::TraceFormat::jsonl)).empty());
}

TEST_CASE("format detection and errors") {
  TempDir dir;
  const fs::path junk = dir.path / "junk.txt";
  io::write_text(junk, "hello\n");
  CHECK_THROWS_AS(io::detect_trace(junk), DataError);
  CHECK_THROWS_AS(io::load_cir_trace(dir.path / "missing.bin"), DataError);
  CHECK_THROWS_AS(io::parse_format("xml"), ConfigError);
  CHECK(io::parse_format("jsonl") == io::TraceFormat::jsonl);
  const fs::path imu = dir.path / "imu.jsonl";
  io::save_imu_trace(imu, sample_imu(3), io::TraceFormat::jsonl);
  CHECK(io::detect_trace(imu).kind == io::TraceKind::imu);
  CHECK_THROWS_AS(io::load_cir_trace(imu), DataError);
  const fs::path cir = dir.path / "c.bin";
  io::save_cir_trace(cir, sample_trace(2), io::TraceFormat::binary);
  CHECK_THROWS_AS(io::convert_trace(cir, io::TraceFormat::csv, dir.path / "c.csv"), ConfigError);
}

TEST_CASE("scene documents round trip") {
  const Scene s = generate_scene(3, 20, 7.5, 30.0, 5.8e9, 500e6);
  const Scene r = io::scene_from_json(nlohmann::json::parse(io::scene_to_json(s).dump()));
  CHECK(r.scatterers == s.scatterers);
  CHECK(r.reflection_coeffs == s.reflection_coeffs);
  CHECK(r.tx_pos == s.tx_pos);
  CHECK(r.tap_count == s.tap_count);
  CHECK_THROWS_AS(io::scene_from_json(nlohmann::json{{"bandwidth", 1}}), ConfigError);

  SceneParams p;
  p.seed = 44;
  p.tx_bearing = 0.5;
  const SceneParams q = io::scene_params_from_json(io::scene_params_to_json(p));
  CHECK(q.seed == 44);
  CHECK(q.tx_bearing == doctest::Approx(0.5));
  CHECK_THROWS_AS(io::scene_params_from_json({{"scatterers", 5}}), ConfigError);
  CHECK_THROWS_AS(io::scene_params_from_json({{"bandwidth", -1.0}}), ConfigError);
}

TEST_CASE("floor plan documents") {
  FloorPlan p;
  p.walls = {{{0, 0}, {4, 0}}, {{4, 0}, {4, 3}}};
  p.landmarks = {{{4, 0}, LandmarkKind::corner}, {{2, 0}, LandmarkKind::door}};
  p.bounds = {-1, -1, 5, 4};
  const FloorPlan r = io::floorplan_from_json(io::floorplan_to_json(p));
  REQUIRE(r.walls.size() == 2);
  CHECK(r.walls[1].b == Vec2{4, 3});
  CHECK(r.landmarks[1].kind == LandmarkKind::door);
  const auto doc = nlohmann::json::parse(R"({"walls": [[0,0,1]], "bounds": [0,0,1,1]})");
  CHECK_THROWS_AS(io::floorplan_from_json(doc), ConfigError);
  const auto outside = nlohmann::json::parse(R"({"walls": [], "landmarks": [{"x": 9, "y": 9}], "bounds": [0,0,1,1]})");
  CHECK_THROWS_AS(io::floorplan_from_json(outside), ConfigError);
}
