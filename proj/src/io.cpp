#include "wiball/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wiball/error.hpp"

namespace wiball::io {

using nlohmann::json;

namespace {

constexpr char kCirMagic[8] = {'W', 'B', 'C', 'I', 'R', '0', '0', '1'};
constexpr char kImuMagic[8] = {'W', 'B', 'I', 'M', 'U', '0', '0', '1'};
constexpr const char* kImuCsvHeader = "timestamp,wx,wy,wz,ax,ay,az";

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const unsigned char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::string slurp(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

double finite_or_throw(double v, const char* field, long long index) {
  if (!std::isfinite(v)) throw DataError(std::string("non-finite ") + field, index);
  return v;
}

double json_number(const json& j, const char* key, long long index) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw DataError(std::string("missing numeric field '") + key + "'", index);
  return finite_or_throw(it->get<double>(), key, index);
}

Vec2 json_vec2(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string(what) + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

void check_monotonic(double prev, double t, long long index) {
  if (index > 0 && !(t > prev)) throw DataError("timestamps not strictly increasing", index);
}

}  // namespace

TraceFormat parse_format(const std::string& name) {
  if (name == "binary" || name == "bin") return TraceFormat::binary;
  if (name == "jsonl") return TraceFormat::jsonl;
  if (name == "csv") return TraceFormat::csv;
  throw ConfigError("unknown format '" + name + "' (expected binary, jsonl or csv)");
}

std::string format_name(TraceFormat f) {
  switch (f) {
    case TraceFormat::binary: return "binary";
    case TraceFormat::jsonl: return "jsonl";
    case TraceFormat::csv: return "csv";
  }
  return "?";
}

// CIR streams

void write_cir_binary(std::ostream& os, const CirTrace& trace) {
  os.write(kCirMagic, 8);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(trace.tap_count));
  put_le<std::uint32_t>(os, 0);
  for (const auto& c : trace.records) {
    if (c.taps.size() != trace.tap_count) throw ParameterError("write_cir_binary: tap count mismatch");
    put_le<double>(os, c.timestamp);
    put_le<std::uint32_t>(os, c.pose ? 1u : 0u);
    put_le<std::uint32_t>(os, 0);
    put_le<double>(os, c.pose ? c.pose->x : 0.0);
    put_le<double>(os, c.pose ? c.pose->y : 0.0);
    for (const auto& h : c.taps) {
      put_le<double>(os, h.real());
      put_le<double>(os, h.imag());
    }
  }
}

CirTrace read_cir_binary(std::istream& is) {
  const std::string raw = slurp(is);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 16 || std::memcmp(raw.data(), kCirMagic, 8) != 0) throw DataError("not a binary CIR trace");
  CirTrace trace;
  trace.tap_count = get_le<std::uint32_t>(p + 8);
  if (trace.tap_count == 0) throw DataError("binary CIR trace declares zero taps");
  const std::size_t rec = 32 + 16 * trace.tap_count;
  const std::size_t body = raw.size() - 16;
  const std::size_t n = body / rec;
  trace.records.reserve(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* r = p + 16 + i * rec;
    const auto idx = static_cast<long long>(i);
    Cir c;
    c.timestamp = finite_or_throw(get_le<double>(r), "timestamp", idx);
    check_monotonic(prev, c.timestamp, idx);
    prev = c.timestamp;
    const auto flags = get_le<std::uint32_t>(r + 8);
    if (flags & ~1u) throw DataError("unknown record flags", idx);
    if (flags & 1u) c.pose = Vec2{get_le<double>(r + 16), get_le<double>(r + 24)};
    c.taps.resize(trace.tap_count);
    for (std::size_t l = 0; l < trace.tap_count; ++l) {
      const double re = get_le<double>(r + 32 + 16 * l);
      const double im = get_le<double>(r + 40 + 16 * l);
      c.taps[l] = {finite_or_throw(re, "tap", idx), finite_or_throw(im, "tap", idx)};
    }
    trace.records.push_back(std::move(c));
  }
  if (body % rec != 0) throw DataError("truncated record", static_cast<long long>(n));
  return trace;
}

void write_cir_jsonl(std::ostream& os, const CirTrace& trace) {
  os << json{{"format", "wiball.cir"}, {"version", 1}, {"tap_count", trace.tap_count}}.dump() << '\n';
  for (const auto& c : trace.records) {
    if (c.taps.size() != trace.tap_count) throw ParameterError("write_cir_jsonl: tap count mismatch");
    json taps = json::array();
    for (const auto& h : c.taps) {
      taps.push_back(h.real());
      taps.push_back(h.imag());
    }
    json rec{{"timestamp", c.timestamp}, {"taps", std::move(taps)}};
    if (c.pose) rec["pose"] = {c.pose->x, c.pose->y};
    os << rec.dump() << '\n';
  }
}

CirTrace read_cir_jsonl(std::istream& is) {
  CirTrace trace;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty CIR trace");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "wiball.cir")
    throw DataError("missing wiball.cir header line");
  if (header.value("version", 0) != 1) throw DataError("unsupported CIR trace version");
  trace.tap_count = header.value("tap_count", std::size_t{0});
  if (trace.tap_count == 0) throw DataError("CIR trace declares zero taps");
  long long idx = 0;
  double prev = 0.0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed record: ") + e.what(), idx);
    }
    if (!rec.is_object()) throw DataError("record is not an object", idx);
    Cir c;
    c.timestamp = json_number(rec, "timestamp", idx);
    check_monotonic(prev, c.timestamp, idx);
    prev = c.timestamp;
    const auto taps = rec.find("taps");
    if (taps == rec.end() || !taps->is_array() || taps->size() != 2 * trace.tap_count)
      throw DataError("taps must hold 2 x tap_count numbers", idx);
    c.taps.resize(trace.tap_count);
    for (std::size_t l = 0; l < trace.tap_count; ++l) {
      const auto& re = (*taps)[2 * l];
      const auto& im = (*taps)[2 * l + 1];
      if (!re.is_number() || !im.is_number()) throw DataError("non-numeric tap", idx);
      c.taps[l] = {finite_or_throw(re.get<double>(), "tap", idx), finite_or_throw(im.get<double>(), "tap", idx)};
    }
    if (auto pose = rec.find("pose"); pose != rec.end() && !pose->is_null()) {
      if (!pose->is_array() || pose->size() != 2 || !(*pose)[0].is_number() || !(*pose)[1].is_number())
        throw DataError("pose must be [x, y]", idx);
      c.pose = Vec2{(*pose)[0].get<double>(), (*pose)[1].get<double>()};
    }
    trace.records.push_back(std::move(c));
    ++idx;
  }
  return trace;
}

// IMU streams

void write_imu_binary(std::ostream& os, const std::vector<ImuSample>& samples) {
  os.write(kImuMagic, 8);
  put_le<std::uint32_t>(os, 0);
  put_le<std::uint32_t>(os, 0);
  for (const auto& s : samples) {
    for (double v : {s.timestamp, s.angular_velocity.x, s.angular_velocity.y, s.angular_velocity.z,
                     s.acceleration.x, s.acceleration.y, s.acceleration.z})
      put_le<double>(os, v);
  }
}

namespace {

ImuSample imu_from_values(const double* v, long long idx) {
  for (int k = 0; k < 7; ++k) finite_or_throw(v[k], "IMU field", idx);
  return {v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6]}};
}

}  // namespace

std::vector<ImuSample> read_imu_binary(std::istream& is) {
  const std::string raw = slurp(is);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 16 || std::memcmp(raw.data(), kImuMagic, 8) != 0) throw DataError("not a binary IMU trace");
  constexpr std::size_t rec = 56;
  const std::size_t n = (raw.size() - 16) / rec;
  std::vector<ImuSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v[7];
    for (int k = 0; k < 7; ++k) v[k] = get_le<double>(p + 16 + i * rec + 8 * k);
    const auto idx = static_cast<long long>(i);
    out.push_back(imu_from_values(v, idx));
    if (i > 0) check_monotonic(out[i - 1].timestamp, out[i].timestamp, idx);
  }
  if ((raw.size() - 16) % rec != 0) throw DataError("truncated record", static_cast<long long>(n));
  return out;
}

void write_imu_jsonl(std::ostream& os, const std::vector<ImuSample>& samples) {
  os << json{{"format", "wiball.imu"}, {"version", 1}}.dump() << '\n';
  for (const auto& s : samples) {
    json rec{{"timestamp", s.timestamp},        {"wx", s.angular_velocity.x}, {"wy", s.angular_velocity.y},
             {"wz", s.angular_velocity.z},      {"ax", s.acceleration.x},     {"ay", s.acceleration.y},
             {"az", s.acceleration.z}};
    os << rec.dump() << '\n';
  }
}

std::vector<ImuSample> read_imu_jsonl(std::istream& is) {
  std::vector<ImuSample> out;
  std::string line;
  long long idx = 0;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed record: ") + e.what(), idx);
    }
    if (first) {
      first = false;
      if (rec.is_object() && rec.contains("format")) {
        if (rec["format"] != "wiball.imu") throw DataError("not an IMU trace");
        continue;
      }
    }
    if (!rec.is_object()) throw DataError("record is not an object", idx);
    const double v[7] = {json_number(rec, "timestamp", idx), json_number(rec, "wx", idx),
                         json_number(rec, "wy", idx),        json_number(rec, "wz", idx),
                         json_number(rec, "ax", idx),        json_number(rec, "ay", idx),
                         json_number(rec, "az", idx)};
    out.push_back(imu_from_values(v, idx));
    if (idx > 0) check_monotonic(out[idx - 1].timestamp, out[idx].timestamp, idx);
    ++idx;
  }
  return out;
}

void write_imu_csv(std::ostream& os, const std::vector<ImuSample>& samples) {
  os << kImuCsvHeader << '\n';
  os.precision(17);
  for (const auto& s : samples) {
    os << s.timestamp << ',' << s.angular_velocity.x << ',' << s.angular_velocity.y << ','
       << s.angular_velocity.z << ',' << s.acceleration.x << ',' << s.acceleration.y << ','
       << s.acceleration.z << '\n';
  }
}

std::vector<ImuSample> read_imu_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty IMU trace");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kImuCsvHeader) throw DataError(std::string("IMU CSV header must be '") + kImuCsvHeader + "'");
  std::vector<ImuSample> out;
  long long idx = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[7];
    std::size_t pos = 0;
    for (int k = 0; k < 7; ++k) {
      const std::size_t end = line.find(',', pos);
      if ((k < 6) != (end != std::string::npos)) throw DataError("expected 7 comma-separated fields", idx);
      const std::string field = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      try {
        std::size_t used = 0;
        v[k] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError("unparseable number '" + field + "'", idx);
      }
      pos = end + 1;
    }
    out.push_back(imu_from_values(v, idx));
    if (idx > 0) check_monotonic(out[idx - 1].timestamp, out[idx].timestamp, idx);
    ++idx;
  }
  return out;
}

// Detection and file helpers

DetectedTrace detect_trace(const std::filesystem::path& path) {
  auto f = open_in(path, true);
  char head[8] = {};
  f.read(head, 8);
  if (f.gcount() == 8 && std::memcmp(head, kCirMagic, 8) == 0) return {TraceKind::cir, TraceFormat::binary};
  if (f.gcount() == 8 && std::memcmp(head, kImuMagic, 8) == 0) return {TraceKind::imu, TraceFormat::binary};
  f.clear();
  f.seekg(0);
  std::string line;
  std::getline(f, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == kImuCsvHeader) return {TraceKind::imu, TraceFormat::csv};
  try {
    const json j = json::parse(line);
    if (j.is_object()) {
      const std::string fmt = j.value("format", "");
      if (fmt == "wiball.cir") return {TraceKind::cir, TraceFormat::jsonl};
      if (fmt == "wiball.imu" || j.contains("wx")) return {TraceKind::imu, TraceFormat::jsonl};
    }
  } catch (const json::parse_error&) {
  }
  throw DataError("unrecognized trace format: " + path.string());
}

CirTrace load_cir_trace(const std::filesystem::path& path) {
  const auto d = detect_trace(path);
  if (d.kind != TraceKind::cir) throw DataError(path.string() + " is not a CIR trace");
  auto f = open_in(path, d.format == TraceFormat::binary);
  return d.format == TraceFormat::binary ? read_cir_binary(f) : read_cir_jsonl(f);
}

std::vector<ImuSample> load_imu_trace(const std::filesystem::path& path) {
  const auto d = detect_trace(path);
  if (d.kind != TraceKind::imu) throw DataError(path.string() + " is not an IMU trace");
  auto f = open_in(path, d.format == TraceFormat::binary);
  switch (d.format) {
    case TraceFormat::binary: return read_imu_binary(f);
    case TraceFormat::jsonl: return read_imu_jsonl(f);
    case TraceFormat::csv: return read_imu_csv(f);
  }
  return {};
}

void save_cir_trace(const std::filesystem::path& path, const CirTrace& trace, TraceFormat format) {
  if (format == TraceFormat::csv) throw ConfigError("CIR traces have no CSV encoding");
  auto f = open_out(path, format == TraceFormat::binary);
  if (format == TraceFormat::binary)
    write_cir_binary(f, trace);
  else
    write_cir_jsonl(f, trace);
}

void save_imu_trace(const std::filesystem::path& path, const std::vector<ImuSample>& samples,
                    TraceFormat format) {
  auto f = open_out(path, format == TraceFormat::binary);
  switch (format) {
    case TraceFormat::binary: write_imu_binary(f, samples); break;
    case TraceFormat::jsonl: write_imu_jsonl(f, samples); break;
    case TraceFormat::csv: write_imu_csv(f, samples); break;
  }
}

std::filesystem::path convert_trace(const std::filesystem::path& input, TraceFormat format,
                                    const std::filesystem::path& output) {
  const auto d = detect_trace(input);
  std::filesystem::path out = output;
  if (out.empty()) {
    out = input;
    out.replace_extension(format == TraceFormat::binary ? ".bin" : "." + format_name(format));
    if (out == input) throw ConfigError("conversion output would overwrite the input");
  }
  if (d.kind == TraceKind::cir)
    save_cir_trace(out, load_cir_trace(input), format);
  else
    save_imu_trace(out, load_imu_trace(input), format);
  return out;
}

// Scene and floor plan documents

json scene_to_json(const Scene& scene) {
  json scat = json::array();
  for (const auto& s : scene.scatterers) scat.push_back({s.x, s.y});
  return {{"carrier_f0", scene.carrier_f0},
          {"bandwidth", scene.bandwidth},
          {"tap_count", scene.tap_count},
          {"direct_path", scene.direct_path},
          {"pulse_shaper", "rectangular"},
          {"tx_pos", {scene.tx_pos.x, scene.tx_pos.y}},
          {"rx_focal_pos", {scene.rx_focal_pos.x, scene.rx_focal_pos.y}},
          {"scatterers", std::move(scat)},
          {"reflection_coeffs", scene.reflection_coeffs}};
}

Scene scene_from_json(const json& j) {
  try {
    Scene s;
    s.carrier_f0 = j.at("carrier_f0").get<double>();
    s.bandwidth = j.at("bandwidth").get<double>();
    s.tap_count = j.at("tap_count").get<std::size_t>();
    s.direct_path = j.value("direct_path", true);
    if (j.value("pulse_shaper", std::string("rectangular")) != "rectangular")
      throw ConfigError("scene: only the rectangular pulse shaper is supported");
    s.tx_pos = json_vec2(j.at("tx_pos"), "tx_pos");
    s.rx_focal_pos = json_vec2(j.at("rx_focal_pos"), "rx_focal_pos");
    for (const auto& p : j.at("scatterers")) s.scatterers.push_back(json_vec2(p, "scatterer"));
    s.reflection_coeffs = j.at("reflection_coeffs").get<std::vector<double>>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

SceneParams scene_params_from_json(const json& j, SceneParams p) {
  if (!j.is_object()) throw ConfigError("scene parameters must be an object");
  static const char* known[] = {"seed",       "n_scatterers", "region_side",  "tx_rx_separation",
                                "carrier_f0", "bandwidth",    "center",       "tx_bearing_deg",
                                "direct_path", "roaming_radius"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ConfigError("scene: unknown key '" + key + "'");
  }
  try {
    p.seed = j.value("seed", p.seed);
    p.n_scatterers = j.value("n_scatterers", p.n_scatterers);
    p.region_side = j.value("region_side", p.region_side);
    p.tx_rx_separation = j.value("tx_rx_separation", p.tx_rx_separation);
    p.carrier_f0 = j.value("carrier_f0", p.carrier_f0);
    p.bandwidth = j.value("bandwidth", p.bandwidth);
    if (j.contains("center")) p.center = json_vec2(j["center"], "center");
    if (j.contains("tx_bearing_deg")) p.tx_bearing = j["tx_bearing_deg"].get<double>() * kPi / 180.0;
    p.direct_path = j.value("direct_path", p.direct_path);
    p.roaming_radius = j.value("roaming_radius", p.roaming_radius);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  if (p.n_scatterers < 1 || !(p.region_side > 0) || !(p.tx_rx_separation > 0) || !(p.bandwidth > 0) ||
      !(p.carrier_f0 > p.bandwidth) || p.roaming_radius < 0)
    throw ConfigError("scene: parameters out of range");
  return p;
}

json scene_params_to_json(const SceneParams& p) {
  return {{"seed", p.seed},
          {"n_scatterers", p.n_scatterers},
          {"region_side", p.region_side},
          {"tx_rx_separation", p.tx_rx_separation},
          {"carrier_f0", p.carrier_f0},
          {"bandwidth", p.bandwidth},
          {"center", {p.center.x, p.center.y}},
          {"tx_bearing_deg", p.tx_bearing * 180.0 / kPi},
          {"direct_path", p.direct_path},
          {"roaming_radius", p.roaming_radius}};
}

namespace {

LandmarkKind parse_kind(const std::string& k) {
  if (k == "corner") return LandmarkKind::corner;
  if (k == "door") return LandmarkKind::door;
  if (k == "corridor_end") return LandmarkKind::corridor_end;
  throw ConfigError("floor plan: unknown landmark kind '" + k + "'");
}

const char* kind_name(LandmarkKind k) {
  switch (k) {
    case LandmarkKind::corner: return "corner";
    case LandmarkKind::door: return "door";
    case LandmarkKind::corridor_end: return "corridor_end";
  }
  return "corner";
}

}  // namespace

FloorPlan floorplan_from_json(const json& j) {
  FloorPlan plan;
  try {
    for (const auto& w : j.at("walls")) {
      if (!w.is_array() || w.size() != 4) throw ConfigError("floor plan: wall must be [x1, y1, x2, y2]");
      plan.walls.push_back({{w[0].get<double>(), w[1].get<double>()}, {w[2].get<double>(), w[3].get<double>()}});
    }
    for (const auto& l : j.value("landmarks", json::array()))
      plan.landmarks.push_back({{l.at("x").get<double>(), l.at("y").get<double>()},
                                parse_kind(l.value("kind", std::string("corner")))});
    const auto& b = j.at("bounds");
    if (!b.is_array() || b.size() != 4) throw ConfigError("floor plan: bounds must be [xmin, ymin, xmax, ymax]");
    plan.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    plan.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("floor plan: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return plan;
}

json floorplan_to_json(const FloorPlan& plan) {
  json walls = json::array();
  for (const auto& w : plan.walls) walls.push_back({w.a.x, w.a.y, w.b.x, w.b.y});
  json lms = json::array();
  for (const auto& l : plan.landmarks) lms.push_back({{"x", l.pos.x}, {"y", l.pos.y}, {"kind", kind_name(l.kind)}});
  return {{"walls", std::move(walls)},
          {"landmarks", std::move(lms)},
          {"bounds", {plan.bounds.xmin, plan.bounds.ymin, plan.bounds.xmax, plan.bounds.ymax}}};
}

json load_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

FloorPlan load_floorplan(const std::filesystem::path& path) { return floorplan_from_json(load_json(path)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto f = open_out(path, true);
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

}  // namespace wiball::io
