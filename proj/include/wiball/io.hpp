#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "wiball/channel.hpp"
#include "wiball/heading.hpp"
#include "wiball/tracker.hpp"

namespace wiball::io {

/// On-disk trace encodings.
///
/// Binary CIR stream (all fields little-endian):
///   header  : char[8] "WBCIR001", u32 tap_count, u32 reserved (0)
///   record  : f64 timestamp, u32 flags (bit 0 = pose present), u32 reserved,
///             f64 pose_x, f64 pose_y (0 when absent),
///             tap_count x (f64 re, f64 im)
/// JSONL CIR stream:
///   line 1  : {"format":"wiball.cir","version":1,"tap_count":L}
///   records : {"timestamp":t,"taps":[re0,im0,re1,im1,...],"pose":[x,y]}
///             ("pose" omitted when absent)
/// Binary IMU stream:
///   header  : char[8] "WBIMU001", u32 0, u32 0
///   record  : f64 timestamp, f64 wx, wy, wz, f64 ax, ay, az
/// JSONL IMU stream: optional header {"format":"wiball.imu","version":1},
///   records {"timestamp":t,"wx":..,"wy":..,"wz":..,"ax":..,"ay":..,"az":..}
/// CSV IMU stream: header "timestamp,wx,wy,wz,ax,ay,az".
enum class TraceFormat { binary, jsonl, csv };

TraceFormat parse_format(const std::string& name);
std::string format_name(TraceFormat f);

struct CirTrace {
  std::size_t tap_count = 0;
  std::vector<Cir> records;
};

void write_cir_binary(std::ostream& os, const CirTrace& trace);
void write_cir_jsonl(std::ostream& os, const CirTrace& trace);
CirTrace read_cir_binary(std::istream& is);
CirTrace read_cir_jsonl(std::istream& is);

void write_imu_binary(std::ostream& os, const std::vector<ImuSample>& samples);
void write_imu_jsonl(std::ostream& os, const std::vector<ImuSample>& samples);
void write_imu_csv(std::ostream& os, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_binary(std::istream& is);
std::vector<ImuSample> read_imu_jsonl(std::istream& is);
std::vector<ImuSample> read_imu_csv(std::istream& is);

enum class TraceKind { cir, imu };

struct DetectedTrace {
  TraceKind kind;
  TraceFormat format;
};

/// Sniffs the first bytes of a file: binary magic, JSONL header or record
/// keys, or the CSV header.
DetectedTrace detect_trace(const std::filesystem::path& path);

CirTrace load_cir_trace(const std::filesystem::path& path);
std::vector<ImuSample> load_imu_trace(const std::filesystem::path& path);
void save_cir_trace(const std::filesystem::path& path, const CirTrace& trace, TraceFormat format);
void save_imu_trace(const std::filesystem::path& path, const std::vector<ImuSample>& samples, TraceFormat format);

/// Converts a CIR or IMU trace between encodings. Returns the output path.
std::filesystem::path convert_trace(const std::filesystem::path& input, TraceFormat format,
                                    const std::filesystem::path& output = {});

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
SceneParams scene_params_from_json(const nlohmann::json& j, SceneParams defaults = {});
nlohmann::json scene_params_to_json(const SceneParams& p);

FloorPlan floorplan_from_json(const nlohmann::json& j);
nlohmann::json floorplan_to_json(const FloorPlan& plan);
FloorPlan load_floorplan(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace wiball::io
