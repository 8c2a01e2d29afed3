#pragma once

#include <evreflex/flow.hpp>
#include <evreflex/sim.hpp>
#include <evreflex/tti.hpp>
#include <evreflex/types.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evreflex::io {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kEventHeaderBytes = 24;
inline constexpr std::size_t kEventRecordBytes = 16;
inline constexpr std::size_t kMapHeaderBytes = 20;

struct EventFile {
  int width = 0;
  int height = 0;
  std::vector<Event> events;
};

// Event stream: "EVRX", version, width, height, count (u64), then per event
// t f64, x u16, y u16, polarity i8 and three zero bytes. Little-endian.
std::string encode_events(std::span<const Event> events, int width, int height);
EventFile decode_events(std::string_view bytes);

// One map record: "EVRF", version, semantics, width, height, then row-major
// f32 values. Little-endian.
std::string encode_map(const FloatMap& map);
FloatMap decode_map(std::string_view bytes);

// Flow: two map records back to back, u (semantics 4) then v (semantics 5).
std::string encode_flow(const FlowField& flow);
FlowField decode_flow(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

void write_events(const std::filesystem::path& path, std::span<const Event> events, int width,
                  int height);
EventFile read_events(const std::filesystem::path& path);

void write_map(const std::filesystem::path& path, const FloatMap& map);
FloatMap read_map(const std::filesystem::path& path);

void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);

// TTI maps store their values as an inv_tti_s record and the validity mask as
// a class_id record (0/1) in a companion file; see tti_valid_path.
std::filesystem::path tti_valid_path(const std::filesystem::path& path);
void write_tti(const std::filesystem::path& path, const tti::TtiMap& map);
tti::TtiMap read_tti(const std::filesystem::path& path, double dt);

// Text configuration: `key = value` lines, `#` comments, `[section]` headers.
// Top-level keys configure the scene; sections are camera, room,
// wall_texture, floor_texture, trajectory, obstacle (repeatable) and flow.
struct RunConfig {
  sim::SceneConfig scene;
  flow::FlowSolverConfig flow;
};

RunConfig parse_config(std::string_view text);
RunConfig read_config(const std::filesystem::path& path);
// Canonical text that parses back to the same configuration.
std::string dump_config(const RunConfig& config);

} // namespace evreflex::io
