#pragma once

#include <evreflex/types.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace evreflex::cli {

namespace fs = std::filesystem;

// Bad flag combinations detected after parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

extern const char* const kToolVersion;

struct SimulateOptions {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

struct FlowOptions {
  fs::path in;
  fs::path out;
  std::optional<fs::path> config;  // [flow] section overrides
};

enum class TtiVariant { Static, Dynamic, GroundTruth };

struct TtiOptions {
  fs::path in;
  fs::path out;
  TtiVariant variant = TtiVariant::Dynamic;
  std::optional<fs::path> flow;  // estimated flow dir; default: simulator flow
};

struct EvadeOptions {
  fs::path in;
  fs::path tti;
  fs::path out;
  std::optional<fs::path> flow;
  double horizon = 1.0;
  bool all_pixels = false;
  bool lift = true;
};

struct EvalOptions {
  fs::path in;
  fs::path out;
  std::optional<fs::path> flow;
  std::optional<fs::path> tti;
  std::optional<fs::path> evade;
  bool events_only = false;
  double horizon = 1.0;
  double depth_threshold = 0.5;
  bool all_pixels = false;
  bool lift = true;
};

enum class VizKind { Flow, Tti, Events, Depth };

struct VizOptions {
  fs::path in;
  fs::path out;
  VizKind kind = VizKind::Flow;
};

void run_simulate(const SimulateOptions& opt);
void run_flow(const FlowOptions& opt);
void run_tti(const TtiOptions& opt);
void run_evade(const EvadeOptions& opt);
// Returns the report text (also written to <out>/report.tsv).
std::string run_eval(const EvalOptions& opt);
void run_viz(const VizOptions& opt);

// Sequence directory layout.
fs::path frame_file(const fs::path& seq, const char* stream, std::size_t k);
fs::path window_file(const fs::path& seq, std::size_t k);
fs::path gt_tti_file(const fs::path& seq, std::size_t k);
fs::path indexed_file(const fs::path& dir, const char* stem, std::size_t k);

} // namespace evreflex::cli
