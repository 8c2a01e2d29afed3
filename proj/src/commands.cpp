#include <evreflex/commands.hpp>

#include <evreflex/eval.hpp>
#include <evreflex/flow.hpp>
#include <evreflex/io.hpp>
#include <evreflex/parallel.hpp>
#include <evreflex/policy.hpp>
#include <evreflex/sim.hpp>
#include <evreflex/tti.hpp>
#include <evreflex/viz.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

namespace evreflex::cli {

const char* const kToolVersion = EVREFLEX_VERSION;

using nlohmann::json;

namespace {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Collects outputs of one subcommand and writes manifest.json last.
class Manifest {
public:
  Manifest(std::string command, fs::path root) : root_(std::move(root)) {
    doc_["tool"] = "evreflex";
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    doc_["inputs"] = json::array();
    doc_["timings_s"] = json::object();
  }

  json& doc() { return doc_; }
  void input(const fs::path& p) { doc_["inputs"].push_back(p.string()); }
  void timing(const std::string& stage, double seconds) { doc_["timings_s"][stage] = seconds; }

  void write(const fs::path& path, std::string_view bytes) {
    io::write_file_atomic(path, bytes);
    record(path, bytes);
  }
  void record(const fs::path& path, std::string_view bytes) {
    const std::lock_guard lock(mutex_);
    outputs_[fs::relative(path, root_).generic_string()] = sha256_hex(bytes);
  }

  void finish(const fs::path& path) {
    json outs = json::array();
    for (const auto& [p, h] : outputs_) outs.push_back({{"path", p}, {"sha256", h}});
    doc_["outputs"] = std::move(outs);
    io::write_file_atomic(path, doc_.dump(2) + "\n");
  }

private:
  fs::path root_;
  json doc_;
  std::map<std::string, std::string> outputs_;
  std::mutex mutex_;
};

std::string index_name(const char* stem, std::size_t k, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu", k);
  return std::string(stem) + buf + ext;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
  }
}

// Contents of sequence.json.
struct SequenceInfo {
  CameraModel camera;
  double frame_rate = 0.0;
  double dt = 0.0;
  std::size_t frames = 0;
  std::vector<double> times;
  std::vector<policy::Vec3> ego;
};

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d json_vec(const json& j) {
  return Eigen::Vector3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

SequenceInfo load_sequence_info(const fs::path& seq) {
  const fs::path path = seq / "sequence.json";
  const std::string text = io::read_file(path);
  try {
    const json j = json::parse(text);
    SequenceInfo info;
    const json& c = j.at("camera");
    info.camera = CameraModel{c.at("fx").get<double>(), c.at("fy").get<double>(),
                              c.at("cx").get<double>(), c.at("cy").get<double>(),
                              c.at("width").get<int>(),  c.at("height").get<int>()};
    info.frame_rate = j.at("frame_rate").get<double>();
    info.dt = j.at("dt").get<double>();
    for (const json& f : j.at("frames")) {
      info.times.push_back(f.at("t").get<double>());
      info.ego.push_back(json_vec(f.at("ego_velocity")));
    }
    info.frames = info.times.size();
    if (info.frames < 2) throw Error(ErrorKind::Parse, "sequence has fewer than two frames");
    return info;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

FloatMap read_map_as(const fs::path& path, Semantics want) {
  FloatMap m = io::read_map(path);
  if (m.semantics != want) {
    throw Error(ErrorKind::KindMismatch, path.string() + ": expected a " +
                                             std::string(to_string(want)) + " map, found " +
                                             to_string(m.semantics));
  }
  return m;
}

EventMap load_window(const fs::path& seq, const SequenceInfo& info, std::size_t k) {
  const auto file = io::read_events(window_file(seq, k));
  if (file.width != info.camera.width || file.height != info.camera.height) {
    throw Error(ErrorKind::Shape, window_file(seq, k).string() + ": size differs from the camera");
  }
  return accumulate_events(file.events, TimeWindow{info.times[k], info.times[k + 1]},
                           file.width, file.height);
}

FlowField load_flow(const std::optional<fs::path>& dir, const fs::path& seq, std::size_t k) {
  return dir ? io::read_flow(indexed_file(*dir, "flow", k))
             : io::read_flow(frame_file(seq, "flow_fwd", k));
}

// Frame indices k for which <dir>/<stem>_k.evrf exists.
std::vector<std::size_t> indices_present(const fs::path& dir, const char* stem, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (fs::is_regular_file(indexed_file(dir, stem, k))) out.push_back(k);
  }
  return out;
}

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::MissingStream, std::string(what) + " directory not found: " + dir.string());
  }
}

std::optional<policy::Lifting> lifting_for(bool lift, const CameraModel& cam) {
  if (!lift) return std::nullopt;
  return policy::Lifting{cam.fx, cam.fy};
}

Mask selection_for(const tti::TtiMap& tau, double horizon, bool all_pixels) {
  if (all_pixels) return Mask(tau.width(), tau.height(), 1);
  return tti::threshold_collision(tau, horizon);
}

void require_positive(double v, const char* flag) {
  if (!(v > 0.0)) throw UsageError(std::string(flag) + " must be positive");
}

} // namespace

fs::path indexed_file(const fs::path& dir, const char* stem, std::size_t k) {
  return dir / index_name(stem, k, ".evrf");
}

fs::path frame_file(const fs::path& seq, const char* stream, std::size_t k) {
  return indexed_file(seq / "frames", stream, k);
}

fs::path window_file(const fs::path& seq, std::size_t k) {
  return seq / "events" / index_name("window", k, ".evrx");
}

fs::path gt_tti_file(const fs::path& seq, std::size_t k) {
  return indexed_file(seq / "tti_gt", "tau", k);
}

void run_simulate(const SimulateOptions& opt) {
  Stopwatch clock;
  if (!fs::is_regular_file(opt.config)) {
    throw UsageError("config file not found: " + opt.config.string());
  }
  io::RunConfig cfg = io::read_config(opt.config);
  if (opt.seed) cfg.scene.rng_seed = *opt.seed;
  const std::string dump = io::dump_config(cfg);

  make_dir(opt.out / "frames");
  make_dir(opt.out / "events");
  make_dir(opt.out / "tti_gt");
  Manifest manifest("simulate", opt.out);
  manifest.input(opt.config);
  manifest.doc()["config"] = dump;
  manifest.doc()["rng_seed"] = cfg.scene.rng_seed;
  manifest.timing("config", clock.lap());

  const sim::Sequence seq = sim::simulate_sequence(cfg.scene);
  manifest.timing("simulate", clock.lap());

  const auto& cam = seq.scene.camera;
  manifest.write(opt.out / "config.txt", dump);
  json frames = json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    manifest.write(frame_file(opt.out, "intensity", k), io::encode_map(f.intensity));
    manifest.write(frame_file(opt.out, "depth", k), io::encode_map(f.depth));
    manifest.write(frame_file(opt.out, "class", k), io::encode_map(f.class_map));
    manifest.write(frame_file(opt.out, "flow_fwd", k), io::encode_flow(f.flow_fwd));
    manifest.write(frame_file(opt.out, "flow_bwd", k), io::encode_flow(f.flow_bwd));
    frames.push_back({{"index", k},
                      {"t", f.t},
                      {"position", vec_json(f.pose.position)},
                      {"yaw", f.pose.yaw},
                      {"ego_velocity", vec_json(sim::ego_velocity(seq.scene, f.t))}});
  }
  for (std::size_t k = 0; k < seq.windows.size(); ++k) {
    manifest.write(window_file(opt.out, k),
                   io::encode_events(seq.windows[k], cam.width, cam.height));
  }
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const auto& tau = seq.gt_tti_at_frame(k);
    const auto path = gt_tti_file(opt.out, k);
    io::write_tti(path, tau);
    manifest.record(path, io::read_file(path));
    manifest.record(io::tti_valid_path(path), io::read_file(io::tti_valid_path(path)));
  }

  json info = {{"camera",
                {{"fx", cam.fx},
                 {"fy", cam.fy},
                 {"cx", cam.cx},
                 {"cy", cam.cy},
                 {"width", cam.width},
                 {"height", cam.height}}},
               {"frame_rate", seq.scene.frame_rate},
               {"dt", seq.scene.frame_interval()},
               {"frame_count", seq.frames.size()},
               {"frames", std::move(frames)}};
  manifest.write(opt.out / "sequence.json", info.dump(2) + "\n");
  manifest.timing("write", clock.lap());
  manifest.finish(opt.out / "manifest.json");
}

void run_flow(const FlowOptions& opt) {
  Stopwatch clock;
  const SequenceInfo info = load_sequence_info(opt.in);
  io::RunConfig cfg = io::read_config(opt.config ? *opt.config : opt.in / "config.txt");
  make_dir(opt.out);
  Manifest manifest("flow", opt.out);
  manifest.input(opt.in);
  if (opt.config) manifest.input(*opt.config);
  manifest.doc()["config"] = io::dump_config(cfg);

  const std::size_t n = info.frames - 1;
  std::vector<double> losses(n);
  std::vector<std::string> encoded(n);
  parallel_for(n, [&](std::size_t k) {
    const EventMap em = load_window(opt.in, info, k);
    const FloatMap a = read_map_as(frame_file(opt.in, "intensity", k), Semantics::Intensity);
    const FloatMap b = read_map_as(frame_file(opt.in, "intensity", k + 1), Semantics::Intensity);
    const auto est = flow::estimate_flow(em, a, b, cfg.flow);
    losses[k] = est.loss;
    encoded[k] = io::encode_flow(est.flow);
  });
  manifest.timing("estimate", clock.lap());

  std::string table = "frame\tloss\n";
  for (std::size_t k = 0; k < n; ++k) {
    manifest.write(indexed_file(opt.out, "flow", k), encoded[k]);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\n", k, losses[k]);
    table += buf;
  }
  manifest.write(opt.out / "flow_loss.tsv", table);
  manifest.timing("write", clock.lap());
  manifest.finish(opt.out / "manifest.json");
}

void run_tti(const TtiOptions& opt) {
  Stopwatch clock;
  const SequenceInfo info = load_sequence_info(opt.in);
  if (opt.flow && opt.variant == TtiVariant::GroundTruth) {
    throw UsageError("--flow does not apply to --variant gt");
  }
  if (opt.flow) require_dir(*opt.flow, "flow");
  make_dir(opt.out);
  Manifest manifest("tti", opt.out);
  manifest.input(opt.in);
  if (opt.flow) manifest.input(*opt.flow);
  const char* names[] = {"static", "dynamic", "gt"};
  manifest.doc()["variant"] = names[static_cast<int>(opt.variant)];

  // Frames covered: estimators need frame k+1, ground truth needs k-1.
  std::vector<std::size_t> frames;
  if (opt.variant == TtiVariant::GroundTruth) {
    for (std::size_t k = 1; k < info.frames; ++k) frames.push_back(k);
  } else {
    for (std::size_t k = 0; k + 1 < info.frames; ++k) frames.push_back(k);
  }

  std::vector<tti::TtiMap> maps(frames.size());
  parallel_for(frames.size(), [&](std::size_t j) {
    const std::size_t k = frames[j];
    const FloatMap d = read_map_as(frame_file(opt.in, "depth", k), Semantics::DepthM);
    switch (opt.variant) {
      case TtiVariant::Static:
        maps[j] = tti::estimate_tti_static(load_flow(opt.flow, opt.in, k), d, info.dt);
        break;
      case TtiVariant::Dynamic: {
        const FloatMap next = read_map_as(frame_file(opt.in, "depth", k + 1), Semantics::DepthM);
        maps[j] = tti::estimate_tti_dynamic(load_flow(opt.flow, opt.in, k), d, next, info.dt);
        break;
      }
      case TtiVariant::GroundTruth: {
        const FloatMap prev = read_map_as(frame_file(opt.in, "depth", k - 1), Semantics::DepthM);
        maps[j] = tti::ground_truth_inverse_tti(prev, d, io::read_flow(frame_file(opt.in, "flow_bwd", k)),
                                                info.dt);
        break;
      }
    }
  });
  manifest.timing("estimate", clock.lap());

  for (std::size_t j = 0; j < frames.size(); ++j) {
    const auto path = indexed_file(opt.out, "tau", frames[j]);
    io::write_tti(path, maps[j]);
    manifest.record(path, io::read_file(path));
    manifest.record(io::tti_valid_path(path), io::read_file(io::tti_valid_path(path)));
  }
  manifest.timing("write", clock.lap());
  manifest.finish(opt.out / "manifest.json");
}

void run_evade(const EvadeOptions& opt) {
  Stopwatch clock;
  require_positive(opt.horizon, "--horizon");
  const SequenceInfo info = load_sequence_info(opt.in);
  require_dir(opt.tti, "tti");
  if (opt.flow) require_dir(*opt.flow, "flow");
  const auto frames = indices_present(opt.tti, "tau", info.frames);
  if (frames.empty()) {
    throw Error(ErrorKind::MissingStream, "no tau_*.evrf maps in " + opt.tti.string());
  }
  make_dir(opt.out);
  Manifest manifest("evade", opt.out);
  manifest.input(opt.in);
  manifest.input(opt.tti);
  if (opt.flow) manifest.input(*opt.flow);
  manifest.doc()["horizon_s"] = opt.horizon;
  manifest.doc()["all_pixels"] = opt.all_pixels;
  manifest.doc()["lifted"] = opt.lift;

  std::vector<policy::EvasionResult> results(frames.size());
  parallel_for(frames.size(), [&](std::size_t j) {
    const std::size_t k = frames[j];
    const auto tau = io::read_tti(indexed_file(opt.tti, "tau", k), info.dt);
    const FloatMap d = read_map_as(frame_file(opt.in, "depth", k), Semantics::DepthM);
    const FlowField f = load_flow(opt.flow, opt.in, k);
    const auto mv = policy::obstacle_motion_vector(f, d, tau, selection_for(tau, opt.horizon, opt.all_pixels),
                                                   lifting_for(opt.lift, info.camera));
    results[j] = policy::evade(mv, policy::EgoMotion{info.ego[k]});
  });
  manifest.timing("evade", clock.lap());

  std::string table = "frame\tpixels\tmotion_x\tmotion_y\tmotion_z\tpsi_x\tpsi_y\tpsi_z\tdegenerate\n";
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const auto& r = results[j];
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%d\n",
                  frames[j], r.pixel_count, r.motion_vec.x(), r.motion_vec.y(), r.motion_vec.z(),
                  r.psi.x(), r.psi.y(), r.psi.z(), r.degenerate ? 1 : 0);
    table += buf;
  }
  manifest.write(opt.out / "evasion.tsv", table);
  manifest.finish(opt.out / "manifest.json");
}

namespace {

struct EvasionRow {
  std::size_t frame = 0;
  std::size_t pixels = 0;
  policy::Vec3 motion = policy::Vec3::Zero();
};

std::vector<EvasionRow> read_evasion(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<EvasionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    EvasionRow r;
    double x = 0, y = 0, z = 0;
    if (!(ls >> r.frame >> r.pixels >> x >> y >> z)) {
      throw Error(ErrorKind::Parse, path.string() + ": malformed row '" + line + "'");
    }
    r.motion = policy::Vec3(x, y, z);
    rows.push_back(r);
  }
  return rows;
}

const char* class_name(int id) {
  switch (id) {
    case 0: return "static";
    case 1: return "floor";
    case 2: return "flying";
  }
  return "other";
}

void add_scores(eval::Report& report, const std::string& prefix, const eval::ClassScores& s) {
  auto one = [&](const std::string& name, const eval::Scores& sc) {
    report.add(prefix + "_" + name + "_precision", sc.precision);
    report.add(prefix + "_" + name + "_recall", sc.recall);
    report.add(prefix + "_" + name + "_f1", sc.f1);
    report.add_count(prefix + "_" + name + "_support", sc.support());
  };
  for (const auto& [id, sc] : s.per_class) one(class_name(id), sc);
  one("overall", s.overall);
}

} // namespace

std::string run_eval(const EvalOptions& opt) {
  Stopwatch clock;
  require_positive(opt.horizon, "--horizon");
  require_positive(opt.depth_threshold, "--depth-threshold");
  if (!opt.flow && !opt.tti && !opt.evade) {
    throw UsageError("eval needs at least one of --flow, --tti, --evade");
  }
  const SequenceInfo info = load_sequence_info(opt.in);
  make_dir(opt.out);
  Manifest manifest("eval", opt.out);
  manifest.input(opt.in);
  eval::Report report;

  if (opt.flow) {
    require_dir(*opt.flow, "flow");
    manifest.input(*opt.flow);
    double ee_sum = 0.0;
    double outliers = 0.0;
    std::size_t pixels = 0;
    for (std::size_t k = 0; k + 1 < info.frames; ++k) {
      const FlowField pred = io::read_flow(indexed_file(*opt.flow, "flow", k));
      const FlowField gt = io::read_flow(frame_file(opt.in, "flow_fwd", k));
      std::optional<Mask> mask;
      if (opt.events_only) mask = event_mask(load_window(opt.in, info, k));
      if (mask && count_set(*mask) == 0) continue;
      const auto e = eval::flow_aee(pred, gt, mask ? &*mask : nullptr);
      ee_sum += e.aee * static_cast<double>(e.pixels);
      outliers += e.outlier_pct / 100.0 * static_cast<double>(e.pixels);
      pixels += e.pixels;
    }
    if (pixels > 0) {
      report.add("flow_aee_px", ee_sum / static_cast<double>(pixels));
      report.add("flow_outlier_pct", 100.0 * outliers / static_cast<double>(pixels));
    } else {
      report.add_undefined("flow_aee_px");
      report.add_undefined("flow_outlier_pct");
    }
    report.add_count("flow_pixels", pixels);
  }

  if (opt.tti) {
    require_dir(*opt.tti, "tti");
    manifest.input(*opt.tti);
    const auto frames = indices_present(*opt.tti, "tau", info.frames);
    eval::ClassScores ours;
    eval::ClassScores baseline;
    double se = 0.0;
    std::size_t joint = 0;
    std::size_t used = 0;
    for (std::size_t k : frames) {
      if (k == 0) continue;  // no ground truth for the first frame
      const auto pred = io::read_tti(indexed_file(*opt.tti, "tau", k), info.dt);
      const auto gt = io::read_tti(gt_tti_file(opt.in, k), info.dt);
      const FloatMap cls = read_map_as(frame_file(opt.in, "class", k), Semantics::ClassId);
      const FloatMap d = read_map_as(frame_file(opt.in, "depth", k), Semantics::DepthM);
      const Mask gt_mask = tti::threshold_collision(gt, opt.horizon);
      ours += eval::prf1(tti::threshold_collision(pred, opt.horizon), gt_mask, cls, &gt.valid);
      baseline += eval::prf1(eval::depth_baseline(d, opt.depth_threshold), gt_mask, cls, &gt.valid);
      for (std::size_t i = 0; i < gt.valid.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        const double e = static_cast<double>(pred.values.values[i]) - gt.values.values[i];
        se += e * e;
        ++joint;
      }
      ++used;
    }
    if (used == 0) throw Error(ErrorKind::MissingStream, "no comparable tau maps in " + opt.tti->string());
    report.add_count("tti_frames", used);
    if (joint > 0) {
      report.add("tti_mse", se / static_cast<double>(joint));
    } else {
      report.add_undefined("tti_mse");
    }
    add_scores(report, "tti", ours);
    add_scores(report, "depth_baseline", baseline);
  }

  if (opt.evade) {
    const auto rows = read_evasion(*opt.evade / "evasion.tsv");
    manifest.input(*opt.evade);
    std::vector<eval::MotionSample> samples;
    std::size_t skipped = 0;
    for (const auto& r : rows) {
      if (r.frame == 0 || r.frame >= info.frames) {
        ++skipped;
        continue;
      }
      const auto gt_tau = io::read_tti(gt_tti_file(opt.in, r.frame), info.dt);
      const FloatMap d = read_map_as(frame_file(opt.in, "depth", r.frame), Semantics::DepthM);
      const FlowField f = io::read_flow(frame_file(opt.in, "flow_fwd", r.frame));
      const auto gt = policy::obstacle_motion_vector(
          f, d, gt_tau, selection_for(gt_tau, opt.horizon, opt.all_pixels),
          lifting_for(opt.lift, info.camera));
      if (gt.value.norm() == 0.0 || r.motion.norm() == 0.0) {
        ++skipped;
        continue;
      }
      samples.push_back({r.motion, gt.value});
    }
    report.add_count("aae_samples", samples.size());
    report.add_count("aae_skipped_frames", skipped);
    if (samples.empty()) {
      report.add_undefined("aae_deg");
      report.add_undefined("aae_top10_deg");
    } else {
      const auto aae = eval::aae_report(samples);
      report.add("aae_deg", aae.aae);
      if (aae.aae_top10) {
        report.add("aae_top10_deg", *aae.aae_top10);
      } else {
        report.add_undefined("aae_top10_deg");
      }
    }
  }
  manifest.timing("eval", clock.lap());

  const std::string text = report.to_text();
  manifest.write(opt.out / "report.tsv", text);
  manifest.finish(opt.out / "manifest.json");
  return text;
}

void run_viz(const VizOptions& opt) {
  const std::string bytes = io::read_file(opt.in);
  auto out_parent = opt.out.parent_path();
  if (!out_parent.empty()) make_dir(out_parent);
  fs::path manifest_path = opt.out;
  manifest_path += ".manifest.json";
  Manifest manifest("viz", out_parent.empty() ? fs::path(".") : out_parent);
  manifest.input(opt.in);

  auto mismatch = [&](const char* want) {
    return Error(ErrorKind::KindMismatch, opt.in.string() + ": not " + want + " file");
  };
  const bool is_events = bytes.size() >= 4 && bytes.compare(0, 4, "EVRX") == 0;
  const bool is_map = bytes.size() >= 4 && bytes.compare(0, 4, "EVRF") == 0;

  viz::RgbImage image;
  switch (opt.kind) {
    case VizKind::Events: {
      if (!is_events) throw mismatch("an event");
      const auto file = io::decode_events(bytes);
      image = viz::render_events(file.events, file.width, file.height);
      manifest.doc()["event_count"] = file.events.size();
      break;
    }
    case VizKind::Flow: {
      if (!is_map) throw mismatch("a flow");
      const auto rendering = viz::render_flow(io::decode_flow(bytes));
      image = rendering.image;
      manifest.doc()["flow_max_magnitude_px"] = rendering.max_magnitude;
      break;
    }
    case VizKind::Tti:
    case VizKind::Depth: {
      if (!is_map) throw mismatch("a map");
      const FloatMap map = io::decode_map(bytes);
      const bool tti_kind = opt.kind == VizKind::Tti;
      if (map.semantics != (tti_kind ? Semantics::InvTtiS : Semantics::DepthM)) {
        throw mismatch(tti_kind ? "an inverse-TTI" : "a depth");
      }
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (float v : map.values.values()) {
        if (tti_kind ? !std::isfinite(v) : !depth_valid(v)) continue;
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
      }
      if (!(hi >= lo)) lo = hi = 0.0;
      if (tti_kind) lo = 0.0;  // zero danger is black
      image = viz::render_gray(map, lo, hi);
      fs::path sidecar = opt.out;
      sidecar += ".range.txt";
      char buf[128];
      std::snprintf(buf, sizeof buf, "min\t%.9g\nmax\t%.9g\n", lo, hi);
      manifest.write(sidecar, buf);
      manifest.doc()["range"] = {lo, hi};
      break;
    }
  }
  manifest.write(opt.out, viz::encode_ppm(image));
  manifest.finish(manifest_path);
}

} // namespace evreflex::cli
