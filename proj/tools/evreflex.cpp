#include <evreflex/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace evreflex::cli;

int run(int argc, char** argv) {
  CLI::App app{"Learning-free event + depth toolkit: simulate, flow, tti, evade, eval, viz"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  SimulateOptions sim;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic sequence");
  simulate->add_option("--config", sim.config, "Scene configuration file")->required();
  simulate->add_option("--out", sim.out, "Output sequence directory")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "Override rng_seed");

  FlowOptions fl;
  auto* flow = app.add_subcommand("flow", "Estimate optical flow for every event window");
  flow->add_option("--in", fl.in, "Sequence directory")->required();
  flow->add_option("--out", fl.out, "Output directory")->required();
  std::string flow_config;
  auto* flow_cfg_opt = flow->add_option("--config", flow_config, "Config whose [flow] section is used");

  TtiOptions tt;
  std::string tti_flow;
  auto* tti = app.add_subcommand("tti", "Compute inverse time-to-impact maps");
  tti->add_option("--in", tt.in, "Sequence directory")->required();
  tti->add_option("--out", tt.out, "Output directory")->required();
  tti->add_option("--variant", tt.variant, "static | dynamic | gt")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, TtiVariant>{{"static", TtiVariant::Static},
                                            {"dynamic", TtiVariant::Dynamic},
                                            {"gt", TtiVariant::GroundTruth}}))
      ->required();
  auto* tti_flow_opt = tti->add_option("--flow", tti_flow, "Estimated flow directory");

  EvadeOptions ev;
  std::string evade_flow;
  auto* evade = app.add_subcommand("evade", "Obstacle motion vector and evasion direction");
  evade->add_option("--in", ev.in, "Sequence directory")->required();
  evade->add_option("--tti", ev.tti, "Inverse-TTI directory")->required();
  evade->add_option("--out", ev.out, "Output directory")->required();
  auto* evade_flow_opt = evade->add_option("--flow", evade_flow, "Estimated flow directory");
  evade->add_option("--horizon", ev.horizon, "Danger horizon in seconds");
  evade->add_flag("--all-pixels", ev.all_pixels, "Average over every valid pixel");
  bool evade_no_lift = false;
  evade->add_flag("--no-lift", evade_no_lift, "Keep flow components in px/frame");

  EvalOptions ea;
  std::string eval_flow, eval_tti, eval_evade;
  auto* eval = app.add_subcommand("eval", "Metric report");
  eval->add_option("--in", ea.in, "Sequence directory")->required();
  eval->add_option("--out", ea.out, "Output directory")->required();
  auto* eval_flow_opt = eval->add_option("--flow", eval_flow, "Estimated flow directory");
  auto* eval_tti_opt = eval->add_option("--tti", eval_tti, "Inverse-TTI directory");
  auto* eval_evade_opt = eval->add_option("--evade", eval_evade, "Evasion directory");
  eval->add_flag("--events-only", ea.events_only, "Score flow on event pixels only");
  eval->add_option("--horizon", ea.horizon, "Danger horizon in seconds");
  eval->add_option("--depth-threshold", ea.depth_threshold, "Depth baseline threshold in metres");
  eval->add_flag("--all-pixels", ea.all_pixels, "Ground-truth motion vectors over every pixel");
  bool eval_no_lift = false;
  eval->add_flag("--no-lift", eval_no_lift, "Keep flow components in px/frame");

  VizOptions vz;
  auto* viz = app.add_subcommand("viz", "Render a stream file as a PPM image");
  viz->add_option("--in", vz.in, "Input file")->required();
  viz->add_option("--out", vz.out, "Output .ppm")->required();
  viz->add_option("--kind", vz.kind, "flow | tti | events | depth")
      ->transform(CLI::CheckedTransformer(std::map<std::string, VizKind>{
          {"flow", VizKind::Flow}, {"tti", VizKind::Tti}, {"events", VizKind::Events},
          {"depth", VizKind::Depth}}))
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*simulate) {
    if (*seed_opt) sim.seed = seed;
    run_simulate(sim);
  } else if (*flow) {
    if (*flow_cfg_opt) fl.config = flow_config;
    run_flow(fl);
  } else if (*tti) {
    if (*tti_flow_opt) tt.flow = tti_flow;
    run_tti(tt);
  } else if (*evade) {
    if (*evade_flow_opt) ev.flow = evade_flow;
    ev.lift = !evade_no_lift;
    run_evade(ev);
  } else if (*eval) {
    if (*eval_flow_opt) ea.flow = eval_flow;
    if (*eval_tti_opt) ea.tti = eval_tti;
    if (*eval_evade_opt) ea.evade = eval_evade;
    ea.lift = !eval_no_lift;
    std::cout << run_eval(ea);
  } else if (*viz) {
    run_viz(vz);
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const evreflex::Error& e) {
    std::cerr << "error [" << evreflex::to_string(e.kind()) << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
