// Command-line front end: fit a source field, probe the loss landscape,
// run a full perturb-and-revise edit, or render orbit views.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pnr/errors.hpp"
#include "pnr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pnr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

RunConfig build_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg.apply_json(opts.config_path);
  if (opts.has_seed) cfg.step.seed = opts.seed;
  return cfg;
}

int run_fit(const CommonOpts& opts, const std::string& scenario,
            const std::string& targets_ckpt, const std::string& out_path,
            int max_steps, double rate, double mse_threshold) {
  RunConfig cfg = build_config(opts);
  if (!scenario.empty()) {
    // Materialize a built-in scenario: procedural source + target
    // checkpoints plus the matching prompt descriptor.
    Scenario s = make_scenario(scenario, cfg.dims);
    fs::create_directories(out_path);
    const fs::path dir(out_path);
    save_checkpoint(s.source, (dir / "source.pnrf").string());
    save_checkpoint(s.target, (dir / "target.pnrf").string());
    PromptDescriptor d;
    d.prompt_id = scenario;
    d.checkpoints = {(dir / "target.pnrf").string()};
    d.weights = {1.0};
    d.ring = cfg.ring;
    d.save_json((dir / "prompt.json").string());
    std::cout << "scenario '" << scenario << "' written to " << out_path
              << "\n";
    return kExitOk;
  }
  if (targets_ckpt.empty()) {
    std::cerr << "fit: need --scenario or --targets\n";
    return kExitConfig;
  }
  FieldParams target = load_checkpoint(targets_ckpt);
  auto cams = cfg.ring.build(target.bbox.center());
  std::vector<Image> views;
  views.reserve(cams.size());
  for (const auto& cam : cams) views.push_back(render(target, cam, cfg.render));
  FitResult result =
      fit_field(views, cams, cfg.render, cfg.dims, target.bbox, max_steps,
                rate, mse_threshold, cfg.step.seed);
  save_checkpoint(result.params, out_path);
  std::cout << "fit: mse=" << result.final_mse << " steps=" << result.steps_run
            << (result.converged ? "" : " (not converged)") << "\n";
  if (!result.converged) {
    std::cerr << "fit did not reach mse threshold " << mse_threshold
              << "; partial checkpoint written to " << out_path << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int run_probe(const CommonOpts& opts, const std::string& source_path,
              const std::string& prompt_path, const std::string& out_path) {
  RunConfig cfg = build_config(opts);
  if (!source_path.empty()) cfg.source_checkpoint = source_path;
  if (!prompt_path.empty()) cfg.prompt_path = prompt_path;
  if (cfg.source_checkpoint.empty() || cfg.prompt_path.empty()) {
    std::cerr << "probe: need --source and --prompt\n";
    return kExitConfig;
  }
  FieldParams source = load_checkpoint(cfg.source_checkpoint);
  PromptDescriptor d = PromptDescriptor::load_json(cfg.prompt_path);
  const int hw = std::max(1, d.ring.width / 2);
  const int hh = std::max(1, d.ring.height / 2);
  PromptSpec prompt = d.realize(cfg.render, hw, hh);
  auto cams = d.ring.build_at(hw, hh, source.bbox.center());
  ProbeReport report = probe_and_select(source, prompt, cams, cfg.step,
                                        cfg.render, cfg.schedule, cfg.probe);
  report.save_json(out_path);
  std::cout << "probe: delta_L=" << report.delta_L << " eta=" << report.eta
            << "\n";
  return kExitOk;
}

int run_edit_cmd(const CommonOpts& opts, const std::string& source_path,
                 const std::string& prompt_path, const std::string& out_dir,
                 std::optional<double> eta, bool skip_refine) {
  RunConfig cfg = build_config(opts);
  if (!source_path.empty()) cfg.source_checkpoint = source_path;
  if (!prompt_path.empty()) cfg.prompt_path = prompt_path;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (eta) cfg.eta_override = eta;
  if (skip_refine) cfg.skip_refine = true;
  EditRun run = run_edit_to_disk(cfg);
  std::cout << "edit: eta=" << run.eta_used
            << " final_mse=" << run.final_edit_mse
            << " identity=" << run.final_identity_dist << "\n";
  return kExitOk;
}

int run_render(const CommonOpts& opts, const std::string& ckpt_path,
               int n_views, int resolution, const std::string& out_dir) {
  RunConfig cfg = build_config(opts);
  FieldParams params = load_checkpoint(ckpt_path);
  CameraRing ring = cfg.ring;
  if (resolution > 0) {
    ring.width = resolution;
    ring.height = resolution;
  }
  render_orbit_pngs(params, n_views, ring, cfg.render, out_dir);
  std::cout << n_views << " views written to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturb-and-revise editing of voxel radiance fields"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", common.seed, "RNG seed override");

  std::string scenario, targets_ckpt, out_path = "field.pnrf";
  int fit_steps = 400;
  double fit_rate = 0.05, fit_threshold = 1e-3;
  auto* fit = app.add_subcommand("fit", "Fit a field or emit a scenario");
  fit->add_option("--scenario", scenario,
                  "Built-in scenario: color_change, object_added, object_moved");
  fit->add_option("--targets", targets_ckpt,
                  "Checkpoint whose renders are the fit targets");
  fit->add_option("--out", out_path, "Output checkpoint (or scenario dir)");
  fit->add_option("--steps", fit_steps, "Max optimization steps");
  fit->add_option("--rate", fit_rate, "Learning rate");
  fit->add_option("--mse-threshold", fit_threshold, "Convergence threshold");

  std::string source_path, prompt_path, report_path = "probe_report.json";
  auto* probe = app.add_subcommand("probe", "Probe loss landscape, select eta");
  probe->add_option("--source", source_path, "Source checkpoint");
  probe->add_option("--prompt", prompt_path, "Prompt descriptor JSON");
  probe->add_option("--out", report_path, "Report output path");

  std::string edit_out;
  double eta_flag = -1.0;
  bool skip_refine = false;
  auto* edit = app.add_subcommand("edit", "Full perturb-and-revise pipeline");
  edit->add_option("--source", source_path, "Source checkpoint");
  edit->add_option("--prompt", prompt_path, "Prompt descriptor JSON");
  edit->add_option("--out-dir", edit_out, "Output directory");
  auto* eta_opt = edit->add_option("--eta", eta_flag,
                                   "Force eta (skips the probe)");
  edit->add_flag("--skip-refine", skip_refine, "Skip the refinement phase");

  std::string render_ckpt, render_out = "renders";
  int n_views = 8, resolution = 0;
  auto* rend = app.add_subcommand("render", "Render orbit views to PNG");
  rend->add_option("--checkpoint", render_ckpt, "Checkpoint to render")
      ->required();
  rend->add_option("--views", n_views, "Number of orbit views");
  rend->add_option("--resolution", resolution, "Square output resolution");
  rend->add_option("--out-dir", render_out, "Output directory");

  try {
    app.parse(argc, argv);
    common.has_seed = seed_opt->count() > 0;
    if (*fit) {
      return run_fit(common, scenario, targets_ckpt, out_path, fit_steps,
                     fit_rate, fit_threshold);
    }
    if (*probe) {
      return run_probe(common, source_path, prompt_path, report_path);
    }
    if (*edit) {
      std::optional<double> eta;
      if (eta_opt->count() > 0) eta = eta_flag;
      return run_edit_cmd(common, source_path, prompt_path, edit_out, eta,
                          skip_refine);
    }
    if (*rend) {
      return run_render(common, render_ckpt, n_views, resolution, render_out);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const pnr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pnr::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const pnr::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
