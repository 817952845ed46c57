#include "pnr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pnr/errors.hpp"

namespace pnr {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Camera> CameraRing::build(Vec3 center) const {
  return orbit_cameras(count, radius, elevation, width, height, center);
}

std::vector<Camera> CameraRing::build_at(int w, int h, Vec3 center) const {
  return orbit_cameras(count, radius, elevation, w, h, center);
}

void PromptDescriptor::save_json(const std::string& path) const {
  json j;
  j["prompt_id"] = prompt_id;
  j["prior_std"] = prior_std;
  json comps = json::array();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    comps.push_back({{"checkpoint", checkpoints[i]}, {"weight", weights[i]}});
  }
  j["components"] = comps;
  j["cameras"] = {{"count", ring.count},
                  {"radius", ring.radius},
                  {"elevation", ring.elevation},
                  {"width", ring.width},
                  {"height", ring.height}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

PromptDescriptor PromptDescriptor::load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("prompt descriptor parse error: " + std::string(e.what()));
  }
  PromptDescriptor d;
  try {
    d.prompt_id = j.value("prompt_id", "edit");
    d.prior_std = j.value("prior_std", 0.05);
    for (const auto& c : j.at("components")) {
      d.checkpoints.push_back(c.at("checkpoint").get<std::string>());
      d.weights.push_back(c.value("weight", 1.0));
    }
    const auto& cam = j.at("cameras");
    d.ring.count = cam.value("count", 4);
    d.ring.radius = cam.value("radius", 2.5);
    d.ring.elevation = cam.value("elevation", 0.35);
    d.ring.width = cam.value("width", 64);
    d.ring.height = cam.value("height", 64);
  } catch (const json::exception& e) {
    throw ConfigError("prompt descriptor schema error: " +
                      std::string(e.what()));
  }
  if (d.checkpoints.empty()) {
    throw ConfigError("prompt descriptor has no components");
  }
  return d;
}

PromptSpec PromptDescriptor::realize(const RenderConfig& cfg, int w,
                                     int h) const {
  std::vector<FieldParams> fields;
  fields.reserve(checkpoints.size());
  for (const auto& path : checkpoints) fields.push_back(load_checkpoint(path));
  auto cams = ring.build_at(w, h, fields.front().bbox.center());
  return make_prompt_from_fields(fields, weights, cams, cfg, prior_std,
                                 prompt_id);
}

void RunConfig::validate() const {
  render.validate();
  schedule.validate();
  probe.validate();
  refine.validate();
  if (edit_steps < 0) throw ConfigError("edit_steps must be >= 0");
  if (!(resolution_milestone_fraction >= 0.0 &&
        resolution_milestone_fraction <= 1.0)) {
    throw ConfigError("resolution_milestone_fraction must lie in [0,1]");
  }
  if (step.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  if (eta_override && (*eta_override < 0.0 || *eta_override > 1.0)) {
    throw ConfigError("eta override must lie in [0,1]");
  }
}

namespace {

void merge_config(RunConfig& cfg, const json& j) {
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.dims = {g.value("nx", cfg.dims.nx), g.value("ny", cfg.dims.ny),
                g.value("nz", cfg.dims.nz)};
  }
  if (j.contains("render")) {
    const auto& r = j["render"];
    cfg.render.samples_per_ray =
        r.value("samples_per_ray", cfg.render.samples_per_ray);
    cfg.render.near_clip = r.value("near", cfg.render.near_clip);
    cfg.render.far_clip = r.value("far", cfg.render.far_clip);
    if (r.contains("background")) {
      auto bg = r["background"].get<std::vector<double>>();
      if (bg.size() != 3) throw ConfigError("background must have 3 entries");
      cfg.render.background = {bg[0], bg[1], bg[2]};
    }
    cfg.render.parallel = r.value("parallel", cfg.render.parallel);
  }
  if (j.contains("cameras")) {
    const auto& c = j["cameras"];
    cfg.ring.count = c.value("count", cfg.ring.count);
    cfg.ring.radius = c.value("radius", cfg.ring.radius);
    cfg.ring.elevation = c.value("elevation", cfg.ring.elevation);
    cfg.ring.width = c.value("width", cfg.ring.width);
    cfg.ring.height = c.value("height", cfg.ring.height);
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    cfg.schedule.f_min_start = s.value("f_min_start", cfg.schedule.f_min_start);
    cfg.schedule.f_max_start = s.value("f_max_start", cfg.schedule.f_max_start);
    cfg.schedule.f_min_end = s.value("f_min_end", cfg.schedule.f_min_end);
    cfg.schedule.f_max_end = s.value("f_max_end", cfg.schedule.f_max_end);
    cfg.schedule.anneal_end_fraction =
        s.value("anneal_end_fraction", cfg.schedule.anneal_end_fraction);
    cfg.schedule.sigma_max = s.value("sigma_max", cfg.schedule.sigma_max);
  }
  if (j.contains("step")) {
    const auto& s = j["step"];
    cfg.step.learning_rate = s.value("learning_rate", cfg.step.learning_rate);
    cfg.step.noise_samples = s.value("noise_samples", cfg.step.noise_samples);
    cfg.step.seed = s.value("seed", cfg.step.seed);
    const std::string w = s.value("weighting", std::string("one"));
    if (w == "one") {
      cfg.step.weighting = SigmaWeighting::kOne;
    } else if (w == "snr") {
      cfg.step.weighting = SigmaWeighting::kSnr;
    } else {
      throw ConfigError("unknown weighting mode: " + w);
    }
  }
  if (j.contains("probe")) {
    const auto& p = j["probe"];
    cfg.probe.probe_steps = p.value("probe_steps", cfg.probe.probe_steps);
    cfg.probe.window = p.value("window", cfg.probe.window);
    if (p.contains("delta_min")) {
      cfg.probe.delta_min_abs = p["delta_min"].get<double>();
    }
    cfg.probe.delta_min_scale =
        p.value("delta_min_scale", cfg.probe.delta_min_scale);
    cfg.probe.eta_max = p.value("eta_max", cfg.probe.eta_max);
  }
  if (j.contains("refine")) {
    const auto& r = j["refine"];
    cfg.refine.lambda_l1 = r.value("lambda_l1", cfg.refine.lambda_l1);
    cfg.refine.lambda_p = r.value("lambda_p", cfg.refine.lambda_p);
    cfg.refine.refine_steps = r.value("refine_steps", cfg.refine.refine_steps);
    cfg.refine.decay_end_fraction =
        r.value("decay_end_fraction", cfg.refine.decay_end_fraction);
    cfg.refine.pyramid_levels =
        r.value("pyramid_levels", cfg.refine.pyramid_levels);
  }
  if (j.contains("init")) {
    const auto& i = j["init"];
    cfg.init.density_mean = i.value("density_mean", cfg.init.density_mean);
    cfg.init.density_std = i.value("density_std", cfg.init.density_std);
    cfg.init.color_mean = i.value("color_mean", cfg.init.color_mean);
    cfg.init.color_std = i.value("color_std", cfg.init.color_std);
  }
  cfg.edit_steps = j.value("edit_steps", cfg.edit_steps);
  cfg.resolution_milestone_fraction = j.value(
      "resolution_milestone_fraction", cfg.resolution_milestone_fraction);
  if (j.contains("eta")) cfg.eta_override = j["eta"].get<double>();
  cfg.skip_refine = j.value("skip_refine", cfg.skip_refine);
  cfg.perturb_seed = j.value("perturb_seed", cfg.perturb_seed);
  cfg.source_checkpoint = j.value("source_checkpoint", cfg.source_checkpoint);
  cfg.prompt_path = j.value("prompt", cfg.prompt_path);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
}

}  // namespace

RunConfig RunConfig::load_json(const std::string& path) {
  RunConfig cfg;
  cfg.apply_json(path);
  return cfg;
}

void RunConfig::apply_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  try {
    merge_config(*this, j);
  } catch (const json::exception& e) {
    throw ConfigError("config schema error: " + std::string(e.what()));
  }
}

FitResult fit_field(const std::vector<Image>& targets,
                    const std::vector<Camera>& cameras,
                    const RenderConfig& render_cfg, GridDims dims, Bbox bbox,
                    int max_steps, double rate, double mse_threshold,
                    std::uint64_t seed) {
  if (targets.empty() || targets.size() != cameras.size()) {
    throw ConfigError("fit: targets/cameras mismatch");
  }
  FitResult result;
  result.params = sample_init(InitDistribution{}, dims, seed, bbox);

  // Adam state
  FieldGrad m = FieldGrad::zeros_like(result.params);
  FieldGrad v = FieldGrad::zeros_like(result.params);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  double values_per_view = 0.0;
  for (const auto& t : targets) values_per_view += t.data.size();

  for (int step = 1; step <= max_steps; ++step) {
    FieldGrad grad = FieldGrad::zeros_like(result.params);
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      auto [loss, g] = render_loss_grad(result.params, cameras[i], render_cfg,
                                        l2_pixel_loss, targets[i]);
      sq_sum += 2.0 * loss;
      grad.add_scaled(g, 1.0);
    }
    result.final_mse = sq_sum / values_per_view;
    result.steps_run = step;
    if (result.final_mse < mse_threshold) {
      result.converged = true;
      return result;
    }
    auto adam_axis = [&](std::vector<double>& mm, std::vector<double>& vv,
                         const std::vector<double>& gg, auto&& write) {
      const double c1 = 1.0 - std::pow(b1, step);
      const double c2 = 1.0 - std::pow(b2, step);
      for (std::size_t i = 0; i < gg.size(); ++i) {
        mm[i] = b1 * mm[i] + (1.0 - b1) * gg[i];
        vv[i] = b2 * vv[i] + (1.0 - b2) * gg[i] * gg[i];
        write(i, rate * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + eps));
      }
    };
    adam_axis(m.density, v.density, grad.density, [&](std::size_t i, double d) {
      result.params.raw_density[i] =
          static_cast<float>(result.params.raw_density[i] - d);
    });
    adam_axis(m.color, v.color, grad.color, [&](std::size_t i, double d) {
      result.params.raw_color[i] =
          static_cast<float>(result.params.raw_color[i] - d);
    });
  }
  return result;
}

double edit_target_mse(const FieldParams& params,
                       const std::vector<Camera>& cameras,
                       const RenderConfig& render_cfg,
                       const PromptSpec& prompt) {
  double sq = 0.0, n = 0.0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    Image out = render(params, cameras[i], render_cfg);
    const Image& target = prompt.per_view[i].front().target;
    Image diff = out - target;
    sq += sq_norm(diff);
    n += diff.data.size();
  }
  return sq / n;
}

EditRun run_edit(const FieldParams& source, const PromptDescriptor& descriptor,
                 const RunConfig& cfg) {
  cfg.validate();
  EditRun run;
  run.source = source;

  const Vec3 center = source.bbox.center();
  const int full_w = descriptor.ring.width, full_h = descriptor.ring.height;
  const int half_w = std::max(1, full_w / 2);
  const int half_h = std::max(1, full_h / 2);
  auto cams_full = descriptor.ring.build_at(full_w, full_h, center);
  auto cams_half = descriptor.ring.build_at(half_w, half_h, center);

  // The annealing horizon is the edit budget; probe and refine share it.
  NoiseSchedule sched = cfg.schedule;
  sched.total_steps = std::max(1, cfg.edit_steps);
  PromptSpec prompt_full = descriptor.realize(cfg.render, full_w, full_h);
  PromptSpec prompt_half = descriptor.realize(cfg.render, half_w, half_h);

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0)
        .count();
  };

  // Phase 1: probe (skipped entirely when eta is forced).
  if (cfg.eta_override) {
    run.eta_used = *cfg.eta_override;
  } else {
    const auto t0 = clock::now();
    run.probe = probe_and_select(source, prompt_half, cams_half, cfg.step,
                                 cfg.render, sched, cfg.probe);
    run.eta_used = run.probe->eta;
    run.timings.probe_ms = ms_since(t0);
  }

  // Phase 2: perturb from the pristine source.
  run.perturbed = perturb(source, cfg.init, run.eta_used, cfg.perturb_seed);

  // Phase 3: edit, half resolution until the milestone.
  {
    const auto t0 = clock::now();
    FieldParams params = run.perturbed;
    const int half_steps = static_cast<int>(
        std::lround(cfg.edit_steps * cfg.resolution_milestone_fraction));
    StepConfig step_a = cfg.step;
    LossHistory hist_a =
        run_distillation(params, prompt_half, cams_half, step_a, cfg.render,
                         sched, half_steps, 0);
    StepConfig step_b = cfg.step;
    step_b.seed = cfg.step.seed + 1;
    LossHistory hist_b = run_distillation(params, prompt_full, cams_full,
                                          step_b, cfg.render, sched,
                                          cfg.edit_steps - half_steps,
                                          half_steps);
    run.edit_history = hist_a;
    for (double v : hist_b.losses) run.edit_history.append(v);
    run.final_params = params;
    run.timings.edit_ms = ms_since(t0);
  }

  // Phase 4: refinement with identity-preserving gradients.
  if (!cfg.skip_refine && cfg.refine.refine_steps > 0) {
    const auto t0 = clock::now();
    StepConfig step_r = cfg.step;
    step_r.seed = cfg.step.seed + 2;
    run.refine_diag = run_refinement(run.final_params, source, prompt_full,
                                     cams_full, step_r, cfg.render, cfg.refine,
                                     sched, cfg.edit_steps);
    run.timings.refine_ms = ms_since(t0);
  }

  run.final_edit_mse =
      edit_target_mse(run.final_params, cams_full, cfg.render, prompt_full);
  RefineConfig id_cfg = cfg.refine;
  double id_sum = 0.0;
  for (const auto& cam : cams_full) {
    id_sum += identity_distance(render(run.final_params, cam, cfg.render),
                                render(source, cam, cfg.render), id_cfg);
  }
  run.final_identity_dist = id_sum / cams_full.size();
  return run;
}

void render_orbit_pngs(const FieldParams& params, int n_views,
                       const CameraRing& ring, const RenderConfig& render_cfg,
                       const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto cams = orbit_cameras(n_views, ring.radius, ring.elevation, ring.width,
                            ring.height, params.bbox.center());
  for (int i = 0; i < n_views; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d.png", i);
    write_png(render(params, cams[i], render_cfg),
              (fs::path(out_dir) / name).string());
  }
}

EditRun run_edit_to_disk(const RunConfig& cfg) {
  if (cfg.source_checkpoint.empty() || cfg.prompt_path.empty() ||
      cfg.out_dir.empty()) {
    throw ConfigError("edit requires source_checkpoint, prompt and out_dir");
  }
  FieldParams source = load_checkpoint(cfg.source_checkpoint);
  PromptDescriptor descriptor = PromptDescriptor::load_json(cfg.prompt_path);

  EditRun run = run_edit(source, descriptor, cfg);

  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  save_checkpoint(run.source, (out / "source.pnrf").string());
  save_checkpoint(run.perturbed, (out / "perturbed.pnrf").string());
  save_checkpoint(run.final_params, (out / "final.pnrf").string());
  if (run.probe) run.probe->save_json((out / "probe_report.json").string());
  run.edit_history.save_csv((out / "edit_loss.csv").string());
  run.refine_diag.save_csv((out / "refine_diag.csv").string());
  render_orbit_pngs(run.final_params, 8, descriptor.ring, cfg.render,
                    (out / "renders").string());

  json summary;
  summary["eta_used"] = run.eta_used;
  summary["probe_executed"] = run.probe.has_value();
  summary["phase_steps"] = {{"probe", run.probe ? cfg.probe.probe_steps : 0},
                            {"edit", cfg.edit_steps},
                            {"refine", cfg.skip_refine
                                           ? 0
                                           : cfg.refine.refine_steps}};
  summary["phase_ms"] = {{"probe", run.timings.probe_ms},
                         {"edit", run.timings.edit_ms},
                         {"refine", run.timings.refine_ms}};
  summary["final_edit_mse"] = run.final_edit_mse;
  summary["final_identity_distance"] = run.final_identity_dist;
  std::ofstream os(out / "summary.json");
  if (!os) throw IoError("cannot write summary.json");
  os << summary.dump(2) << "\n";
  return run;
}

}  // namespace pnr
