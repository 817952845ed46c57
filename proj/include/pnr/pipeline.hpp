#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pnr/probe.hpp"
#include "pnr/refine.hpp"
#include "pnr/scenarios.hpp"

namespace pnr {

struct CameraRing {
  int count = 4;
  double radius = 2.5;
  double elevation = 0.35;
  int width = 64;
  int height = 64;

  std::vector<Camera> build(Vec3 center = {0.0, 0.0, 0.0}) const;
  std::vector<Camera> build_at(int w, int h,
                               Vec3 center = {0.0, 0.0, 0.0}) const;
};

// On-disk stand-in for a text prompt: target checkpoints with mixture
// weights plus the camera ring the targets are rendered from.
struct PromptDescriptor {
  std::string prompt_id = "edit";
  double prior_std = 0.05;
  std::vector<std::string> checkpoints;
  std::vector<double> weights;
  CameraRing ring;

  void save_json(const std::string& path) const;
  static PromptDescriptor load_json(const std::string& path);

  // Loads the target fields and renders per-view mixtures at (w, h).
  PromptSpec realize(const RenderConfig& cfg, int w, int h) const;
};

struct RunConfig {
  GridDims dims{16, 16, 16};
  Bbox bbox;
  RenderConfig render;
  CameraRing ring;
  NoiseSchedule schedule;
  StepConfig step;
  ProbeConfig probe;
  RefineConfig refine;
  InitDistribution init;
  int edit_steps = 1500;
  double resolution_milestone_fraction = 0.5;
  std::optional<double> eta_override;
  bool skip_refine = false;
  std::uint64_t perturb_seed = 1;

  std::string source_checkpoint;
  std::string prompt_path;
  std::string out_dir;

  void validate() const;
  static RunConfig load_json(const std::string& path);
  void apply_json(const std::string& path);  // merge a config document
};

struct PhaseTimings {
  double probe_ms = 0.0;
  double edit_ms = 0.0;
  double refine_ms = 0.0;
};

struct EditRun {
  std::optional<ProbeReport> probe;
  double eta_used = 0.0;
  FieldParams source;
  FieldParams perturbed;
  FieldParams final_params;
  LossHistory edit_history;
  RefineDiagnostics refine_diag;
  PhaseTimings timings;
  double final_edit_mse = 0.0;       // render-vs-target MSE, full resolution
  double final_identity_dist = 0.0;  // mean identity distance to source views
};

struct FitResult {
  FieldParams params;
  double final_mse = 0.0;
  int steps_run = 0;
  bool converged = false;
};

// Plain L2 fit of a fresh field to target views (Adam step rule; the
// distillation core itself stays on explicit Euler).
FitResult fit_field(const std::vector<Image>& targets,
                    const std::vector<Camera>& cameras,
                    const RenderConfig& render_cfg, GridDims dims, Bbox bbox,
                    int max_steps, double rate, double mse_threshold,
                    std::uint64_t seed);

// probe -> perturb -> edit (half resolution for the first milestone
// fraction of steps) -> refine. Pure in-memory variant used by tests.
EditRun run_edit(const FieldParams& source, const PromptDescriptor& prompt,
                 const RunConfig& cfg);

// Full-run variant: loads inputs from cfg paths, writes checkpoints, traces,
// orbit renders, and summary JSON into cfg.out_dir.
EditRun run_edit_to_disk(const RunConfig& cfg);

// Mean per-value squared error between renders of params and the prompt's
// full-resolution targets (first mixture component per view).
double edit_target_mse(const FieldParams& params,
                       const std::vector<Camera>& cameras,
                       const RenderConfig& render_cfg,
                       const PromptSpec& prompt);

void render_orbit_pngs(const FieldParams& params, int n_views,
                       const CameraRing& ring, const RenderConfig& render_cfg,
                       const std::string& out_dir);

}  // namespace pnr
