#pragma once

#include <string>
#include <vector>

#include "pnr/distill.hpp"

namespace pnr {

struct RefineConfig {
  double lambda_l1 = 300.0;
  double lambda_p = 30000.0;
  int refine_steps = 1000;
  double decay_end_fraction = 0.5;
  int pyramid_levels = 4;

  void validate() const;
};

// Gaussian pyramid: level 0 is the input, each level a blurred copy at half
// (floor, min 1) resolution.
std::vector<Image> gaussian_pyramid(const Image& img, int levels);

// lambda_l1 * mean|a-b| + lambda_p * mean over levels of mean|pyr(a)-pyr(b)|.
double identity_distance(const Image& a, const Image& b,
                         const RefineConfig& cfg);

// Distance plus its gradient w.r.t. `a` (b held constant).
std::pair<double, Image> identity_distance_grad(const Image& a, const Image& b,
                                                const RefineConfig& cfg);

// Descent direction on d(render(params), render(src)) w.r.t. params: the
// negated gradient, so following it reduces the identity distance.
FieldGrad ipg_grad(const FieldParams& params, const FieldParams& src,
                   const Camera& cam, const RenderConfig& render_cfg,
                   const RefineConfig& cfg);

struct RefineDiagnostics {
  std::vector<double> monitor_loss;
  std::vector<double> identity_dist;
  std::vector<double> lambda_scale;

  void save_csv(const std::string& path) const;
};

// Edit velocity (same schedule, continued past the edit phase) plus the
// identity-preserving velocity from one random orbit camera, with lambda
// weights scaled by max(0, 1 - tau_refine / (decay_end_fraction *
// refine_steps)); single Euler update.
double refine_step(FieldParams& params, const FieldParams& src,
                   const PromptSpec& prompt,
                   const std::vector<Camera>& cameras,
                   const StepConfig& step_cfg, const RenderConfig& render_cfg,
                   const RefineConfig& refine_cfg, const NoiseSchedule& sched,
                   int tau, int tau_refine, std::mt19937_64& rng,
                   RefineDiagnostics* diag = nullptr);

RefineDiagnostics run_refinement(FieldParams& params, const FieldParams& src,
                                 const PromptSpec& prompt,
                                 const std::vector<Camera>& cameras,
                                 const StepConfig& step_cfg,
                                 const RenderConfig& render_cfg,
                                 const RefineConfig& refine_cfg,
                                 const NoiseSchedule& sched,
                                 int tau_offset);

}  // namespace pnr
