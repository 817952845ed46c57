#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pnr/denoiser.hpp"

namespace pnr {

// Annealed noise-level distribution Sigma(tau). Bounds are unitless
// fractions interpolated linearly from the start pair to the end pair over
// [0, anneal_end_fraction * total_steps], clamped afterward; sigma =
// sigma_max * Uniform(f_min(tau), f_max(tau)).
struct NoiseSchedule {
  double f_min_start = 0.75;
  double f_max_start = 0.75;
  double f_min_end = 0.02;
  double f_max_end = 0.4;
  double anneal_end_fraction = 0.8;
  int total_steps = 1500;
  double sigma_max = 0.5;  // pixel units

  void validate() const;
  // Interpolated (f_min, f_max) at step tau.
  std::pair<double, double> bounds_at(int tau) const;
};

NoiseLevel sample_sigma(const NoiseSchedule& sched, int tau,
                        std::mt19937_64& rng);

enum class SigmaWeighting {
  kOne,            // omega(sigma) = 1
  kSnr,            // omega(sigma) = sigma^2 / (s^2 + sigma^2)
};

struct StepConfig {
  double learning_rate = 2.0;
  int views = 4;
  SigmaWeighting weighting = SigmaWeighting::kOne;
  int noise_samples = 1;  // noise draws averaged per view per step
  std::uint64_t seed = 0;
};

struct LossHistory {
  std::vector<double> losses;

  void append(double v) { losses.push_back(v); }
  std::size_t size() const { return losses.size(); }
  void save_csv(const std::string& path) const;
};

// omega(sigma) * (D(z + n; sigma) - z) with n ~ N(0, sigma^2 I); averaged
// over cfg-many noise draws. This is the ascent residual toward the prompt's
// high-density region; steps apply it through the renderer's VJP.
Image sds_image_residual(const PromptSpec& prompt, int view, const Image& z,
                         NoiseLevel sigma, double omega, int noise_samples,
                         std::mt19937_64& rng, double* monitor_loss = nullptr);

// One multi-view distillation step: per view render z_i, sample sigma and
// noise, pull the residual back through the renderer, average over views and
// take an explicit Euler step. Returns the monitoring loss
// (1/N) sum 0.5 ||D(z_i+n) - (z_i+n)||^2.
double mv_step(FieldParams& params, const PromptSpec& prompt,
               const std::vector<Camera>& cameras, const StepConfig& step_cfg,
               const RenderConfig& render_cfg, const NoiseSchedule& sched,
               int tau, std::mt19937_64& rng);

// Velocity-only variant used by the refinement phase: fills `velocity`
// without touching params.
double mv_velocity(const FieldParams& params, const PromptSpec& prompt,
                   const std::vector<Camera>& cameras,
                   const StepConfig& step_cfg, const RenderConfig& render_cfg,
                   const NoiseSchedule& sched, int tau, std::mt19937_64& rng,
                   FieldGrad& velocity);

LossHistory run_distillation(FieldParams& params, const PromptSpec& prompt,
                             const std::vector<Camera>& cameras,
                             const StepConfig& step_cfg,
                             const RenderConfig& render_cfg,
                             const NoiseSchedule& sched, int steps,
                             int tau_offset = 0);

}  // namespace pnr
