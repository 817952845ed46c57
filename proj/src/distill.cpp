#include "pnr/distill.hpp"

#include <cmath>
#include <fstream>

#include "pnr/errors.hpp"

namespace pnr {

void NoiseSchedule::validate() const {
  auto ok = [](double lo, double hi) {
    return 0.0 <= lo && lo <= hi && hi <= 1.0;
  };
  if (!ok(f_min_start, f_max_start) || !ok(f_min_end, f_max_end)) {
    throw ConfigError("schedule bounds must satisfy 0 <= min <= max <= 1");
  }
  if (f_min_end > f_min_start || f_max_end > f_max_start) {
    throw ConfigError("schedule bounds must be non-increasing in tau");
  }
  if (!(anneal_end_fraction > 0.0 && anneal_end_fraction <= 1.0)) {
    throw ConfigError("anneal_end_fraction must lie in (0,1]");
  }
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (sigma_max <= 0.0) throw ConfigError("sigma_max must be > 0");
}

std::pair<double, double> NoiseSchedule::bounds_at(int tau) const {
  const double end = anneal_end_fraction * total_steps;
  double t = tau / end;
  if (t > 1.0) t = 1.0;
  if (t < 0.0) t = 0.0;
  return {f_min_start + t * (f_min_end - f_min_start),
          f_max_start + t * (f_max_end - f_max_start)};
}

NoiseLevel sample_sigma(const NoiseSchedule& sched, int tau,
                        std::mt19937_64& rng) {
  auto [lo, hi] = sched.bounds_at(tau);
  if (lo == hi) return NoiseLevel(sched.sigma_max * lo);
  std::uniform_real_distribution<double> u(lo, hi);
  return NoiseLevel(sched.sigma_max * u(rng));
}

void LossHistory::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    os << i << "," << losses[i] << "\n";
  }
}

namespace {

double omega_of(SigmaWeighting mode, double sigma, double prior_std) {
  switch (mode) {
    case SigmaWeighting::kSnr: {
      const double s2 = prior_std * prior_std;
      const double g2 = sigma * sigma;
      return g2 / (s2 + g2);
    }
    case SigmaWeighting::kOne:
    default:
      return 1.0;
  }
}

}  // namespace

Image sds_image_residual(const PromptSpec& prompt, int view, const Image& z,
                         NoiseLevel sigma, double omega, int noise_samples,
                         std::mt19937_64& rng, double* monitor_loss) {
  if (noise_samples < 1) throw ConfigError("noise_samples must be >= 1");
  Image residual(z.width, z.height);
  double loss = 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < noise_samples; ++rep) {
    Image y = z;
    if (sigma.sigma > 0.0) {
      for (auto& v : y.data) v += sigma.sigma * gauss(rng);
    }
    Image d = denoise(prompt, view, y, sigma);
    for (std::size_t i = 0; i < z.data.size(); ++i) {
      residual.data[i] += omega * (d.data[i] - z.data[i]);
      const double r = d.data[i] - y.data[i];
      loss += 0.5 * r * r;
    }
  }
  const double inv = 1.0 / noise_samples;
  for (auto& v : residual.data) v *= inv;
  if (monitor_loss) *monitor_loss = loss * inv;
  return residual;
}

double mv_velocity(const FieldParams& params, const PromptSpec& prompt,
                   const std::vector<Camera>& cameras,
                   const StepConfig& step_cfg, const RenderConfig& render_cfg,
                   const NoiseSchedule& sched, int tau, std::mt19937_64& rng,
                   FieldGrad& velocity) {
  if (static_cast<int>(cameras.size()) != prompt.view_count()) {
    throw ConfigError("camera count does not match prompt view count");
  }
  const int n_views = static_cast<int>(cameras.size());
  velocity = FieldGrad::zeros_like(params);
  double total_loss = 0.0;
  for (int i = 0; i < n_views; ++i) {
    Image z = render(params, cameras[i], render_cfg);
    NoiseLevel sigma = sample_sigma(sched, tau, rng);
    const double omega =
        omega_of(step_cfg.weighting, sigma.sigma, prompt.prior_std);
    double loss_i = 0.0;
    Image residual = sds_image_residual(prompt, i, z, sigma, omega,
                                        step_cfg.noise_samples, rng, &loss_i);
    FieldGrad g = apply_image_grad(params, cameras[i], render_cfg, residual);
    velocity.add_scaled(g, 1.0 / n_views);
    total_loss += loss_i / n_views;
  }
  return total_loss;
}

double mv_step(FieldParams& params, const PromptSpec& prompt,
               const std::vector<Camera>& cameras, const StepConfig& step_cfg,
               const RenderConfig& render_cfg, const NoiseSchedule& sched,
               int tau, std::mt19937_64& rng) {
  FieldGrad velocity;
  const double loss = mv_velocity(params, prompt, cameras, step_cfg,
                                  render_cfg, sched, tau, rng, velocity);
  apply_update(params, velocity, step_cfg.learning_rate);
  params.check_finite();
  return loss;
}

LossHistory run_distillation(FieldParams& params, const PromptSpec& prompt,
                             const std::vector<Camera>& cameras,
                             const StepConfig& step_cfg,
                             const RenderConfig& render_cfg,
                             const NoiseSchedule& sched, int steps,
                             int tau_offset) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  std::mt19937_64 rng(step_cfg.seed);
  LossHistory history;
  for (int t = 0; t < steps; ++t) {
    history.append(mv_step(params, prompt, cameras, step_cfg, render_cfg,
                           sched, tau_offset + t, rng));
  }
  return history;
}

}  // namespace pnr
