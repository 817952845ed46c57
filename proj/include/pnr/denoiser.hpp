#pragma once

#include <string>
#include <vector>

#include "pnr/camera.hpp"
#include "pnr/field.hpp"
#include "pnr/image.hpp"
#include "pnr/render.hpp"

namespace pnr {

struct NoiseLevel {
  double sigma = 0.0;

  NoiseLevel() = default;
  explicit NoiseLevel(double s);
};

// Target distribution for one prompt: a Gaussian mixture over images per
// view, shared across views because every component is a render of one
// consistent target field.
struct MixtureComponent {
  double weight = 1.0;
  Image target;
};

struct PromptSpec {
  std::string prompt_id;
  // per_view[i] holds the mixture for view index i; weights sum to 1.
  std::vector<std::vector<MixtureComponent>> per_view;
  double prior_std = 0.05;

  int view_count() const { return static_cast<int>(per_view.size()); }
  void validate() const;
};

// Exact posterior mean E[x | y] under prior sum_k w_k N(mu_k, s^2 I) and
// observation noise N(0, sigma^2 I). Satisfies D(y;sigma) = y +
// sigma^2 grad_y log p_sigma(y).
Image denoise(const PromptSpec& prompt, int view, const Image& y,
              NoiseLevel sigma);

std::vector<Image> mv_denoise(const PromptSpec& prompt,
                              const std::vector<int>& views,
                              const std::vector<Image>& ys, NoiseLevel sigma);

// Log density of the sigma-smoothed mixture at y (used by score checks).
double smoothed_log_density(const PromptSpec& prompt, int view, const Image& y,
                            NoiseLevel sigma);

// Builds a single-component prompt whose per-view targets are renders of the
// target field from the given cameras.
PromptSpec make_prompt_from_field(const FieldParams& target,
                                  const std::vector<Camera>& cameras,
                                  const RenderConfig& cfg, double s,
                                  const std::string& prompt_id = "edit");

// Multi-component variant: several target fields with mixture weights
// (normalized internally).
PromptSpec make_prompt_from_fields(
    const std::vector<FieldParams>& targets, const std::vector<double>& weights,
    const std::vector<Camera>& cameras, const RenderConfig& cfg, double s,
    const std::string& prompt_id = "edit");

}  // namespace pnr
