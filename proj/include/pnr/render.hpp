#pragma once

#include <array>
#include <functional>
#include <utility>

#include "pnr/camera.hpp"
#include "pnr/field.hpp"
#include "pnr/image.hpp"

namespace pnr {

struct RenderConfig {
  int samples_per_ray = 32;
  std::array<double, 3> background = {1.0, 1.0, 1.0};
  double near_clip = 0.5;
  double far_clip = 3.5;
  bool parallel = true;  // OpenMP over scanlines; serial path kept as reference

  void validate() const;
};

// Emission-absorption volume rendering along uniform ray samples:
// alpha_i = 1 - exp(-density_i * delta), T_i = prod_{j<i} (1 - alpha_j),
// pixel = sum T_i alpha_i c_i + T_final * background.
Image render(const FieldParams& params, const Camera& cam,
             const RenderConfig& cfg);

// Straightforward scanline loop, no threading. The parallel driver must
// produce bit-identical images (pixels are independent).
Image render_serial(const FieldParams& params, const Camera& cam,
                    const RenderConfig& cfg);

// Vector-Jacobian product: image_grad^T * (d image / d raw params).
FieldGrad apply_image_grad(const FieldParams& params, const Camera& cam,
                           const RenderConfig& cfg, const Image& image_grad);

FieldGrad apply_image_grad_serial(const FieldParams& params, const Camera& cam,
                                  const RenderConfig& cfg,
                                  const Image& image_grad);

// Maps (render, target) to (loss, dloss/drender).
using PixelLoss =
    std::function<std::pair<double, Image>(const Image&, const Image&)>;

// 0.5 * ||render - target||^2 and its image gradient (render - target).
std::pair<double, Image> l2_pixel_loss(const Image& render_out,
                                       const Image& target);

// Loss value plus exact reverse-mode gradient w.r.t. every raw parameter.
std::pair<double, FieldGrad> render_loss_grad(const FieldParams& params,
                                              const Camera& cam,
                                              const RenderConfig& cfg,
                                              const PixelLoss& loss,
                                              const Image& target);

}  // namespace pnr
