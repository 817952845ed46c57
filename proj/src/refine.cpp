#include "pnr/refine.hpp"

#include <cmath>
#include <fstream>

#include "pnr/errors.hpp"

namespace pnr {

void RefineConfig::validate() const {
  if (lambda_l1 < 0.0 || lambda_p < 0.0) {
    throw ConfigError("lambda weights must be >= 0");
  }
  if (refine_steps < 0) throw ConfigError("refine_steps must be >= 0");
  if (!(decay_end_fraction > 0.0 && decay_end_fraction <= 1.0)) {
    throw ConfigError("decay_end_fraction must lie in (0,1]");
  }
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
}

namespace {

constexpr double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                               1.0 / 16};

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

Image blur(const Image& in) {
  const int w = in.width, h = in.height;
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int t = -2; t <= 2; ++t) {
          s += kKernel[t + 2] * in.at(clampi(x + t, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = s;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int t = -2; t <= 2; ++t) {
          s += kKernel[t + 2] * tmp.at(x, clampi(y + t, 0, h - 1), c);
        }
        out.at(x, y, c) = s;
      }
    }
  }
  return out;
}

// Exact adjoint of blur() including the clamped borders.
Image blur_transpose(const Image& g) {
  const int w = g.width, h = g.height;
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = g.at(x, y, c);
        for (int t = -2; t <= 2; ++t) {
          tmp.at(x, clampi(y + t, 0, h - 1), c) += kKernel[t + 2] * v;
        }
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = tmp.at(x, y, c);
        for (int t = -2; t <= 2; ++t) {
          out.at(clampi(x + t, 0, w - 1), y, c) += kKernel[t + 2] * v;
        }
      }
    }
  }
  return out;
}

Image downsample(const Image& in) {
  const int w = std::max(1, in.width / 2), h = std::max(1, in.height / 2);
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = in.at(2 * x, 2 * y, c);
    }
  }
  return out;
}

Image downsample_transpose(const Image& g, int in_w, int in_h) {
  Image out(in_w, in_h);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(2 * x, 2 * y, c) = g.at(x, y, c);
    }
  }
  return out;
}

double mean_abs_diff(const Image& a, const Image& b, Image* sign_grad) {
  double s = 0.0;
  const double inv = 1.0 / a.data.size();
  if (sign_grad) *sign_grad = Image(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += std::abs(d);
    if (sign_grad) {
      sign_grad->data[i] = (d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0));
    }
  }
  return s * inv;
}

}  // namespace

std::vector<Image> gaussian_pyramid(const Image& img, int levels) {
  if (levels < 1) throw ConfigError("pyramid levels must be >= 1");
  std::vector<Image> pyr;
  pyr.reserve(levels);
  pyr.push_back(img);
  for (int l = 1; l < levels; ++l) {
    pyr.push_back(downsample(blur(pyr.back())));
  }
  return pyr;
}

double identity_distance(const Image& a, const Image& b,
                         const RefineConfig& cfg) {
  return identity_distance_grad(a, b, cfg).first;
}

std::pair<double, Image> identity_distance_grad(const Image& a, const Image& b,
                                                const RefineConfig& cfg) {
  if (!a.same_shape(b)) throw DimError("identity_distance: shape mismatch");
  cfg.validate();
  const int L = cfg.pyramid_levels;
  const auto pa = gaussian_pyramid(a, L);
  const auto pb = gaussian_pyramid(b, L);

  double dist = 0.0;
  std::vector<Image> level_grads(L);
  {
    Image g0;
    dist += cfg.lambda_l1 * mean_abs_diff(a, b, &g0);
    level_grads[0] = g0 * cfg.lambda_l1;
  }
  for (int l = 0; l < L; ++l) {
    Image gl;
    const double m = mean_abs_diff(pa[l], pb[l], &gl);
    dist += cfg.lambda_p * m / L;
    level_grads[l] = (l == 0) ? level_grads[l] + gl * (cfg.lambda_p / L)
                              : gl * (cfg.lambda_p / L);
  }

  // Backpropagate level gradients to the input resolution.
  Image grad = level_grads[L - 1];
  for (int l = L - 1; l >= 1; --l) {
    grad = blur_transpose(
        downsample_transpose(grad, pa[l - 1].width, pa[l - 1].height));
    grad = grad + level_grads[l - 1];
  }
  return {dist, grad};
}

FieldGrad ipg_grad(const FieldParams& params, const FieldParams& src,
                   const Camera& cam, const RenderConfig& render_cfg,
                   const RefineConfig& cfg) {
  if (!(params.dims == src.dims)) throw DimError("ipg_grad: dims mismatch");
  Image src_render = render(src, cam, render_cfg);
  auto loss = [&cfg](const Image& out, const Image& target) {
    auto [d, g] = identity_distance_grad(out, target, cfg);
    // descend on d
    return std::make_pair(d, g * -1.0);
  };
  return render_loss_grad(params, cam, render_cfg, loss, src_render).second;
}

void RefineDiagnostics::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "step,monitor_loss,identity_distance,lambda_scale\n";
  for (std::size_t i = 0; i < monitor_loss.size(); ++i) {
    os << i << "," << monitor_loss[i] << "," << identity_dist[i] << ","
       << lambda_scale[i] << "\n";
  }
}

double refine_step(FieldParams& params, const FieldParams& src,
                   const PromptSpec& prompt,
                   const std::vector<Camera>& cameras,
                   const StepConfig& step_cfg, const RenderConfig& render_cfg,
                   const RefineConfig& refine_cfg, const NoiseSchedule& sched,
                   int tau, int tau_refine, std::mt19937_64& rng,
                   RefineDiagnostics* diag) {
  refine_cfg.validate();
  FieldGrad velocity;
  const double monitor = mv_velocity(params, prompt, cameras, step_cfg,
                                     render_cfg, sched, tau, rng, velocity);

  const double denom = refine_cfg.decay_end_fraction * refine_cfg.refine_steps;
  const double scale =
      denom > 0.0 ? std::max(0.0, 1.0 - tau_refine / denom) : 0.0;

  std::uniform_int_distribution<std::size_t> pick(0, cameras.size() - 1);
  const Camera& cam = cameras[pick(rng)];
  double identity = 0.0;
  if (scale > 0.0 && (refine_cfg.lambda_l1 > 0.0 || refine_cfg.lambda_p > 0.0)) {
    RefineConfig scaled = refine_cfg;
    scaled.lambda_l1 *= scale;
    scaled.lambda_p *= scale;
    velocity.add_scaled(ipg_grad(params, src, cam, render_cfg, scaled), 1.0);
  }
  identity = identity_distance(render(params, cam, render_cfg),
                               render(src, cam, render_cfg), refine_cfg);

  apply_update(params, velocity, step_cfg.learning_rate);
  params.check_finite();

  if (diag) {
    diag->monitor_loss.push_back(monitor);
    diag->identity_dist.push_back(identity);
    diag->lambda_scale.push_back(scale);
  }
  return monitor;
}

RefineDiagnostics run_refinement(FieldParams& params, const FieldParams& src,
                                 const PromptSpec& prompt,
                                 const std::vector<Camera>& cameras,
                                 const StepConfig& step_cfg,
                                 const RenderConfig& render_cfg,
                                 const RefineConfig& refine_cfg,
                                 const NoiseSchedule& sched, int tau_offset) {
  RefineDiagnostics diag;
  std::mt19937_64 rng(step_cfg.seed);
  for (int t = 0; t < refine_cfg.refine_steps; ++t) {
    refine_step(params, src, prompt, cameras, step_cfg, render_cfg, refine_cfg,
                sched, tau_offset + t, t, rng, &diag);
  }
  return diag;
}

}  // namespace pnr
