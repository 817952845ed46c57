#include "pnr/render.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pnr/errors.hpp"

namespace pnr {

void RenderConfig::validate() const {
  if (samples_per_ray < 2) throw ConfigError("samples_per_ray must be >= 2");
  if (!(near_clip < far_clip)) throw ConfigError("near must be < far");
  for (double b : background) {
    if (b < 0.0 || b > 1.0) throw ConfigError("background outside [0,1]");
  }
}

namespace {

double softplus(double x) {
  // log(1+exp(x)) without overflow
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Trilinear stencil: 8 flat node indices + weights for a world point.
struct Stencil {
  std::size_t idx[8];
  double w[8];
};

struct GridMap {
  GridDims dims;
  Vec3 origin, scale;  // grid coords = (p - origin) * scale, per axis

  explicit GridMap(const FieldParams& p) {
    dims = p.dims;
    origin = p.bbox.min;
    const Vec3 ext = p.bbox.max - p.bbox.min;
    scale = {dims.nx > 1 ? (dims.nx - 1) / ext.x : 0.0,
             dims.ny > 1 ? (dims.ny - 1) / ext.y : 0.0,
             dims.nz > 1 ? (dims.nz - 1) / ext.z : 0.0};
  }

  Stencil stencil(const Vec3& p) const {
    auto axis = [](double g, int n, int& i0, double& f) {
      if (n == 1) {
        i0 = 0;
        f = 0.0;
        return;
      }
      g = std::fmin(std::fmax(g, 0.0), static_cast<double>(n - 1));
      i0 = static_cast<int>(g);
      if (i0 > n - 2) i0 = n - 2;
      f = g - i0;
    };
    int ix, iy, iz;
    double fx, fy, fz;
    axis((p.x - origin.x) * scale.x, dims.nx, ix, fx);
    axis((p.y - origin.y) * scale.y, dims.ny, iy, fy);
    axis((p.z - origin.z) * scale.z, dims.nz, iz, fz);
    const std::size_t nx = dims.nx, nxy = nx * dims.ny;
    Stencil s;
    int k = 0;
    for (int dz = 0; dz < 2; ++dz) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int jx = std::min(ix + dx, dims.nx - 1);
          const int jy = std::min(iy + dy, dims.ny - 1);
          const int jz = std::min(iz + dz, dims.nz - 1);
          s.idx[k] = jx + nx * jy + nxy * jz;
          s.w[k] = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) *
                   (dz ? fz : 1.0 - fz);
          ++k;
        }
      }
    }
    return s;
  }
};

struct SampleRecord {
  Stencil st;
  double trans;     // T_i before this sample
  double one_m_a;   // exp(-sigma*delta) = 1 - alpha
  double alpha;
  double act_d;     // sigmoid(raw_d interp): d sigma / d raw
  double c[3];      // activated color
};

// Marches one ray. When `records` is non-null, fills per-sample state for the
// backward pass and returns the final transmittance through *t_final.
void march_ray(const FieldParams& params, const GridMap& map, const Vec3& org,
               const Vec3& dir, const RenderConfig& cfg, double pixel[3],
               std::vector<SampleRecord>* records, double* t_final) {
  const int S = cfg.samples_per_ray;
  const double delta = (cfg.far_clip - cfg.near_clip) / S;
  double trans = 1.0;
  pixel[0] = pixel[1] = pixel[2] = 0.0;
  for (int i = 0; i < S; ++i) {
    const double t = cfg.near_clip + (i + 0.5) * delta;
    const Vec3 p = org + dir * t;
    const Stencil st = map.stencil(p);
    double raw_d = 0.0, raw_c[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < 8; ++k) {
      raw_d += st.w[k] * params.raw_density[st.idx[k]];
      const std::size_t b = 3 * st.idx[k];
      raw_c[0] += st.w[k] * params.raw_color[b];
      raw_c[1] += st.w[k] * params.raw_color[b + 1];
      raw_c[2] += st.w[k] * params.raw_color[b + 2];
    }
    const double sigma = softplus(raw_d);
    double a = sigma * delta;
    if (a > 700.0) a = 700.0;
    const double one_m_a = std::exp(-a);
    const double alpha = -std::expm1(-a);
    double c[3];
    for (int ch = 0; ch < 3; ++ch) c[ch] = sigmoid(raw_c[ch]);
    const double w = trans * alpha;
    for (int ch = 0; ch < 3; ++ch) pixel[ch] += w * c[ch];
    if (records) {
      SampleRecord r;
      r.st = st;
      r.trans = trans;
      r.one_m_a = one_m_a;
      r.alpha = alpha;
      r.act_d = sigmoid(raw_d);
      r.c[0] = c[0];
      r.c[1] = c[1];
      r.c[2] = c[2];
      records->push_back(r);
    }
    trans *= one_m_a;
  }
  for (int ch = 0; ch < 3; ++ch) pixel[ch] += trans * cfg.background[ch];
  if (t_final) *t_final = trans;
}

// Backpropagates a pixel gradient G through one ray into `grad`.
void backprop_ray(const std::vector<SampleRecord>& records, double t_final,
                  const RenderConfig& cfg, const double g[3],
                  FieldGrad& grad) {
  const double delta = (cfg.far_clip - cfg.near_clip) / cfg.samples_per_ray;
  // suffix = sum_{j>i} T_j alpha_j (G . c_j) + T_final (G . bg)
  double suffix = t_final * (g[0] * cfg.background[0] +
                             g[1] * cfg.background[1] +
                             g[2] * cfg.background[2]);
  for (int i = static_cast<int>(records.size()) - 1; i >= 0; --i) {
    const SampleRecord& r = records[i];
    const double dot_gc = g[0] * r.c[0] + g[1] * r.c[1] + g[2] * r.c[2];
    const double d_alpha =
        r.trans * dot_gc - (r.one_m_a > 0.0 ? suffix / r.one_m_a : 0.0);
    suffix += r.trans * r.alpha * dot_gc;
    // alpha = 1 - exp(-sigma*delta): d alpha/d sigma = delta*exp(-sigma*delta)
    const double d_raw_d = d_alpha * delta * r.one_m_a * r.act_d;
    for (int k = 0; k < 8; ++k) {
      grad.density[r.st.idx[k]] += r.st.w[k] * d_raw_d;
      const std::size_t b = 3 * r.st.idx[k];
      for (int ch = 0; ch < 3; ++ch) {
        const double d_c = g[ch] * r.trans * r.alpha;
        grad.color[b + ch] +=
            r.st.w[k] * d_c * r.c[ch] * (1.0 - r.c[ch]);
      }
    }
  }
}

Image render_impl(const FieldParams& params, const Camera& cam,
                  const RenderConfig& cfg, bool parallel) {
  cam.validate();
  cfg.validate();
  params.check_finite();
  GridMap map(params);
  Image img(cam.width, cam.height);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double px[3];
      march_ray(params, map, cam.position, cam.ray_direction(x, y), cfg, px,
                nullptr, nullptr);
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = px[ch];
    }
  }
  return img;
}

FieldGrad vjp_impl(const FieldParams& params, const Camera& cam,
                   const RenderConfig& cfg, const Image& image_grad,
                   bool parallel) {
  cam.validate();
  cfg.validate();
  if (image_grad.width != cam.width || image_grad.height != cam.height) {
    throw DimError("image_grad resolution does not match camera");
  }
  GridMap map(params);
  FieldGrad total = FieldGrad::zeros_like(params);
#ifdef _OPENMP
  if (parallel) {
    const int nthreads = omp_get_max_threads();
    std::vector<FieldGrad> partial(nthreads, FieldGrad::zeros_like(params));
#pragma omp parallel
    {
      const int tid = omp_get_thread_num();
      std::vector<SampleRecord> records;
      records.reserve(cfg.samples_per_ray);
#pragma omp for schedule(static)
      for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
          double px[3], t_final;
          records.clear();
          march_ray(params, map, cam.position, cam.ray_direction(x, y), cfg,
                    px, &records, &t_final);
          const double g[3] = {image_grad.at(x, y, 0), image_grad.at(x, y, 1),
                               image_grad.at(x, y, 2)};
          backprop_ray(records, t_final, cfg, g, partial[tid]);
        }
      }
    }
    // Fixed reduction order over thread buffers keeps results reproducible
    // for a given thread count.
    for (const FieldGrad& p : partial) total.add_scaled(p, 1.0);
    return total;
  }
#else
  (void)parallel;
#endif
  std::vector<SampleRecord> records;
  records.reserve(cfg.samples_per_ray);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double px[3], t_final;
      records.clear();
      march_ray(params, map, cam.position, cam.ray_direction(x, y), cfg, px,
                &records, &t_final);
      const double g[3] = {image_grad.at(x, y, 0), image_grad.at(x, y, 1),
                           image_grad.at(x, y, 2)};
      backprop_ray(records, t_final, cfg, g, total);
    }
  }
  return total;
}

}  // namespace

Image render(const FieldParams& params, const Camera& cam,
             const RenderConfig& cfg) {
  return render_impl(params, cam, cfg, cfg.parallel);
}

Image render_serial(const FieldParams& params, const Camera& cam,
                    const RenderConfig& cfg) {
  return render_impl(params, cam, cfg, false);
}

FieldGrad apply_image_grad(const FieldParams& params, const Camera& cam,
                           const RenderConfig& cfg, const Image& image_grad) {
  return vjp_impl(params, cam, cfg, image_grad, cfg.parallel);
}

FieldGrad apply_image_grad_serial(const FieldParams& params, const Camera& cam,
                                  const RenderConfig& cfg,
                                  const Image& image_grad) {
  return vjp_impl(params, cam, cfg, image_grad, false);
}

std::pair<double, Image> l2_pixel_loss(const Image& render_out,
                                       const Image& target) {
  if (!render_out.same_shape(target)) throw DimError("target shape mismatch");
  Image diff = render_out - target;
  return {0.5 * sq_norm(diff), diff};
}

std::pair<double, FieldGrad> render_loss_grad(const FieldParams& params,
                                              const Camera& cam,
                                              const RenderConfig& cfg,
                                              const PixelLoss& loss,
                                              const Image& target) {
  Image out = render(params, cam, cfg);
  auto [value, image_grad] = loss(out, target);
  FieldGrad g = apply_image_grad(params, cam, cfg, image_grad);
  return {value, std::move(g)};
}

}  // namespace pnr
