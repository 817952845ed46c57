#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pnr/vec3.hpp"

namespace pnr {

struct GridDims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  bool operator==(const GridDims&) const = default;
};

struct Bbox {
  Vec3 min{-1.0, -1.0, -1.0};
  Vec3 max{1.0, 1.0, 1.0};

  Vec3 center() const { return (min + max) * 0.5; }
};

// Voxel radiance field stored as raw (pre-activation) parameters.
// Effective density = softplus(raw_density), effective color =
// sigmoid(raw_color), applied at render time, so raw values are free reals
// and linear interpolation never leaves the valid domain.
struct FieldParams {
  GridDims dims;
  Bbox bbox;
  std::vector<float> raw_density;  // nx*ny*nz
  std::vector<float> raw_color;    // 3*nx*ny*nz, rgb interleaved per node

  static FieldParams zeros(GridDims dims, Bbox bbox = {});

  std::size_t param_count() const {
    return raw_density.size() + raw_color.size();
  }
  void check_finite() const;  // throws NumericError on NaN/Inf
};

// Gradient (or velocity) with the same shape as FieldParams, in double.
struct FieldGrad {
  std::vector<double> density;
  std::vector<double> color;

  static FieldGrad zeros_like(const FieldParams& p);
  void add_scaled(const FieldGrad& other, double scale);
  double norm() const;
};

// i.i.d. Gaussian initialization distribution over raw parameters, one
// (mean, std) pair per parameter group.
struct InitDistribution {
  double density_mean = 0.0;
  double density_std = 0.1;
  double color_mean = 0.0;
  double color_std = 0.1;

  InitDistribution() = default;
  InitDistribution(double dm, double ds, double cm, double cs);
};

FieldParams sample_init(const InitDistribution& dist, GridDims dims,
                        std::uint64_t seed, Bbox bbox = {});

// Component-wise (1-eta)*src + eta*rand.
FieldParams lerp_params(const FieldParams& src, const FieldParams& rand,
                        double eta);

// Samples a fresh random field then interpolates toward it from src.
FieldParams perturb(const FieldParams& src, const InitDistribution& dist,
                    double eta, std::uint64_t seed);

// Checkpoint file: magic "PNRF", u32 version=1, u32x3 dims, f64x6 bbox,
// f32 density payload then f32 color payload, all little-endian.
void save_checkpoint(const FieldParams& params, const std::string& path);
FieldParams load_checkpoint(const std::string& path);

void apply_update(FieldParams& params, const FieldGrad& velocity, double rate);

}  // namespace pnr
