#include "pnr/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "pnr/errors.hpp"

namespace pnr {

namespace {

double logit(double p) {
  p = std::clamp(p, 1e-4, 1.0 - 1e-4);
  return std::log(p / (1.0 - p));
}

}  // namespace

FieldParams make_blob_field(GridDims dims, const std::vector<Blob>& blobs,
                            Bbox bbox) {
  FieldParams f = FieldParams::zeros(dims, bbox);
  const Vec3 ext = bbox.max - bbox.min;
  for (int iz = 0; iz < dims.nz; ++iz) {
    for (int iy = 0; iy < dims.ny; ++iy) {
      for (int ix = 0; ix < dims.nx; ++ix) {
        const Vec3 p{
            bbox.min.x + (dims.nx > 1 ? ext.x * ix / (dims.nx - 1) : 0.5),
            bbox.min.y + (dims.ny > 1 ? ext.y * iy / (dims.ny - 1) : 0.5),
            bbox.min.z + (dims.nz > 1 ? ext.z * iz / (dims.nz - 1) : 0.5)};
        const std::size_t idx =
            ix + static_cast<std::size_t>(dims.nx) * (iy + dims.ny * iz);
        double best_raw = -8.0;
        const Blob* nearest = nullptr;
        double nearest_rel = 1e30;
        for (const Blob& blob : blobs) {
          const double dist = (p - blob.center).norm();
          // sharp but differentiable shell: ~20 raw units per world unit
          const double raw = std::clamp(20.0 * (blob.radius - dist), -8.0, 8.0);
          best_raw = std::max(best_raw, raw);
          const double rel = dist / blob.radius;
          if (rel < nearest_rel) {
            nearest_rel = rel;
            nearest = &blob;
          }
        }
        f.raw_density[idx] = static_cast<float>(best_raw);
        const double cr = nearest ? nearest->r : 0.5;
        const double cg = nearest ? nearest->g : 0.5;
        const double cb = nearest ? nearest->b : 0.5;
        f.raw_color[3 * idx] = static_cast<float>(logit(cr));
        f.raw_color[3 * idx + 1] = static_cast<float>(logit(cg));
        f.raw_color[3 * idx + 2] = static_cast<float>(logit(cb));
      }
    }
  }
  return f;
}

std::vector<std::string> scenario_names() {
  return {"color_change", "object_added", "object_moved"};
}

Scenario make_scenario(const std::string& name, GridDims dims) {
  Scenario s;
  s.name = name;
  if (name == "color_change") {
    Blob red{{0.0, 0.0, 0.0}, 0.45, 0.85, 0.15, 0.1};
    Blob blue{{0.0, 0.0, 0.0}, 0.45, 0.1, 0.2, 0.85};
    s.source = make_blob_field(dims, {red});
    s.target = make_blob_field(dims, {blue});
  } else if (name == "object_added") {
    Blob main{{-0.35, 0.0, 0.0}, 0.38, 0.2, 0.7, 0.25};
    Blob extra{{0.42, 0.0, 0.1}, 0.28, 0.85, 0.75, 0.15};
    s.source = make_blob_field(dims, {main});
    s.target = make_blob_field(dims, {main, extra});
  } else if (name == "object_moved") {
    Blob at_a{{-0.42, 0.0, 0.0}, 0.34, 0.8, 0.35, 0.1};
    Blob at_b{{0.42, 0.0, 0.0}, 0.34, 0.8, 0.35, 0.1};
    s.source = make_blob_field(dims, {at_a});
    s.target = make_blob_field(dims, {at_b});
  } else {
    throw ConfigError("unknown scenario: " + name);
  }
  return s;
}

}  // namespace pnr
