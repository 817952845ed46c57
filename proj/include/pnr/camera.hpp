#pragma once

#include <vector>

#include "pnr/vec3.hpp"

namespace pnr {

struct Camera {
  Vec3 position;
  Vec3 target;
  Vec3 up{0.0, 0.0, 1.0};
  double fov_y = 0.8;  // radians
  int width = 64;
  int height = 64;

  void validate() const;

  // Unit direction through pixel center (x, y).
  Vec3 ray_direction(int x, int y) const;

  Camera at_resolution(int w, int h) const {
    Camera c = *this;
    c.width = w;
    c.height = h;
    return c;
  }
};

// n cameras evenly spaced in azimuth on a circle of the given radius around
// `center`, raised by `elevation` radians, all looking at `center`.
std::vector<Camera> orbit_cameras(int n, double radius, double elevation,
                                  int width, int height,
                                  Vec3 center = {0.0, 0.0, 0.0});

}  // namespace pnr
