#include "pnr/camera.hpp"

#include <cmath>

#include "pnr/errors.hpp"

namespace pnr {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void Camera::validate() const {
  if (!(fov_y > 0.0 && fov_y < kPi)) throw ConfigError("fov out of (0, pi)");
  if (width < 1 || height < 1) throw DimError("camera resolution must be >= 1");
  if ((position - target).norm() == 0.0) {
    throw ConfigError("camera position equals target");
  }
}

Vec3 Camera::ray_direction(int x, int y) const {
  const Vec3 forward = (target - position).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 cam_up = right.cross(forward);
  const double tan_half = std::tan(0.5 * fov_y);
  const double aspect = static_cast<double>(width) / height;
  const double u = ((x + 0.5) / width * 2.0 - 1.0) * aspect * tan_half;
  const double v = (1.0 - (y + 0.5) / height * 2.0) * tan_half;
  return (forward + right * u + cam_up * v).normalized();
}

std::vector<Camera> orbit_cameras(int n, double radius, double elevation,
                                  int width, int height, Vec3 center) {
  if (n < 1) throw ConfigError("orbit camera count must be >= 1");
  std::vector<Camera> cams;
  cams.reserve(n);
  const double ce = std::cos(elevation), se = std::sin(elevation);
  for (int i = 0; i < n; ++i) {
    const double az = 2.0 * kPi * i / n;
    Camera c;
    c.position = center + Vec3{radius * ce * std::cos(az),
                               radius * ce * std::sin(az), radius * se};
    c.target = center;
    c.up = Vec3{0.0, 0.0, 1.0};
    c.width = width;
    c.height = height;
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

}  // namespace pnr
