#pragma once

#include <string>
#include <vector>

namespace pnr {

// RGB image, row-major, rgb interleaved. Values nominally in [0,1] but the
// container does not clamp; denoiser inputs carry Gaussian noise.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3*width*height

  Image() = default;
  Image(int w, int h, double fill = 0.0);

  double& at(int x, int y, int c) { return data[3 * (y * width + x) + c]; }
  double at(int x, int y, int c) const { return data[3 * (y * width + x) + c]; }

  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height;
  }
  void check_finite() const;
};

Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image operator*(const Image& a, double s);

// Squared L2 norm over all channels.
double sq_norm(const Image& a);

// 8-bit sRGB PNG, values clamped to [0,1].
void write_png(const Image& img, const std::string& path);

}  // namespace pnr
