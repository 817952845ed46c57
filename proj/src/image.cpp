#include "pnr/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "pnr/errors.hpp"

namespace pnr {

Image::Image(int w, int h, double fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw DimError("image dims must be >= 1");
  data.assign(static_cast<std::size_t>(3) * w * h, fill);
}

void Image::check_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError("non-finite pixel value");
  }
}

Image operator+(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimError("image shape mismatch");
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Image operator-(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimError("image shape mismatch");
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Image operator*(const Image& a, double s) {
  Image out = a;
  for (auto& v : out.data) v *= s;
  return out;
}

double sq_norm(const Image& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return s;
}

namespace {

void put_u32_be(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& os, const char type[4],
                 const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> head;
  put_u32_be(head, static_cast<std::uint32_t>(payload.size()));
  os.write(reinterpret_cast<const char*>(head.data()), 4);
  os.write(type, 4);
  if (!payload.empty()) {
    os.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size()));
  }
  std::uint32_t crc =
      crc32(0, reinterpret_cast<const Bytef*>(type), 4);
  if (!payload.empty()) {
    crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  }
  std::vector<std::uint8_t> tail;
  put_u32_be(tail, crc);
  os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void write_png(const Image& img, const std::string& path) {
  const int w = img.width, h = img.height;
  // Filter type 0 per scanline, 8-bit RGB.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
        raw.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
    }
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw IoError("png compression failed");
  }
  comp.resize(comp_size);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + tmp);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n',
                                        0x1a, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(w));
    put_u32_be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(os, "IHDR", ihdr);
    write_chunk(os, "IDAT", comp);
    write_chunk(os, "IEND", {});
    if (!os) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("rename failed: " + path);
  }
}

}  // namespace pnr
