#include "pnr/field.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "pnr/errors.hpp"

namespace pnr {

namespace {

void check_dims(GridDims dims) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw DimError("grid dims must be positive");
  }
}

}  // namespace

FieldParams FieldParams::zeros(GridDims dims, Bbox bbox) {
  check_dims(dims);
  FieldParams p;
  p.dims = dims;
  p.bbox = bbox;
  p.raw_density.assign(dims.voxels(), 0.0f);
  p.raw_color.assign(3 * dims.voxels(), 0.0f);
  return p;
}

void FieldParams::check_finite() const {
  for (float v : raw_density) {
    if (!std::isfinite(v)) throw NumericError("non-finite density parameter");
  }
  for (float v : raw_color) {
    if (!std::isfinite(v)) throw NumericError("non-finite color parameter");
  }
}

FieldGrad FieldGrad::zeros_like(const FieldParams& p) {
  FieldGrad g;
  g.density.assign(p.raw_density.size(), 0.0);
  g.color.assign(p.raw_color.size(), 0.0);
  return g;
}

void FieldGrad::add_scaled(const FieldGrad& other, double scale) {
  for (std::size_t i = 0; i < density.size(); ++i) {
    density[i] += scale * other.density[i];
  }
  for (std::size_t i = 0; i < color.size(); ++i) {
    color[i] += scale * other.color[i];
  }
}

double FieldGrad::norm() const {
  double s = 0.0;
  for (double v : density) s += v * v;
  for (double v : color) s += v * v;
  return std::sqrt(s);
}

InitDistribution::InitDistribution(double dm, double ds, double cm, double cs)
    : density_mean(dm), density_std(ds), color_mean(cm), color_std(cs) {
  if (ds <= 0.0 || cs <= 0.0) {
    throw ConfigError("init distribution std must be > 0");
  }
}

FieldParams sample_init(const InitDistribution& dist, GridDims dims,
                        std::uint64_t seed, Bbox bbox) {
  check_dims(dims);
  if (dist.density_std <= 0.0 || dist.color_std <= 0.0) {
    throw ConfigError("init distribution std must be > 0");
  }
  FieldParams p = FieldParams::zeros(dims, bbox);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(dist.density_mean, dist.density_std);
  std::normal_distribution<double> nc(dist.color_mean, dist.color_std);
  for (auto& v : p.raw_density) v = static_cast<float>(nd(rng));
  for (auto& v : p.raw_color) v = static_cast<float>(nc(rng));
  return p;
}

FieldParams lerp_params(const FieldParams& src, const FieldParams& rand,
                        double eta) {
  if (!(src.dims == rand.dims)) {
    throw DimError("lerp_params: grid dims mismatch");
  }
  if (eta < 0.0 || eta > 1.0) {
    throw ConfigError("lerp_params: eta must lie in [0,1]");
  }
  FieldParams out = src;
  const double a = 1.0 - eta;
  for (std::size_t i = 0; i < out.raw_density.size(); ++i) {
    out.raw_density[i] =
        static_cast<float>(a * src.raw_density[i] + eta * rand.raw_density[i]);
  }
  for (std::size_t i = 0; i < out.raw_color.size(); ++i) {
    out.raw_color[i] =
        static_cast<float>(a * src.raw_color[i] + eta * rand.raw_color[i]);
  }
  return out;
}

FieldParams perturb(const FieldParams& src, const InitDistribution& dist,
                    double eta, std::uint64_t seed) {
  FieldParams fresh = sample_init(dist, src.dims, seed, src.bbox);
  return lerp_params(src, fresh, eta);
}

namespace {

constexpr char kMagic[4] = {'P', 'N', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw PayloadError("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const FieldParams& params, const std::string& path) {
  // Write to a temp file then rename so partial writes never corrupt an
  // existing checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + tmp);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(params.dims.nx));
    write_pod(os, static_cast<std::uint32_t>(params.dims.ny));
    write_pod(os, static_cast<std::uint32_t>(params.dims.nz));
    for (double v : {params.bbox.min.x, params.bbox.min.y, params.bbox.min.z,
                     params.bbox.max.x, params.bbox.max.y, params.bbox.max.z}) {
      write_pod(os, v);
    }
    os.write(reinterpret_cast<const char*>(params.raw_density.data()),
             static_cast<std::streamsize>(params.raw_density.size() * 4));
    os.write(reinterpret_cast<const char*>(params.raw_color.data()),
             static_cast<std::streamsize>(params.raw_color.size() * 4));
    if (!os) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("rename failed: " + path);
  }
}

FieldParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic: " + path);
  }
  std::uint32_t version;
  read_pod(is, version);
  if (version != kVersion) {
    throw VersionError("unsupported checkpoint version " +
                       std::to_string(version));
  }
  std::uint32_t nx, ny, nz;
  read_pod(is, nx);
  read_pod(is, ny);
  read_pod(is, nz);
  if (nx == 0 || ny == 0 || nz == 0) {
    throw PayloadError("zero grid dimension in checkpoint");
  }
  GridDims dims{static_cast<int>(nx), static_cast<int>(ny),
                static_cast<int>(nz)};
  Bbox bbox;
  read_pod(is, bbox.min.x);
  read_pod(is, bbox.min.y);
  read_pod(is, bbox.min.z);
  read_pod(is, bbox.max.x);
  read_pod(is, bbox.max.y);
  read_pod(is, bbox.max.z);
  FieldParams p = FieldParams::zeros(dims, bbox);
  is.read(reinterpret_cast<char*>(p.raw_density.data()),
          static_cast<std::streamsize>(p.raw_density.size() * 4));
  if (is.gcount() != static_cast<std::streamsize>(p.raw_density.size() * 4)) {
    throw PayloadError("checkpoint density payload truncated");
  }
  is.read(reinterpret_cast<char*>(p.raw_color.data()),
          static_cast<std::streamsize>(p.raw_color.size() * 4));
  if (is.gcount() != static_cast<std::streamsize>(p.raw_color.size() * 4)) {
    throw PayloadError("checkpoint color payload truncated");
  }
  return p;
}

void apply_update(FieldParams& params, const FieldGrad& velocity, double rate) {
  for (std::size_t i = 0; i < params.raw_density.size(); ++i) {
    params.raw_density[i] =
        static_cast<float>(params.raw_density[i] + rate * velocity.density[i]);
  }
  for (std::size_t i = 0; i < params.raw_color.size(); ++i) {
    params.raw_color[i] =
        static_cast<float>(params.raw_color[i] + rate * velocity.color[i]);
  }
}

}  // namespace pnr
