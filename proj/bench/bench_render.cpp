// Timing comparison of the serial reference renderer against the OpenMP
// drivers, forward and vector-Jacobian product.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pnr/render.hpp"
#include "pnr/scenarios.hpp"

using namespace pnr;

namespace {

template <typename F>
double time_ms(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
  const GridDims dims{32, 32, 32};
  Scenario s = make_scenario("object_added", dims);
  RenderConfig cfg;
  cfg.samples_per_ray = 64;
  auto cams = orbit_cameras(1, 2.5, 0.35, 128, 128);
  const Camera& cam = cams[0];

  Image grad(cam.width, cam.height, 1.0);
  const int reps = 5;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  const double fwd_serial =
      time_ms([&] { render_serial(s.source, cam, cfg); }, reps);
  const double fwd_par = time_ms([&] { render(s.source, cam, cfg); }, reps);
  const double vjp_serial = time_ms(
      [&] { apply_image_grad_serial(s.source, cam, cfg, grad); }, reps);
  const double vjp_par =
      time_ms([&] { apply_image_grad(s.source, cam, cfg, grad); }, reps);

  std::printf("render   128x128x64s  serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              fwd_serial, fwd_par, fwd_serial / fwd_par);
  std::printf("vjp      128x128x64s  serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              vjp_serial, vjp_par, vjp_serial / vjp_par);
  return 0;
}
