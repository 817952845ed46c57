#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pnr/denoiser.hpp"
#include "pnr/errors.hpp"
#include "pnr/scenarios.hpp"
#include "oracle.hpp"

using namespace pnr;

namespace {

Image constant_image(int w, int h, double r, double g, double b) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

PromptSpec single_prompt(const Image& mu, double s) {
  PromptSpec p;
  p.prompt_id = "test";
  p.prior_std = s;
  p.per_view.push_back({{1.0, mu}});
  p.validate();
  return p;
}

}  // namespace

TEST_CASE("noise level rejects negatives") {
  CHECK_THROWS_AS(NoiseLevel(-0.1), ConfigError);
  CHECK_NOTHROW(NoiseLevel(0.0));
}

TEST_CASE("single component fixed point: y = mu gives D = mu") {
  Image mu = constant_image(3, 3, 0.2, 0.5, 0.9);
  PromptSpec p = single_prompt(mu, 0.05);
  for (double sigma : {0.0, 0.1, 0.5, 3.0}) {
    Image d = denoise(p, 0, mu, NoiseLevel(sigma));
    for (std::size_t i = 0; i < d.data.size(); ++i) {
      CHECK(d.data[i] == doctest::Approx(mu.data[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("single gaussian closed form (s=1, sigma=1, mu=0, y=2 -> 1)") {
  Image mu = constant_image(1, 1, 0.0, 0.0, 0.0);
  PromptSpec p = single_prompt(mu, 1.0);
  Image y = constant_image(1, 1, 2.0, 2.0, 2.0);
  Image d = denoise(p, 0, y, NoiseLevel(1.0));
  for (double v : d.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // cross-check against the Monte-Carlo posterior-mean oracle
  std::mt19937_64 rng(404);
  auto rep = oracle::mc_posterior_mean(p, 0, y, 1.0, 200000, rng);
  CHECK(rep.compare(d.data, 3.0));
}

TEST_CASE("sigma = 0 returns the input exactly") {
  Image mu = constant_image(2, 2, 0.3, 0.3, 0.3);
  PromptSpec p = single_prompt(mu, 0.05);
  Image y = constant_image(2, 2, 0.71, 0.11, 0.42);
  Image d = denoise(p, 0, y, NoiseLevel(0.0));
  CHECK(d.data == y.data);
}

TEST_CASE("large sigma collapses to the mixture mean") {
  PromptSpec p;
  p.prior_std = 0.05;
  Image mu1 = constant_image(2, 2, 0.1, 0.1, 0.1);
  Image mu2 = constant_image(2, 2, 0.9, 0.9, 0.9);
  p.per_view.push_back({{0.5, mu1}, {0.5, mu2}});
  p.validate();
  Image y = constant_image(2, 2, 0.4, 0.4, 0.4);
  Image d = denoise(p, 0, y, NoiseLevel(1000.0 * p.prior_std));
  for (double v : d.data) CHECK(std::abs(v - 0.5) < 1e-3);
}

TEST_CASE("two-component mixture matches the MC oracle") {
  PromptSpec p;
  p.prior_std = 0.1;
  p.per_view.push_back({{0.7, constant_image(2, 2, 0.2, 0.3, 0.4)},
                        {0.3, constant_image(2, 2, 0.8, 0.7, 0.6)}});
  p.validate();
  Image y = constant_image(2, 2, 0.5, 0.45, 0.55);
  const double sigma = 0.2;
  Image d = denoise(p, 0, y, NoiseLevel(sigma));
  std::mt19937_64 rng(99);
  auto rep = oracle::mc_posterior_mean(p, 0, y, sigma, 200000, rng);
  CHECK(rep.compare(d.data, 3.0));
}

TEST_CASE("tweedie identity: (D - y)/sigma^2 is the smoothed score") {
  PromptSpec p;
  p.prior_std = 0.15;
  p.per_view.push_back({{0.6, constant_image(2, 2, 0.25, 0.5, 0.75)},
                        {0.4, constant_image(2, 2, 0.7, 0.2, 0.4)}});
  p.validate();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Image y(2, 2);
    for (auto& v : y.data) v = u(rng);
    const double sigma = 0.1 + 0.2 * u(rng);
    Image d = denoise(p, 0, y, NoiseLevel(sigma));
    const double h = 1e-5;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      Image yp = y, ym = y;
      yp.data[i] += h;
      ym.data[i] -= h;
      const double fd = (smoothed_log_density(p, 0, yp, NoiseLevel(sigma)) -
                         smoothed_log_density(p, 0, ym, NoiseLevel(sigma))) /
                        (2.0 * h);
      const double score = (d.data[i] - y.data[i]) / (sigma * sigma);
      CHECK(std::abs(score - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("single component interpolates monotonically from y to mu") {
  Image mu = constant_image(2, 2, 0.9, 0.1, 0.5);
  PromptSpec p = single_prompt(mu, 0.1);
  Image y = constant_image(2, 2, 0.2, 0.8, 0.5);
  Image prev = y;
  for (double sigma : {0.05, 0.1, 0.2, 0.5, 1.0, 5.0}) {
    Image d = denoise(p, 0, y, NoiseLevel(sigma));
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      const double toward_mu = mu.data[i] - y.data[i];
      const double step = (d.data[i] - prev.data[i]) * (toward_mu >= 0 ? 1 : -1);
      CHECK(step >= -1e-12);
      // stays within the segment [y, mu]
      CHECK(std::abs(d.data[i] - y.data[i]) <= std::abs(toward_mu) + 1e-12);
    }
    prev = d;
  }
}

TEST_CASE("mv_denoise applies denoise per view and permutes with the list") {
  GridDims dims{6, 6, 6};
  Scenario s = make_scenario("color_change", dims);
  RenderConfig cfg;
  cfg.samples_per_ray = 8;
  auto cams = orbit_cameras(3, 2.5, 0.3, 6, 6);
  PromptSpec p = make_prompt_from_field(s.target, cams, cfg, 0.05);

  std::vector<Image> ys;
  for (int v = 0; v < 3; ++v) ys.push_back(p.per_view[v].front().target);
  NoiseLevel sigma(0.2);

  // all views at their targets: outputs equal inputs
  auto outs = mv_denoise(p, {0, 1, 2}, ys, sigma);
  for (int v = 0; v < 3; ++v) {
    for (std::size_t i = 0; i < ys[v].data.size(); ++i) {
      CHECK(outs[v].data[i] == doctest::Approx(ys[v].data[i]).epsilon(1e-10));
    }
  }

  // N=1 reduces to denoise; permuting views permutes outputs
  auto single = mv_denoise(p, {1}, {ys[1]}, sigma);
  CHECK(single[0].data == denoise(p, 1, ys[1], sigma).data);
  auto perm = mv_denoise(p, {2, 0}, {ys[2], ys[0]}, sigma);
  CHECK(perm[0].data == outs[2].data);
  CHECK(perm[1].data == outs[0].data);
}

TEST_CASE("prompt construction validates and normalizes weights") {
  GridDims dims{5, 5, 5};
  Scenario s = make_scenario("object_moved", dims);
  RenderConfig cfg;
  cfg.samples_per_ray = 8;
  auto cams = orbit_cameras(2, 2.5, 0.3, 6, 6);

  PromptSpec two = make_prompt_from_fields({s.source, s.target}, {0.7, 0.3},
                                           cams, cfg, 0.05);
  REQUIRE(two.per_view.size() == 2);
  REQUIRE(two.per_view[0].size() == 2);
  CHECK(two.per_view[0][0].weight + two.per_view[0][1].weight ==
        doctest::Approx(1.0));

  CHECK_THROWS_AS(make_prompt_from_field(s.source, cams, cfg, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(make_prompt_from_fields({s.source}, {1.0, 1.0}, cams, cfg,
                                          0.05),
                  ConfigError);
}

TEST_CASE("denoise rejects unknown views and bad resolutions") {
  Image mu = constant_image(2, 2, 0.5, 0.5, 0.5);
  PromptSpec p = single_prompt(mu, 0.05);
  CHECK_THROWS_AS(denoise(p, 3, mu, NoiseLevel(0.1)), ConfigError);
  CHECK_THROWS_AS(denoise(p, 0, Image(3, 3), NoiseLevel(0.1)), DimError);
}
