#include "pnr/denoiser.hpp"

#include <algorithm>
#include <cmath>

#include "pnr/errors.hpp"

namespace pnr {

NoiseLevel::NoiseLevel(double s) : sigma(s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw ConfigError("noise level must be finite and >= 0");
  }
}

void PromptSpec::validate() const {
  if (prior_std <= 0.0) throw ConfigError("prior_std must be > 0");
  for (const auto& mix : per_view) {
    if (mix.empty()) throw ConfigError("empty mixture for a view");
    double sum = 0.0;
    for (const auto& comp : mix) {
      if (comp.weight <= 0.0) throw ConfigError("mixture weights must be > 0");
      if (!comp.target.same_shape(mix.front().target)) {
        throw DimError("mixture targets differ in resolution");
      }
      sum += comp.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("mixture weights must sum to 1");
    }
  }
}

namespace {

const std::vector<MixtureComponent>& view_mixture(const PromptSpec& prompt,
                                                  int view) {
  if (view < 0 || view >= prompt.view_count()) {
    throw ConfigError("unknown view index " + std::to_string(view));
  }
  return prompt.per_view[view];
}

// Unnormalized log responsibilities: log w_k - ||y - mu_k||^2 / (2(s^2+sg^2)).
std::vector<double> log_resp(const std::vector<MixtureComponent>& mix,
                             const Image& y, double var) {
  std::vector<double> lw(mix.size());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      const double d = y.data[i] - mix[k].target.data[i];
      sq += d * d;
    }
    lw[k] = std::log(mix[k].weight) - 0.5 * sq / var;
  }
  return lw;
}

}  // namespace

Image denoise(const PromptSpec& prompt, int view, const Image& y,
              NoiseLevel sigma) {
  const auto& mix = view_mixture(prompt, view);
  if (!y.same_shape(mix.front().target)) {
    throw DimError("denoise: input resolution does not match prompt targets");
  }
  if (sigma.sigma == 0.0) return y;

  const double s2 = prompt.prior_std * prompt.prior_std;
  const double g2 = sigma.sigma * sigma.sigma;
  const double var = s2 + g2;

  std::vector<double> lw = log_resp(mix, y, var);
  const double lmax = *std::max_element(lw.begin(), lw.end());
  double z = 0.0;
  for (double& v : lw) {
    v = std::exp(v - lmax);
    z += v;
  }

  // D = sum_k resp_k * (s^2 y + sigma^2 mu_k) / (s^2 + sigma^2)
  Image out(y.width, y.height);
  const double cy = s2 / var, cm = g2 / var;
  for (std::size_t k = 0; k < mix.size(); ++k) {
    const double r = lw[k] / z;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      out.data[i] += r * (cy * y.data[i] + cm * mix[k].target.data[i]);
    }
  }
  return out;
}

std::vector<Image> mv_denoise(const PromptSpec& prompt,
                              const std::vector<int>& views,
                              const std::vector<Image>& ys, NoiseLevel sigma) {
  if (views.size() != ys.size()) {
    throw DimError("mv_denoise: view/image lists not aligned");
  }
  std::vector<Image> out;
  out.reserve(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    out.push_back(denoise(prompt, views[i], ys[i], sigma));
  }
  return out;
}

double smoothed_log_density(const PromptSpec& prompt, int view, const Image& y,
                            NoiseLevel sigma) {
  const auto& mix = view_mixture(prompt, view);
  const double var = prompt.prior_std * prompt.prior_std +
                     sigma.sigma * sigma.sigma;
  const double dim = static_cast<double>(y.data.size());
  std::vector<double> lw = log_resp(mix, y, var);
  const double lmax = *std::max_element(lw.begin(), lw.end());
  double z = 0.0;
  for (double v : lw) z += std::exp(v - lmax);
  return lmax + std::log(z) -
         0.5 * dim * std::log(2.0 * 3.14159265358979323846 * var);
}

PromptSpec make_prompt_from_field(const FieldParams& target,
                                  const std::vector<Camera>& cameras,
                                  const RenderConfig& cfg, double s,
                                  const std::string& prompt_id) {
  return make_prompt_from_fields({target}, {1.0}, cameras, cfg, s, prompt_id);
}

PromptSpec make_prompt_from_fields(
    const std::vector<FieldParams>& targets, const std::vector<double>& weights,
    const std::vector<Camera>& cameras, const RenderConfig& cfg, double s,
    const std::string& prompt_id) {
  if (s <= 0.0) throw ConfigError("prior_std must be > 0");
  if (targets.empty() || targets.size() != weights.size()) {
    throw ConfigError("targets/weights mismatch");
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw ConfigError("mixture weights must be > 0");
    wsum += w;
  }
  PromptSpec prompt;
  prompt.prompt_id = prompt_id;
  prompt.prior_std = s;
  prompt.per_view.resize(cameras.size());
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      prompt.per_view[v].push_back(
          {weights[k] / wsum, render(targets[k], cameras[v], cfg)});
    }
  }
  prompt.validate();
  return prompt;
}

}  // namespace pnr
