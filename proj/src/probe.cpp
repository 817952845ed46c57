#include "pnr/probe.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pnr/errors.hpp"

namespace pnr {

void ProbeConfig::validate() const {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (probe_steps < 2 * window) {
    throw ConfigError("probe_steps must be >= 2*window");
  }
  if (delta_min_abs && *delta_min_abs <= 0.0) {
    throw ConfigError("delta_min must be > 0");
  }
  if (delta_min_scale <= 0.0) throw ConfigError("delta_min_scale must be > 0");
  if (!(eta_max > 0.0 && eta_max <= 1.0)) {
    throw ConfigError("eta_max must lie in (0,1]");
  }
}

void ProbeReport::save_json(const std::string& path) const {
  nlohmann::json j;
  j["history"] = history.losses;
  j["delta_L"] = delta_L;
  j["delta_min_used"] = delta_min_used;
  j["eta"] = eta;
  j["duration_ms"] = duration_ms;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

double loss_decrease(const LossHistory& history, int window) {
  const auto n = history.size();
  if (window < 1 || n < static_cast<std::size_t>(2 * window)) {
    throw ConfigError("loss history too short for the requested window");
  }
  const auto& l = history.losses;
  const double first =
      std::accumulate(l.begin(), l.begin() + window, 0.0) / window;
  const double last =
      std::accumulate(l.end() - window, l.end(), 0.0) / window;
  return last - first;
}

double determine_eta(double delta_L, double delta_min, double eta_max) {
  if (delta_min <= 0.0) throw ConfigError("delta_min must be > 0");
  const double e = (delta_L + delta_min) / delta_min;
  return std::max(0.0, eta_max * (1.0 - std::exp2(-e)));
}

ProbeReport probe_and_select(const FieldParams& src, const PromptSpec& prompt,
                             const std::vector<Camera>& cameras,
                             const StepConfig& step_cfg,
                             const RenderConfig& render_cfg,
                             const NoiseSchedule& sched,
                             const ProbeConfig& probe_cfg) {
  probe_cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  FieldParams scratch = src;  // probe updates are discarded
  LossHistory history =
      run_distillation(scratch, prompt, cameras, step_cfg, render_cfg, sched,
                       probe_cfg.probe_steps);

  ProbeReport report;
  report.history = history;
  report.delta_L = loss_decrease(history, probe_cfg.window);

  double delta_min;
  if (probe_cfg.delta_min_abs) {
    delta_min = *probe_cfg.delta_min_abs;
  } else {
    // std of the first window, floored away from zero
    const int w = probe_cfg.window;
    double mean = 0.0;
    for (int i = 0; i < w; ++i) mean += history.losses[i];
    mean /= w;
    double var = 0.0;
    for (int i = 0; i < w; ++i) {
      const double d = history.losses[i] - mean;
      var += d * d;
    }
    var /= (w > 1 ? w - 1 : 1);
    delta_min = std::max(probe_cfg.delta_min_scale * std::sqrt(var), 1e-12);
  }
  report.delta_min_used = delta_min;
  report.eta = determine_eta(report.delta_L, delta_min, probe_cfg.eta_max);

  const auto t1 = std::chrono::steady_clock::now();
  report.duration_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return report;
}

FieldParams perturb_and_revise_init(const FieldParams& src,
                                    const ProbeReport& report,
                                    const InitDistribution& dist,
                                    std::uint64_t seed) {
  return perturb(src, dist, report.eta, seed);
}

}  // namespace pnr
