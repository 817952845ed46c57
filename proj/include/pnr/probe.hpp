#pragma once

#include <optional>
#include <string>

#include "pnr/distill.hpp"

namespace pnr {

struct ProbeConfig {
  int probe_steps = 50;
  int window = 10;
  // When set, used directly as delta_min. Otherwise delta_min is
  // 10x the standard deviation of the first-window losses, which keeps the
  // selection rule scale-free across render resolutions (the formula only
  // depends on the ratio delta_L / delta_min).
  std::optional<double> delta_min_abs;
  double delta_min_scale = 10.0;
  double eta_max = 0.6;

  void validate() const;
};

struct ProbeReport {
  LossHistory history;
  double delta_L = 0.0;
  double delta_min_used = 0.0;
  double eta = 0.0;
  double duration_ms = 0.0;

  void save_json(const std::string& path) const;
};

// Mean of the last `window` losses minus mean of the first `window`;
// negative means the loss decreased.
double loss_decrease(const LossHistory& history, int window);

// max(0, eta_max * (1 - 2^{-(delta_L + delta_min)/delta_min}))
double determine_eta(double delta_L, double delta_min, double eta_max);

// Runs probe_steps edit-prompt distillation steps on a copy of src (probe
// updates are discarded), then selects eta from the windowed loss decrease.
ProbeReport probe_and_select(const FieldParams& src, const PromptSpec& prompt,
                             const std::vector<Camera>& cameras,
                             const StepConfig& step_cfg,
                             const RenderConfig& render_cfg,
                             const NoiseSchedule& sched,
                             const ProbeConfig& probe_cfg);

FieldParams perturb_and_revise_init(const FieldParams& src,
                                    const ProbeReport& report,
                                    const InitDistribution& dist,
                                    std::uint64_t seed);

}  // namespace pnr
