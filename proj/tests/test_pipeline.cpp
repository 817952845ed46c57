#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pnr/errors.hpp"
#include "pnr/pipeline.hpp"

using namespace pnr;
namespace fs = std::filesystem;

namespace {

// Temporary workspace with scenario checkpoints + prompt descriptor on disk.
struct Workspace {
  fs::path dir;
  Scenario scenario;
  PromptDescriptor prompt;

  Workspace(const std::string& name, GridDims dims, const CameraRing& ring)
      : scenario(make_scenario(name, dims)) {
    dir = fs::temp_directory_path() /
          ("pnr_pipe_" + name + "_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    save_checkpoint(scenario.source, (dir / "source.pnrf").string());
    save_checkpoint(scenario.target, (dir / "target.pnrf").string());
    prompt.prompt_id = name;
    prompt.checkpoints = {(dir / "target.pnrf").string()};
    prompt.weights = {1.0};
    prompt.ring = ring;
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

CameraRing small_ring() {
  CameraRing ring;
  ring.count = 2;
  ring.width = 16;
  ring.height = 16;
  return ring;
}

RunConfig small_cfg() {
  RunConfig cfg;
  cfg.dims = {10, 10, 10};
  cfg.render.samples_per_ray = 16;
  cfg.ring = small_ring();
  cfg.edit_steps = 30;
  cfg.probe.probe_steps = 20;
  cfg.probe.window = 5;
  cfg.refine.refine_steps = 10;
  cfg.refine.decay_end_fraction = 1.0;
  cfg.step.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("fit reaches self-consistency on renders of a known field") {
  Scenario sc = make_scenario("color_change", {8, 8, 8});
  RenderConfig rc;
  rc.samples_per_ray = 16;
  auto cams = orbit_cameras(3, 2.5, 0.35, 16, 16);
  std::vector<Image> targets;
  for (const auto& cam : cams) targets.push_back(render(sc.source, cam, rc));

  FitResult r = fit_field(targets, cams, rc, {8, 8, 8}, sc.source.bbox, 400,
                          0.05, 1e-3, 3);
  CHECK(r.converged);
  CHECK(r.final_mse < 1e-3);

  FitResult r2 = fit_field(targets, cams, rc, {8, 8, 8}, sc.source.bbox, 400,
                           0.05, 1e-3, 3);
  CHECK(r.params.raw_density == r2.params.raw_density);
  CHECK(r.params.raw_color == r2.params.raw_color);

  CHECK_THROWS_AS(fit_field({}, cams, rc, {8, 8, 8}, sc.source.bbox, 10, 0.05,
                            1e-3, 3),
                  ConfigError);
}

TEST_CASE("prompt descriptor round-trips and realizes per-view mixtures") {
  Workspace ws("color_change", {6, 6, 6}, small_ring());
  const fs::path path = ws.dir / "prompt.json";
  ws.prompt.save_json(path.string());

  PromptDescriptor loaded = PromptDescriptor::load_json(path.string());
  CHECK(loaded.prompt_id == ws.prompt.prompt_id);
  CHECK(loaded.checkpoints == ws.prompt.checkpoints);
  CHECK(loaded.weights == ws.prompt.weights);
  CHECK(loaded.ring.count == 2);
  CHECK(loaded.ring.width == 16);

  RenderConfig rc;
  rc.samples_per_ray = 8;
  PromptSpec spec = loaded.realize(rc, 8, 8);
  REQUIRE(spec.per_view.size() == 2);
  CHECK(spec.per_view[0].front().target.width == 8);

  CHECK_THROWS_AS(PromptDescriptor::load_json("no_such_prompt.json"), IoError);
  std::ofstream((ws.dir / "bad.json").string()) << "{ not json";
  CHECK_THROWS_AS(
      PromptDescriptor::load_json((ws.dir / "bad.json").string()),
      ConfigError);
}

TEST_CASE("run config json merge overrides only the given keys") {
  const fs::path path =
      fs::temp_directory_path() / ("pnr_cfg_" + std::to_string(::getpid()));
  std::ofstream(path.string())
      << R"({"grid": {"nx": 12, "ny": 12, "nz": 12},
             "edit_steps": 77,
             "step": {"learning_rate": 0.25, "seed": 9},
             "probe": {"delta_min": 42.0},
             "eta": 0.5})";
  RunConfig cfg;
  cfg.apply_json(path.string());
  CHECK(cfg.dims.nx == 12);
  CHECK(cfg.edit_steps == 77);
  CHECK(cfg.step.learning_rate == 0.25);
  CHECK(cfg.step.seed == 9);
  REQUIRE(cfg.probe.delta_min_abs.has_value());
  CHECK(*cfg.probe.delta_min_abs == 42.0);
  REQUIRE(cfg.eta_override.has_value());
  CHECK(*cfg.eta_override == 0.5);
  // untouched defaults survive
  CHECK(cfg.refine.lambda_l1 == 300.0);
  CHECK(cfg.ring.width == 64);
  fs::remove(path);

  CHECK_THROWS_AS(RunConfig::load_json("no_such_config.json"), IoError);
}

TEST_CASE("run_edit executes probe, perturb, edit, refine in order") {
  Workspace ws("color_change", {10, 10, 10}, small_ring());
  RunConfig cfg = small_cfg();
  EditRun run = run_edit(ws.scenario.source, ws.prompt, cfg);

  REQUIRE(run.probe.has_value());
  CHECK(run.probe->history.size() ==
        static_cast<std::size_t>(cfg.probe.probe_steps));
  CHECK(run.eta_used == run.probe->eta);
  CHECK(run.eta_used >= 0.0);
  CHECK(run.eta_used <= cfg.probe.eta_max);
  CHECK(run.edit_history.size() == static_cast<std::size_t>(cfg.edit_steps));
  CHECK(run.refine_diag.monitor_loss.size() ==
        static_cast<std::size_t>(cfg.refine.refine_steps));
  CHECK(run.final_edit_mse >= 0.0);
  CHECK(run.final_identity_dist >= 0.0);
}

TEST_CASE("eta override bypasses the probe entirely") {
  Workspace ws("color_change", {8, 8, 8}, small_ring());
  RunConfig cfg = small_cfg();
  cfg.dims = {8, 8, 8};
  cfg.eta_override = 0.0;
  cfg.skip_refine = true;
  EditRun run = run_edit(ws.scenario.source, ws.prompt, cfg);
  CHECK(!run.probe.has_value());
  CHECK(run.eta_used == 0.0);
  // eta = 0: the perturbation is the identity
  CHECK(run.perturbed.raw_density == ws.scenario.source.raw_density);
  CHECK(run.perturbed.raw_color == ws.scenario.source.raw_color);
  CHECK(run.refine_diag.monitor_loss.empty());
}

TEST_CASE("run_edit is deterministic for a fixed config") {
  Workspace ws("object_moved", {8, 8, 8}, small_ring());
  RunConfig cfg = small_cfg();
  cfg.dims = {8, 8, 8};
  cfg.refine.refine_steps = 5;
  EditRun a = run_edit(ws.scenario.source, ws.prompt, cfg);
  EditRun b = run_edit(ws.scenario.source, ws.prompt, cfg);
  CHECK(a.eta_used == b.eta_used);
  CHECK(a.final_params.raw_density == b.final_params.raw_density);
  CHECK(a.final_params.raw_color == b.final_params.raw_color);
  CHECK(a.edit_history.losses == b.edit_history.losses);
  CHECK(a.refine_diag.identity_dist == b.refine_diag.identity_dist);
}

TEST_CASE("run_edit_to_disk writes the full artifact set") {
  Workspace ws("color_change", {8, 8, 8}, small_ring());
  const fs::path prompt_path = ws.dir / "prompt.json";
  ws.prompt.save_json(prompt_path.string());

  RunConfig cfg = small_cfg();
  cfg.dims = {8, 8, 8};
  cfg.edit_steps = 10;
  cfg.probe.probe_steps = 10;
  cfg.refine.refine_steps = 4;
  cfg.source_checkpoint = (ws.dir / "source.pnrf").string();
  cfg.prompt_path = prompt_path.string();
  cfg.out_dir = (ws.dir / "out").string();
  run_edit_to_disk(cfg);

  const fs::path out(cfg.out_dir);
  for (const char* name : {"source.pnrf", "perturbed.pnrf", "final.pnrf",
                           "probe_report.json", "edit_loss.csv",
                           "refine_diag.csv", "summary.json"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(fs::exists(out / "renders" / "view_000.png"));
  CHECK(fs::exists(out / "renders" / "view_007.png"));

  // missing inputs are config errors
  RunConfig incomplete = small_cfg();
  CHECK_THROWS_AS(run_edit_to_disk(incomplete), ConfigError);
}

TEST_CASE("render after checkpoint round trip is bit-identical") {
  Workspace ws("object_added", {8, 8, 8}, small_ring());
  RenderConfig rc;
  rc.samples_per_ray = 16;
  auto cams = small_ring().build(ws.scenario.source.bbox.center());
  Image before = render(ws.scenario.source, cams[0], rc);
  FieldParams loaded = load_checkpoint((ws.dir / "source.pnrf").string());
  Image after = render(loaded, cams[0], rc);
  CHECK(before.data == after.data);
}

TEST_CASE("render_orbit_pngs writes n deterministic files") {
  Workspace ws("color_change", {6, 6, 6}, small_ring());
  RenderConfig rc;
  rc.samples_per_ray = 8;
  const fs::path out = ws.dir / "orbit";
  render_orbit_pngs(ws.scenario.source, 3, small_ring(), rc, out.string());
  CHECK(fs::exists(out / "view_000.png"));
  CHECK(fs::exists(out / "view_001.png"));
  CHECK(fs::exists(out / "view_002.png"));
  CHECK(!fs::exists(out / "view_003.png"));
}

TEST_CASE("edit_target_mse is zero when params render the targets") {
  Workspace ws("color_change", {6, 6, 6}, small_ring());
  RenderConfig rc;
  rc.samples_per_ray = 8;
  auto cams = small_ring().build(ws.scenario.target.bbox.center());
  PromptSpec prompt = make_prompt_from_field(ws.scenario.target, cams, rc,
                                             0.05);
  CHECK(edit_target_mse(ws.scenario.target, cams, rc, prompt) == 0.0);
  CHECK(edit_target_mse(ws.scenario.source, cams, rc, prompt) > 0.0);
}
