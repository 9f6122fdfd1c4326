// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vflow/bench.hpp"
#include "vflow/grid_io.hpp"
#include "vflow/image_io.hpp"
#include "vflow/ini.hpp"
#include "vflow/render.hpp"

namespace {

using namespace vflow;
using namespace vflow::bench;

// Flag precedence: an option given on the command line wins, then the config
// file, then the built-in default already stored in the variable.
struct Settings {
  ConfigMap cfg;

  int pick_int(const CLI::Option* o, int cli, const std::string& key, int fallback) const {
    return o->count() ? cli : config_int(cfg, key, fallback);
  }
  double pick_num(const CLI::Option* o, double cli, const std::string& key,
                  double fallback) const {
    return o->count() ? cli : config_num(cfg, key, fallback);
  }
  bool pick_flag(const CLI::Option* o, bool cli, const std::string& key, bool fallback) const {
    return o->count() ? cli : config_flag(cfg, key, fallback);
  }
  std::uint64_t pick_seed(const CLI::Option* o, std::uint64_t cli, const std::string& key,
                          std::uint64_t fallback) const {
    if (o->count()) return cli;
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : std::stoull(it->second);
  }
};

Eigen::Vector3d parse_triple(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  double a, b, c;
  if (!(is >> a >> b >> c)) throw std::runtime_error(what + ": expected three numbers");
  return {a, b, c};
}

OrthoCamera camera_from_config(const ConfigMap& cfg) {
  OrthoCamera cam = front_camera();
  auto dir_it = cfg.find("render.dir");
  if (dir_it != cfg.end()) cam.dir = parse_triple(dir_it->second, "render.dir").normalized();
  auto up_it = cfg.find("render.up");
  if (up_it != cfg.end()) {
    Eigen::Vector3d up = parse_triple(up_it->second, "render.up");
    up -= up.dot(cam.dir) * cam.dir;  // re-orthogonalize against dir
    require_arg(up.norm() > 1e-9, "render.up: parallel to view direction");
    cam.up = up.normalized();
  }
  cam.extent = config_num(cfg, "render.extent", cam.extent);
  return cam;
}

int run_gen_data(const Settings& s, const CLI::Option* o_count, int count,
                 const CLI::Option* o_seed, std::uint64_t seed, const std::string& out) {
  count = s.pick_int(o_count, count, "data.count", 20);
  seed = s.pick_seed(o_seed, seed, "data.seed", 1);
  gen_data(count, seed, out);
  std::printf("wrote %d cases to %s\n", count, out.c_str());
  return 0;
}

int run_train(const Settings& s, const std::string& data_dir, const std::string& which,
              const CLI::Option* o_seed, std::uint64_t seed, const CLI::Option* o_steps,
              int steps, const std::string& out) {
  std::vector<EditCase> cases = load_dataset(data_dir);
  if (cases.empty()) throw std::runtime_error(data_dir + ": no cases found");

  const bool structure = which == "structure";
  FlowBatch batch = structure ? structure_batch(cases) : appearance_batch(cases);
  MlpConfig mcfg = structure ? structure_model_config() : appearance_model_config();

  TrainConfig tcfg;
  tcfg.seed = s.pick_seed(o_seed, seed, "train.seed", 7);
  tcfg.steps = s.pick_int(o_steps, steps, "train.steps", 2000);
  tcfg.batch = config_int(s.cfg, "train.batch", tcfg.batch);
  tcfg.learning_rate = config_num(s.cfg, "train.learning_rate", tcfg.learning_rate);
  tcfg.cond_dropout = config_num(s.cfg, "train.cond_dropout", tcfg.cond_dropout);
  tcfg.momentum = config_num(s.cfg, "train.momentum", tcfg.momentum);
  tcfg.log_every = config_int(s.cfg, "train.log_every", 200);

  MlpModel model = MlpModel::random_init(mcfg, derive_seed(tcfg.seed, 0x1417));
  TrainStats stats = train_flow_model(model, batch, tcfg);
  model.save(out);
  std::printf("trained %s model on %zu latents, final loss %s, saved %s\n", which.c_str(),
              batch.x0.size(), format_double(stats.loss.back()).c_str(), out.c_str());
  return 0;
}

struct EditArgs {
  std::string data_dir;
  std::string structure_path;
  std::string appearance_path;
  std::string out = "run";
  int case_id = -1;
  std::uint64_t seed = 0;
  int steps = 0;
  double cfg_tgt = 0.0;
  int n_avg = 0;
  bool no_guidance = false;
  bool no_texture = false;
  int workers = 0;
  const CLI::Option* o_seed = nullptr;
  const CLI::Option* o_steps = nullptr;
  const CLI::Option* o_cfg_tgt = nullptr;
  const CLI::Option* o_n_avg = nullptr;
  const CLI::Option* o_no_guidance = nullptr;
  const CLI::Option* o_no_texture = nullptr;
  const CLI::Option* o_workers = nullptr;
};

int run_edit_cmd(const Settings& s, const EditArgs& a) {
  std::vector<EditCase> cases = load_dataset(a.data_dir);
  if (a.case_id >= 0) {
    std::vector<EditCase> one;
    for (EditCase& c : cases)
      if (c.id == a.case_id) one.push_back(std::move(c));
    if (one.empty())
      throw std::runtime_error("case " + std::to_string(a.case_id) + " not found in " +
                               a.data_dir);
    cases = std::move(one);
  }
  if (cases.empty()) throw std::runtime_error(a.data_dir + ": no cases found");

  EditOptions opt;
  opt.flow.seed = s.pick_seed(a.o_seed, a.seed, "edit.seed", 0);
  opt.flow.steps = s.pick_int(a.o_steps, a.steps, "edit.steps", opt.flow.steps);
  opt.flow.cfg_tgt = s.pick_num(a.o_cfg_tgt, a.cfg_tgt, "edit.cfg_tgt", opt.flow.cfg_tgt);
  opt.flow.cfg_src = config_num(s.cfg, "edit.cfg_src", opt.flow.cfg_src);
  opt.flow.n_avg = s.pick_int(a.o_n_avg, a.n_avg, "edit.n_avg", opt.flow.n_avg);
  opt.flow.gamma = config_num(s.cfg, "edit.gamma", opt.flow.gamma);
  opt.flow.eta = config_num(s.cfg, "edit.eta", opt.flow.eta);
  opt.flow.kappa = config_num(s.cfg, "edit.kappa", opt.flow.kappa);
  opt.flow.guidance_enabled =
      !s.pick_flag(a.o_no_guidance, a.no_guidance, "edit.no_guidance", false);
  opt.repaint.seed = opt.flow.seed;
  opt.repaint.steps = config_int(s.cfg, "edit.repaint_steps", opt.repaint.steps);
  opt.repaint.sigma_b = config_num(s.cfg, "edit.sigma_b", opt.repaint.sigma_b);
  opt.repaint.cfg_scale = config_num(s.cfg, "edit.cfg_scale", opt.repaint.cfg_scale);
  opt.texture = !s.pick_flag(a.o_no_texture, a.no_texture, "edit.no_texture", false);
  opt.atlas_size = config_int(s.cfg, "edit.atlas_size", opt.atlas_size);
  opt.view_res = config_int(s.cfg, "edit.view_res", opt.view_res);
  opt.preview_res = config_int(s.cfg, "edit.preview_res", opt.preview_res);
  opt.trajectory_dump_every = config_int(s.cfg, "edit.trajectory_dump_every", 0);
  int workers = s.pick_int(a.o_workers, a.workers, "edit.workers", 1);

  MlpModel structure = MlpModel::load(a.structure_path);
  MlpModel appearance;
  if (opt.texture) {
    if (a.appearance_path.empty())
      throw std::runtime_error("--appearance checkpoint required unless --no-texture is set");
    appearance = MlpModel::load(a.appearance_path);
  } else {
    // Never evaluated; run_edit skips the repaint stage entirely.
    appearance = MlpModel(appearance_model_config());
  }

  std::vector<CaseMetrics> rows =
      run_benchmark(cases, structure, appearance, opt, a.out, workers);
  Aggregate agg = aggregate_rows(rows);
  write_report(agg, a.out + "/report.json");
  write_manifest(a.out);

  for (const CaseMetrics& m : rows) {
    if (m.ok)
      std::printf("case %03d  sil_iou %.4f  preserve_iou %.4f  chamfer %.5f  e_sil %.5f\n",
                  m.id, m.sil_iou, m.preserve_iou, m.chamfer, m.e_sil);
    else
      std::printf("case %03d  FAILED: %s\n", m.id, m.error.c_str());
  }
  std::printf("completed %d/%zu  mean sil_iou %.4f  mean preserve_iou %.4f  report %s\n",
              agg.completed, rows.size(), agg.mean_sil_iou, agg.mean_preserve_iou,
              (a.out + "/report.json").c_str());
  return agg.failed == 0 ? 0 : 1;
}

int run_eval(const std::string& run_dir, const std::string& out) {
  Aggregate agg = evaluate_run(run_dir);
  if (agg.rows.empty()) throw std::runtime_error(run_dir + ": no case directories found");
  std::string path = out.empty() ? run_dir + "/report.json" : out;
  write_report(agg, path);
  std::printf(
      "%zu cases (%d completed, %d failed)  mean sil_iou %.4f  mean preserve_iou %.4f  mean "
      "chamfer %.5f  mean e_sil %.5f\n",
      agg.rows.size(), agg.completed, agg.failed, agg.mean_sil_iou, agg.mean_preserve_iou,
      agg.mean_chamfer, agg.mean_e_sil);
  std::printf("report written to %s\n", path.c_str());
  return 0;
}

int run_render(const Settings& s, const std::string& in, const std::string& out, int size,
               double iso) {
  VoxelGridd grid = load_voxgrid(in);
  OrthoCamera cam = camera_from_config(s.cfg);
  RenderStyle style;
  style.shaded = config_flag(s.cfg, "render.shaded", true);
  save_ppm(out, render_view(grid, iso, cam, size, size, style));
  std::printf("rendered %s (%d^3) to %s (%dx%d)\n", in.c_str(), grid.resolution, out.c_str(),
              size, size);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided flow-matching editing of voxel assets"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file")->expected(1);

  auto* gen = app.add_subcommand("gen-data", "generate a procedural edit dataset");
  int gen_count = 20;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "data";
  auto* gen_count_opt = gen->add_option("--count", gen_count, "number of cases");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--out", gen_out, "output directory");

  auto* train = app.add_subcommand("train", "train a flow model on a dataset");
  std::string train_data, train_which = "structure", train_out = "model.ckpt";
  std::uint64_t train_seed = 7;
  int train_steps = 2000;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--which", train_which, "structure | appearance")
      ->check(CLI::IsMember({"structure", "appearance"}));
  auto* train_seed_opt = train->add_option("--seed", train_seed, "training seed");
  auto* train_steps_opt = train->add_option("--steps", train_steps, "SGD steps");
  train->add_option("--out", train_out, "checkpoint path");

  auto* edit = app.add_subcommand("edit", "run the edit pipeline over cases");
  EditArgs ea;
  edit->add_option("--data", ea.data_dir, "dataset directory")->required();
  edit->add_option("--case", ea.case_id, "run a single case id (default: all)");
  edit->add_option("--structure", ea.structure_path, "structure model checkpoint")->required();
  edit->add_option("--appearance", ea.appearance_path, "appearance model checkpoint");
  edit->add_option("--out", ea.out, "run output directory");
  ea.o_seed = edit->add_option("--seed", ea.seed, "edit seed");
  ea.o_steps = edit->add_option("--steps", ea.steps, "sampler steps");
  ea.o_cfg_tgt = edit->add_option("--cfg-tgt", ea.cfg_tgt, "target guidance scale");
  ea.o_n_avg = edit->add_option("--n-avg", ea.n_avg, "noise draws averaged per step");
  ea.o_no_guidance = edit->add_flag("--no-guidance", ea.no_guidance,
                                    "disable trajectory and silhouette corrections");
  ea.o_no_texture =
      edit->add_flag("--no-texture", ea.no_texture, "skip the repaint and texture stages");
  ea.o_workers = edit->add_option("--workers", ea.workers, "parallel case workers");

  auto* eval = app.add_subcommand("eval", "aggregate metrics of a finished run");
  std::string eval_run, eval_out;
  eval->add_option("--run", eval_run, "run directory")->required();
  eval->add_option("--out", eval_out, "report path (default <run>/report.json)");

  auto* render = app.add_subcommand("render", "render a VOXGRID file to PPM");
  std::string render_in, render_out = "render.ppm";
  int render_size = 256;
  double render_iso = 0.5;
  render->add_option("--in", render_in, "input .voxgrid file")->required();
  render->add_option("--out", render_out, "output .ppm file");
  render->add_option("--size", render_size, "image size in pixels");
  render->add_option("--iso", render_iso, "iso level for surface extraction");

  CLI11_PARSE(app, argc, argv);

  try {
    Settings s;
    if (!config_path.empty()) s.cfg = load_ini(config_path);

    if (gen->parsed())
      return run_gen_data(s, gen_count_opt, gen_count, gen_seed_opt, gen_seed, gen_out);
    if (train->parsed())
      return run_train(s, train_data, train_which, train_seed_opt, train_seed, train_steps_opt,
                       train_steps, train_out);
    if (edit->parsed()) return run_edit_cmd(s, ea);
    if (eval->parsed()) return run_eval(eval_run, eval_out);
    if (render->parsed()) return run_render(s, render_in, render_out, render_size, render_iso);
  } catch (const vflow::TrainingError& e) {
    std::fprintf(stderr, "error: %s (step %d)\n", e.what(), e.step());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
