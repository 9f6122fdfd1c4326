// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <thread>
#include <vector>

#include "vflow/bench.hpp"
#include "vflow/grid_io.hpp"
#include "vflow/image_io.hpp"
#include "vflow/mesh.hpp"
#include "vflow/obj_io.hpp"
#include "vflow/render.hpp"
#include "vflow/resample.hpp"
#include "vflow/silhouette.hpp"
#include "vflow/texture.hpp"

namespace vflow::bench {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int cubic_resolution(const VelocityField& model) {
  int r = static_cast<int>(std::lround(std::cbrt(static_cast<double>(model.dim()))));
  require_arg(static_cast<Index>(r) * r * r == model.dim(),
              "structure model dimension is not a cube");
  return r;
}

// Chart the mesh, growing the atlas when the triangle count outruns it.
TriMesh chart_with_retry(const TriMesh& mesh, int& atlas_size) {
  for (;;) {
    try {
      return atlas_uv(mesh, atlas_size);
    } catch (const std::invalid_argument&) {
      if (atlas_size >= 1024) throw;
      atlas_size *= 2;
    }
  }
}

}  // namespace

double voxel_iou(const VoxelGridd& a, const VoxelGridd& b, const Eigen::ArrayXd& restrict_to,
                 double threshold) {
  require_arg(a.resolution == b.resolution && a.values.size() == b.values.size(),
              "voxel_iou: resolution mismatch");
  require_arg(restrict_to.size() == a.values.size(), "voxel_iou: restriction shape mismatch");
  long inter = 0, uni = 0;
  for (Index n = 0; n < a.values.size(); ++n) {
    if (restrict_to[n] <= 0.0) continue;
    bool pa = a.values[n] > threshold;
    bool pb = b.values[n] > threshold;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

CaseMetrics run_edit(const EditCase& c, const VelocityField& structure,
                     const VelocityField& appearance, const EditOptions& opt,
                     const std::string& out_dir) {
  CaseMetrics m;
  m.id = c.id;
  fs::create_directories(out_dir);
  const auto t_total = Clock::now();

  try {
    const int res = cubic_resolution(structure);
    require_arg(kGridRes % res == 0, "structure model resolution must divide the grid");

    VoxelGridd src32 = rasterize(c.source, kGridRes);
    VoxelGridd tgt32 = rasterize(c.target, kGridRes);
    StructureLatentd src_lat32 = encode(src32, kLatentMargin);
    StructureLatentd src_lat = encode_structure(src32, res);

    EditMaskd mask_model = res == kGridRes ? c.mesh_mask : downsample_mask(c.mesh_mask, res, 1);
    Condition cond_src = silhouette_condition(c.source, kCondRes);
    Condition cond_tgt = silhouette_condition(c.target, kCondRes);
    Eigen::MatrixXd sil_target = shape_silhouette(c.target, res);

    // Per-case seeds so single-case runs reproduce benchmark rows exactly.
    FlowEditConfig fcfg = opt.flow;
    fcfg.seed = derive_seed(opt.flow.seed, 0xed17, static_cast<std::uint64_t>(c.id));
    RepaintConfig rcfg = opt.repaint;
    rcfg.seed = derive_seed(opt.repaint.seed, 0x9a17, static_cast<std::uint64_t>(c.id));

    EditObserver observer;
    if (opt.trajectory_dump_every > 0) {
      observer = [&](int step, double, const Eigen::VectorXd& x) {
        if (step % opt.trajectory_dump_every != 0) return;
        StructureLatentd snap;
        snap.resolution = res;
        snap.logits = x.array();
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03d.voxgrid", step);
        save_voxgrid(decode(snap), out_dir + "/" + name);
      };
    }

    auto t_edit = Clock::now();
    StructureLatentd edited =
        flowedit_run(structure, src_lat, mask_model, cond_src, cond_tgt, sil_target, fcfg,
                     observer);

    // Compose the latent delta back onto the full-resolution source logits.
    // Outside the mask the composed state IS the source expression, so
    // preservation is exact by construction.
    Eigen::ArrayXd delta = edited.logits - src_lat.logits;
    if (res != kGridRes) delta = upsample_field(delta, res, kGridRes / res);
    StructureLatentd composed;
    composed.resolution = kGridRes;
    composed.logits =
        (c.mesh_mask.weights > 0.0).select(src_lat32.logits + delta, src_lat32.logits);
    VoxelGridd edited32 = decode(composed);
    m.timings.edit = seconds_since(t_edit);

    Eigen::MatrixXd sil_tgt32 = binary_silhouette(tgt32);
    m.sil_iou = raster_iou(binary_silhouette(edited32), sil_tgt32);
    m.preserve_iou = voxel_iou(edited32, src32, (1.0 - c.mesh_mask.weights).eval());
    m.e_sil = silhouette_energy(composed, sil_tgt32, fcfg.kappa);
    save_voxgrid(edited32, out_dir + "/edited.voxgrid");

    auto t_mesh = Clock::now();
    TriMesh mesh = marching_cubes(edited32, 0.5);
    if (mesh.empty()) throw std::runtime_error("edited occupancy has no surface");
    TriMesh tgt_mesh = marching_cubes(tgt32, 0.5);
    m.chamfer = chamfer_distance(mesh, tgt_mesh);

    int atlas_size = opt.atlas_size;
    TriMesh charted = chart_with_retry(mesh, atlas_size);
    m.timings.mesh = seconds_since(t_mesh);

    if (opt.texture) {
      auto t_repaint = Clock::now();
      SlatFieldd src_field = color_field(c, false);
      SlatFieldd tgt_field = color_field(c, true);

      SlatFieldd painted;
      painted.resolution = kFeatRes;
      painted.feature_dim = kFeatDim;
      painted.activity =
          (downsample_field(edited32.values, kGridRes, kGridRes / kFeatRes) > 0.15)
              .cast<double>();

      EditMaskd fmask =
          build_feature_mask(c.mesh_mask, painted.activity, kFeatRes, rcfg.sigma_b);
      Eigen::ArrayXd weights = expand_mask(fmask, kFeatDim);
      Condition cond_app;
      cond_app.data = color_thumbnail(tgt_field, kThumbRes);
      painted.features =
          repaint_run(src_field.features.matrix(), weights, appearance, cond_app, rcfg).array();
      save_slat(painted, out_dir + "/appearance.slat");
      m.timings.repaint = seconds_since(t_repaint);

      auto t_texture = Clock::now();
      UvTexture original = bake_texture(charted, src_field, atlas_size, c.base_color);

      RenderStyle capture;
      capture.field = &painted;
      capture.shaded = false;
      std::vector<ViewImage> views;
      for (const OrthoCamera& cam : ring_cameras(6, 20.0 * kPi / 180.0, 1.4))
        views.push_back(render_view(charted, cam, opt.view_res, opt.view_res, capture));

      EditMaskd fuse_mask = feather(c.mesh_mask, rcfg.sigma_b);
      UvTexture fused = fuse_texture(charted, views, fuse_mask, original);

      export_obj(charted, &fused, out_dir + "/edited");
      RenderStyle preview_style;
      preview_style.texture = &fused;
      save_ppm(out_dir + "/preview.ppm",
               render_view(charted, front_camera(), opt.preview_res, opt.preview_res,
                           preview_style));
      m.timings.texture = seconds_since(t_texture);
    } else {
      export_obj(charted, nullptr, out_dir + "/edited");
      save_ppm(out_dir + "/preview.ppm",
               render_view(charted, front_camera(), opt.preview_res, opt.preview_res));
    }

    m.ok = true;
  } catch (const std::exception& e) {
    m.ok = false;
    m.error = e.what();
  }

  m.timings.total = seconds_since(t_total);
  try {
    write_metrics(m, out_dir);
    write_timings(m.timings, out_dir);
  } catch (const std::exception& e) {
    if (m.ok) {
      m.ok = false;
      m.error = e.what();
    }
  }
  return m;
}

std::vector<CaseMetrics> run_benchmark(const std::vector<EditCase>& cases,
                                       const VelocityField& structure,
                                       const VelocityField& appearance, const EditOptions& opt,
                                       const std::string& run_dir, int workers) {
  fs::create_directories(run_dir);
  const int n = static_cast<int>(cases.size());
  std::vector<CaseMetrics> rows(cases.size());
  workers = std::clamp(workers, 1, std::max(1, n));

  std::atomic<int> next{0};
  auto drain = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      rows[i] =
          run_edit(cases[i], structure, appearance, opt, case_dir(run_dir, cases[i].id));
    }
  };

  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

}  // namespace vflow::bench
