// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "vflow/bench.hpp"
#include "vflow/grid_io.hpp"
#include "vflow/image_io.hpp"
#include "vflow/ini.hpp"
#include "vflow/resample.hpp"
#include "vflow/silhouette.hpp"

namespace vflow::bench {

namespace fs = std::filesystem;

const char* edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::AddBump: return "add-bump";
    case EditKind::CarveHole: return "carve-hole";
    case EditKind::ResizePart: return "resize-part";
  }
  return "add-bump";
}

EditKind parse_edit_kind(const std::string& name) {
  if (name == "add-bump") return EditKind::AddBump;
  if (name == "carve-hole") return EditKind::CarveHole;
  if (name == "resize-part") return EditKind::ResizePart;
  throw std::invalid_argument("unknown edit kind: " + name);
}

namespace {

ShapeSpec random_body(Rng& rng) {
  ShapeSpec body;
  int pick = rng.uniform_int(3);
  for (int a = 0; a < 3; ++a) body.center[a] = 0.5 + rng.uniform(-0.03, 0.03);
  if (pick == 0) {
    body.kind = ShapeSpec::Kind::Sphere;
    double r = rng.uniform(0.20, 0.26);
    body.size = Eigen::Vector3d(r, r, r);
  } else if (pick == 1) {
    body.kind = ShapeSpec::Kind::Box;
    for (int a = 0; a < 3; ++a) body.size[a] = rng.uniform(0.16, 0.22);
  } else {
    body.kind = ShapeSpec::Kind::Cylinder;
    double r = rng.uniform(0.17, 0.22);
    body.size = Eigen::Vector3d(r, r, rng.uniform(0.18, 0.24));
  }
  return body;
}

// Distance from the body center to its surface along dir, by dense probing.
double surface_reach(const ShapeSpec& body, const Eigen::Vector3d& dir) {
  double best = 0.0;
  for (int s = 1; s <= 256; ++s) {
    double t = 0.5 * s / 256.0;
    if (body.contains(body.center + t * dir)) best = t;
  }
  return best;
}

Eigen::Vector3d random_color(Rng& rng) {
  return {rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)};
}

struct CandidateCheck {
  bool ok = false;
  EditMaskd mask;
};

// The edit must be non-trivial, sit clear of the grid boundary, stay local,
// and actually change the front silhouette.
CandidateCheck check_candidate(const ShapeSpec& source, const ShapeSpec& target) {
  CandidateCheck result;
  const int r = kGridRes;
  VoxelGridd src = rasterize(source, r);
  VoxelGridd tgt = rasterize(target, r);

  int lo[3] = {r, r, r};
  int hi[3] = {-1, -1, -1};
  long changed = 0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        if (src.at(i, j, k) == tgt.at(i, j, k)) continue;
        ++changed;
        lo[0] = std::min(lo[0], i);
        lo[1] = std::min(lo[1], j);
        lo[2] = std::min(lo[2], k);
        hi[0] = std::max(hi[0], i);
        hi[1] = std::max(hi[1], j);
        hi[2] = std::max(hi[2], k);
      }
  if (changed < 48) return result;

  const int pad = 3;
  for (int a = 0; a < 3; ++a) {
    lo[a] -= pad;
    hi[a] += pad;
    if (lo[a] < 1 || hi[a] > r - 2) return result;  // edit too close to the boundary
  }

  long mask_volume = static_cast<long>(hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) *
                     (hi[2] - lo[2] + 1);
  if (mask_volume > static_cast<long>(r) * r * r * 2 / 5) return result;  // not local enough

  Eigen::MatrixXd sil_src = binary_silhouette(src);
  Eigen::MatrixXd sil_tgt = binary_silhouette(tgt);
  long sil_diff = 0;
  for (Index n = 0; n < sil_src.size(); ++n)
    sil_diff += sil_src.data()[n] != sil_tgt.data()[n];
  if (sil_diff < 20) return result;  // silhouette-invisible edit

  result.mask.resolution = r;
  result.mask.weights = Eigen::ArrayXd::Zero(static_cast<Index>(r) * r * r);
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k)
        result.mask.weights[grid_index(r, i, j, k)] = 1.0;
  result.ok = true;
  return result;
}

}  // namespace

EditCase make_case(int id, std::uint64_t seed) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, 0x6e5e, static_cast<std::uint64_t>(attempt)));
    EditCase c;
    c.id = id;
    c.seed = seed;
    c.kind = static_cast<EditKind>(id % 3);

    ShapeSpec body = random_body(rng);
    c.base_color = random_color(rng);
    c.accent_color = random_color(rng);
    for (int redraw = 0; redraw < 16 && (c.accent_color - c.base_color).lpNorm<1>() < 0.8;
         ++redraw)
      c.accent_color = random_color(rng);

    double theta = rng.uniform(0.0, 2.0 * kPi);
    double jz = rng.uniform(-0.2, 0.2);
    Eigen::Vector3d dir(std::cos(theta), std::sin(theta), jz);
    dir.normalize();
    double reach = surface_reach(body, dir);
    if (reach < 0.1) continue;

    if (c.kind == EditKind::AddBump) {
      ShapeSpec bump;
      bump.kind = ShapeSpec::Kind::Sphere;
      double rb = rng.uniform(0.10, 0.15);
      bump.size = Eigen::Vector3d(rb, rb, rb);
      bump.center = body.center + (reach + 0.45 * rb) * dir;
      bump.op = ShapeSpec::Op::Union;
      c.source = body;
      c.target = body;
      c.target.children.push_back(bump);
    } else if (c.kind == EditKind::CarveHole) {
      ShapeSpec hole;
      hole.kind = ShapeSpec::Kind::Cylinder;
      double rh = rng.uniform(0.07, 0.11);
      hole.size = Eigen::Vector3d(rh, rh, 0.5);
      double rho = reach * rng.uniform(0.3, 0.55);
      hole.center = Eigen::Vector3d(body.center[0] + rho * std::cos(theta),
                                    body.center[1] + rho * std::sin(theta), 0.5);
      hole.op = ShapeSpec::Op::Difference;
      c.source = body;
      c.target = body;
      c.target.children.push_back(hole);
    } else {
      ShapeSpec part;
      part.kind = ShapeSpec::Kind::Sphere;
      double r0 = rng.uniform(0.09, 0.13);
      part.size = Eigen::Vector3d(r0, r0, r0);
      part.center = body.center + (reach + 0.35 * r0) * dir;
      part.op = ShapeSpec::Op::Union;
      double factor = rng.uniform01() < 0.5 ? rng.uniform(1.5, 1.9) : rng.uniform(0.45, 0.6);
      ShapeSpec grown = part;
      grown.size *= factor;
      c.source = body;
      c.source.children.push_back(part);
      c.target = body;
      c.target.children.push_back(grown);
    }

    CandidateCheck check = check_candidate(c.source, c.target);
    if (!check.ok) continue;
    c.mesh_mask = std::move(check.mask);
    return c;
  }
  throw std::runtime_error("make_case: no valid candidate after 64 attempts");
}

std::string case_dir(const std::string& root, int id) {
  char name[32];
  std::snprintf(name, sizeof(name), "case_%03d", id);
  return root + "/" + name;
}

void save_case(const EditCase& c, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/case.txt", std::ios::binary);
    if (!out) throw std::runtime_error(dir + "/case.txt: cannot open for writing");
    out << "id = " << c.id << "\n";
    out << "kind = " << edit_kind_name(c.kind) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "base_color = " << format_double(c.base_color[0]) << " "
        << format_double(c.base_color[1]) << " " << format_double(c.base_color[2]) << "\n";
    out << "accent_color = " << format_double(c.accent_color[0]) << " "
        << format_double(c.accent_color[1]) << " " << format_double(c.accent_color[2]) << "\n";
  }
  save_shape(c.source, dir + "/source.shape");
  save_shape(c.target, dir + "/target.shape");
  save_voxgrid(rasterize(c.source, kGridRes), dir + "/source.voxgrid");
  save_voxgrid(rasterize(c.target, kGridRes), dir + "/target.voxgrid");
  save_voxgrid(c.mesh_mask, dir + "/mask.voxgrid");
  save_pgm(dir + "/cond_src.pgm", shape_silhouette(c.source, kCondRes).array());
  save_pgm(dir + "/cond_tgt.pgm", shape_silhouette(c.target, kCondRes).array());
}

namespace {

Eigen::Vector3d parse_color(const std::string& text) {
  std::istringstream is(text);
  std::string a, b, c;
  if (!(is >> a >> b >> c)) throw std::runtime_error("malformed color: " + text);
  return {parse_double(a), parse_double(b), parse_double(c)};
}

}  // namespace

EditCase load_case(const std::string& dir) {
  ConfigMap cfg = load_ini(dir + "/case.txt");
  EditCase c;
  c.id = config_int(cfg, "id", -1);
  if (c.id < 0) throw std::runtime_error(dir + ": case.txt missing id");
  c.kind = parse_edit_kind(config_str(cfg, "kind", ""));
  c.seed = static_cast<std::uint64_t>(std::stoull(config_str(cfg, "seed", "0")));
  c.base_color = parse_color(config_str(cfg, "base_color", "0.5 0.5 0.5"));
  c.accent_color = parse_color(config_str(cfg, "accent_color", "0.5 0.5 0.5"));
  c.source = load_shape(dir + "/source.shape");
  c.target = load_shape(dir + "/target.shape");
  VoxelGridd mask = load_voxgrid(dir + "/mask.voxgrid");
  c.mesh_mask.resolution = mask.resolution;
  c.mesh_mask.weights = mask.values;
  return c;
}

std::vector<EditCase> load_dataset(const std::string& root) {
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("case_", 0) == 0)
      dirs.push_back(entry.path().string());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<EditCase> cases;
  cases.reserve(dirs.size());
  for (const std::string& d : dirs) cases.push_back(load_case(d));
  return cases;
}

void gen_data(int count, std::uint64_t seed, const std::string& out_dir) {
  require_arg(count >= 1, "gen_data: count must be >= 1");
  fs::create_directories(out_dir);
  for (int id = 0; id < count; ++id) {
    EditCase c = make_case(id, derive_seed(seed, 0xda7a, static_cast<std::uint64_t>(id)));
    save_case(c, case_dir(out_dir, id));
  }
}

Eigen::MatrixXd shape_silhouette(const ShapeSpec& shape, int res) {
  return binary_silhouette(rasterize(shape, res));
}

Condition silhouette_condition(const ShapeSpec& shape, int res) {
  Condition cond = Condition::from_raster(shape_silhouette(shape, res));
  cond.data.array() -= cond.data.mean();
  return cond;
}

StructureLatentd encode_structure(const VoxelGridd& grid, int latent_res) {
  require_arg(latent_res >= 4 && grid.resolution % latent_res == 0,
              "encode_structure: incompatible resolutions");
  const int factor = grid.resolution / latent_res;
  VoxelGridd reduced;
  reduced.resolution = latent_res;
  reduced.values = downsample_field(grid.values, grid.resolution, factor);
  return encode(reduced, kLatentMargin);
}

SlatFieldd color_field(const EditCase& c, bool target) {
  const ShapeSpec& shape = target ? c.target : c.source;
  VoxelGridd fine = rasterize(shape, kGridRes);
  const int factor = kGridRes / kFeatRes;
  Eigen::ArrayXd occ = downsample_field(fine.values, kGridRes, factor);

  SlatFieldd field;
  field.resolution = kFeatRes;
  field.feature_dim = kFeatDim;
  const Index nv = occ.size();
  field.features.resize(nv * kFeatDim);
  field.activity = (occ > 0.15).cast<double>();

  // The accent is painted inside the edit region of the target only; the
  // color volume is dense so surface sampling never crosses a void.
  EditMaskd coarse_mask = downsample_mask(c.mesh_mask, kFeatRes, 0);
  for (Index v = 0; v < nv; ++v) {
    Eigen::Vector3d color =
        (target && coarse_mask.weights[v] > 0.5) ? c.accent_color : c.base_color;
    field.features[v * kFeatDim + 0] = color[0];
    field.features[v * kFeatDim + 1] = color[1];
    field.features[v * kFeatDim + 2] = color[2];
    field.features[v * kFeatDim + 3] = occ[v];
  }
  return field;
}

Eigen::VectorXd color_thumbnail(const SlatFieldd& field, int res) {
  require_arg(field.feature_dim >= 4, "color_thumbnail: field needs occupancy channel");
  Eigen::VectorXd thumb = Eigen::VectorXd::Zero(static_cast<Index>(res) * res * 3);
  Eigen::VectorXd channels(field.feature_dim);
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      double transmit = 1.0;
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      for (int k = 0; k < res; ++k) {
        Eigen::Vector3d pos((i + 0.5) / res, (j + 0.5) / res, (k + 0.5) / res);
        sample_field(field, pos, channels.data());
        double alpha = 0.6 * std::clamp(channels[3], 0.0, 1.0);
        if (alpha <= 0.0) continue;
        color += transmit * alpha * channels.head(3).cwiseMax(0.0).cwiseMin(1.0);
        transmit *= 1.0 - alpha;
        if (transmit < 1e-4) break;
      }
      Index base = (static_cast<Index>(i) * res + j) * 3;
      thumb.segment(base, 3) = color;
    }
  return thumb;
}

ShapeSpec morph_edit(const EditCase& c, double u) {
  require_arg(u > 0.0 && u <= 1.0, "morph_edit: strength outside (0, 1]");
  ShapeSpec shape = c.target;
  if (c.target.children.size() > c.source.children.size()) {
    // added child (bump or hole): shrink it toward nothing
    shape.children.back().size *= u;
  } else {
    // resized child: interpolate between the source and target sizes
    const Eigen::Vector3d& a = c.source.children.back().size;
    const Eigen::Vector3d& b = c.target.children.back().size;
    shape.children.back().size = (1.0 - u) * a + u * b;
  }
  return shape;
}

FlowBatch structure_batch(const std::vector<EditCase>& cases) {
  FlowBatch batch;
  auto push = [&](const ShapeSpec& shape) {
    StructureLatentd lat = encode_structure(rasterize(shape, kGridRes), kLatentRes);
    batch.x0.push_back(lat.logits.matrix());
    batch.cond.push_back(silhouette_condition(shape, kCondRes));
  };
  for (const EditCase& c : cases) {
    push(c.source);
    push(morph_edit(c, 1.0 / 3.0));
    push(morph_edit(c, 2.0 / 3.0));
    push(c.target);
  }
  return batch;
}

FlowBatch appearance_batch(const std::vector<EditCase>& cases) {
  FlowBatch batch;
  for (const EditCase& c : cases)
    for (bool target : {false, true}) {
      SlatFieldd field = color_field(c, target);
      Condition cond;
      cond.data = color_thumbnail(field, kThumbRes);
      batch.x0.push_back(field.features.matrix());
      batch.cond.push_back(std::move(cond));
    }
  return batch;
}

MlpConfig structure_model_config() {
  MlpConfig cfg;
  cfg.latent_dim = static_cast<Index>(kLatentRes) * kLatentRes * kLatentRes;
  cfg.cond_dim = static_cast<Index>(kCondRes) * kCondRes;
  // Editing hinges on resolving small differences between two silhouettes of
  // the same body, so the condition gets a wider embedding than the default.
  cfg.cond_embed = 128;
  cfg.input_scale = 1.0 / kLatentMargin;
  return cfg;
}

MlpConfig appearance_model_config() {
  MlpConfig cfg;
  cfg.latent_dim = static_cast<Index>(kFeatRes) * kFeatRes * kFeatRes * kFeatDim;
  cfg.cond_dim = static_cast<Index>(kThumbRes) * kThumbRes * 3;
  // Feature values live in [0, 1]; no preconditioning needed.
  cfg.input_scale = 1.0;
  return cfg;
}

}  // namespace vflow::bench
