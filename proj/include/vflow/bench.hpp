// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vflow/flow.hpp"
#include "vflow/flowedit.hpp"
#include "vflow/grid.hpp"
#include "vflow/mlp.hpp"
#include "vflow/repaint.hpp"
#include "vflow/shape.hpp"
#include "vflow/train.hpp"

namespace vflow::bench {

// Benchmark-wide resolutions. The occupancy grid is the working space;
// trained structure models run on a reduced latent; appearance lives on a
// coarse feature field.
inline constexpr int kGridRes = 32;
inline constexpr int kLatentRes = 16;
inline constexpr int kCondRes = 32;
inline constexpr int kThumbRes = 16;
inline constexpr int kFeatRes = 8;
inline constexpr int kFeatDim = 4;

// Logit magnitude for latents the flow model sees. Deliberately softer than
// the encode default: targets of magnitude 8 push the tanh trunk into
// saturation during training, after which the condition input is ignored.
// Unit-ish logits keep the regression well scaled end to end, and binary
// grids still decode exactly under the 0.5 threshold (logistic(1.5) = 0.82).
inline constexpr double kLatentMargin = 1.5;

enum class EditKind { AddBump, CarveHole, ResizePart };
const char* edit_kind_name(EditKind k);
EditKind parse_edit_kind(const std::string& name);

// One benchmark problem: a procedural source solid, a target differing by a
// single local edit, the mesh-space mask bounding that edit, and the two
// appearance palettes.
struct EditCase {
  int id = 0;
  EditKind kind = EditKind::AddBump;
  ShapeSpec source;
  ShapeSpec target;
  EditMaskd mesh_mask;  // binary weights at kGridRes
  Eigen::Vector3d base_color{0.5, 0.5, 0.5};
  Eigen::Vector3d accent_color{0.5, 0.5, 0.5};
  std::uint64_t seed = 0;
};

// Deterministic procedural case. Candidates violating the requirements
// (edit local to the mask, visible in the front silhouette, inside the grid
// margin) are rejected and resampled internally.
EditCase make_case(int id, std::uint64_t seed);

// Dataset layout: <root>/case_NNN/{case.txt, source.shape, target.shape,
// source.voxgrid, target.voxgrid, mask.voxgrid, cond_src.pgm, cond_tgt.pgm}.
std::string case_dir(const std::string& root, int id);
void save_case(const EditCase& c, const std::string& dir);
EditCase load_case(const std::string& dir);
std::vector<EditCase> load_dataset(const std::string& root);
void gen_data(int count, std::uint64_t seed, const std::string& out_dir);

// Binary front silhouette of a shape rasterized at the given resolution.
Eigen::MatrixXd shape_silhouette(const ShapeSpec& shape, int res);

// Silhouette as a model condition: mean-centered so the embedding reacts to
// where the outline deviates rather than to the raster's DC component, which
// otherwise drags the embedding layer into tanh saturation during training.
Condition silhouette_condition(const ShapeSpec& shape, int res);

// Occupancy reduced to latent_res by box averaging, then mapped to logits.
StructureLatentd encode_structure(const VoxelGridd& grid, int latent_res);

// Dense palette coloring: accent inside the mask support, base elsewhere;
// channel 3 carries the reduced occupancy. Activity marks occupied voxels.
SlatFieldd color_field(const EditCase& c, bool target);

// Front-view alpha composite of a color field, flattened to r*r*3 values.
Eigen::VectorXd color_thumbnail(const SlatFieldd& field, int res);

// Target shape with the edit applied at strength u in (0, 1]: the child
// that the edit added or resized is interpolated toward its source size.
// Used to augment training with intermediate edit magnitudes so the model
// learns a smooth silhouette-to-latent trend instead of one isolated jump.
ShapeSpec morph_edit(const EditCase& c, double u);

// Training set assembly: source, target, and two intermediate morphs per
// case for the structure model; source and target fields for appearance.
FlowBatch structure_batch(const std::vector<EditCase>& cases);
FlowBatch appearance_batch(const std::vector<EditCase>& cases);

MlpConfig structure_model_config();
MlpConfig appearance_model_config();

// Per-stage wall-clock seconds; reported separately from the deterministic
// metrics so reruns stay byte-identical.
struct StageTimings {
  double edit = 0.0;
  double repaint = 0.0;
  double mesh = 0.0;
  double texture = 0.0;
  double total = 0.0;
};

struct CaseMetrics {
  int id = -1;
  bool ok = false;
  std::string error;
  double sil_iou = 0.0;       // edited vs target front silhouette, 0.5 threshold
  double preserve_iou = 0.0;  // occupancy agreement outside the mask
  double chamfer = 0.0;       // edited vs target mesh vertex clouds
  double e_sil = 0.0;         // final silhouette energy against the target
  StageTimings timings;
};

struct EditOptions {
  FlowEditConfig flow;
  RepaintConfig repaint;
  bool texture = true;
  int atlas_size = 512;
  int view_res = 128;
  int preview_res = 128;
  int trajectory_dump_every = 0;  // write VOXGRID snapshots every k steps
};

// Full pipeline on one case: masked structure edit in the model's latent
// space, delta composition back to the grid, appearance repaint, surface
// extraction, texture bake + fusion, exports, and the metrics row. Writes
// into out_dir (created if needed). Exceptions are reported, not thrown.
CaseMetrics run_edit(const EditCase& c, const VelocityField& structure,
                     const VelocityField& appearance, const EditOptions& opt,
                     const std::string& out_dir);

// Runs every case, up to `workers` in parallel, each into
// <run_dir>/case_NNN; returns rows in case order.
std::vector<CaseMetrics> run_benchmark(const std::vector<EditCase>& cases,
                                       const VelocityField& structure,
                                       const VelocityField& appearance, const EditOptions& opt,
                                       const std::string& run_dir, int workers);

void write_metrics(const CaseMetrics& m, const std::string& dir);

// Wall-clock stage timings, written beside metrics.json but never hashed.
void write_timings(const StageTimings& t, const std::string& dir);

struct Aggregate {
  std::vector<CaseMetrics> rows;
  int completed = 0;
  int failed = 0;
  double mean_sil_iou = 0.0;
  double mean_preserve_iou = 0.0;
  double mean_chamfer = 0.0;
  double mean_e_sil = 0.0;
  StageTimings mean_timings;
};

Aggregate aggregate_rows(const std::vector<CaseMetrics>& rows);

// Scans <run_dir>/case_*/metrics.json; unreadable cases become failed rows.
Aggregate evaluate_run(const std::string& run_dir);
void write_report(const Aggregate& agg, const std::string& path);

// Hashes every artifact under run_dir (sorted relative paths) into
// <run_dir>/manifest.json. Timing files, reports, and the manifest itself
// are excluded so reruns with equal seeds hash identically.
void write_manifest(const std::string& run_dir);

// Occupancy IoU restricted to voxels where restrict_to is positive (pass an
// all-ones mask for the unrestricted version). Empty unions count as 1.
double voxel_iou(const VoxelGridd& a, const VoxelGridd& b, const Eigen::ArrayXd& restrict_to,
                 double threshold = 0.5);

}  // namespace vflow::bench
