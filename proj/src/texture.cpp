// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/texture.hpp"

#include <algorithm>
#include <cmath>

#include "vflow/resample.hpp"

namespace vflow {

namespace {

struct TexelSurface {
  Eigen::Vector3d position;
  Eigen::Vector3d normal;  // face normal, unit
};

TexelSurface lift_texel(const TriMesh& mesh, int tri, const Eigen::Vector3d& bary) {
  Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(tri, 0));
  Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(tri, 1));
  Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(tri, 2));
  TexelSurface s;
  s.position = bary.x() * a + bary.y() * b + bary.z() * c;
  Eigen::Vector3d n = (b - a).cross(c - a);
  double len = n.norm();
  s.normal = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0.0, 0.0, 1.0);
  return s;
}

}  // namespace

UvTexture bake_texture(const TriMesh& mesh, const SlatFieldd& albedo, int atlas_size,
                       const Eigen::Vector3d& fallback) {
  require_arg(albedo.feature_dim >= 3, "bake_texture: albedo field needs >= 3 channels");
  TexelMap map = build_texel_map(mesh, atlas_size);
  UvTexture tex;
  tex.size = atlas_size;
  tex.rgb = fallback.transpose().replicate(static_cast<Index>(atlas_size) * atlas_size, 1);
  tex.valid.assign(static_cast<std::size_t>(atlas_size) * atlas_size, 0);
  Eigen::VectorXd channels(albedo.feature_dim);
  for (std::size_t idx = 0; idx < map.tri.size(); ++idx) {
    if (map.tri[idx] < 0) continue;
    TexelSurface s = lift_texel(mesh, map.tri[idx], map.bary[idx]);
    sample_field(albedo, s.position, channels.data());
    tex.rgb.row(static_cast<Index>(idx)) =
        channels.head(3).cwiseMax(0.0).cwiseMin(1.0).transpose();
    tex.valid[idx] = 1;
  }
  return tex;
}

UvTexture fuse_texture(const TriMesh& mesh, const std::vector<ViewImage>& views,
                       const EditMaskd& mask, const UvTexture& original, double exponent) {
  require_arg(!views.empty(), "fuse_texture: at least one view required");
  require_arg(original.size >= 1, "fuse_texture: original texture is empty");
  require_arg(mesh.has_uvs(), "fuse_texture: mesh has no UVs");
  for (const ViewImage& v : views)
    require_arg(v.width >= 1 && v.height >= 1 && v.rgb.rows() == v.pixel_count(),
                "fuse_texture: malformed view");

  const int atlas_size = original.size;
  TexelMap map = build_texel_map(mesh, atlas_size);

  // One depth buffer per view, rendered from the mesh itself.
  std::vector<Eigen::ArrayXXd> depth;
  depth.reserve(views.size());
  for (const ViewImage& v : views) depth.push_back(render_depth(mesh, v.camera, v.width, v.height));

  UvTexture out = original;
  for (std::size_t idx = 0; idx < map.tri.size(); ++idx) {
    if (map.tri[idx] < 0 || !original.valid[idx]) continue;
    TexelSurface s = lift_texel(mesh, map.tri[idx], map.bary[idx]);
    double m = sample_mask(mask, s.position);
    if (m == 0.0) continue;  // untouched texels keep the original bytes

    Eigen::Vector3d accum = Eigen::Vector3d::Zero();
    double total_weight = 0.0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      const ViewImage& view = views[v];
      double facing = std::max(0.0, -s.normal.dot(view.camera.dir));
      if (facing == 0.0) continue;
      Eigen::Vector3d proj = view.camera.project(s.position, view.width, view.height);
      int col = static_cast<int>(std::floor(proj.x()));
      int row = static_cast<int>(std::floor(proj.y()));
      if (col < 0 || col >= view.width || row < 0 || row >= view.height) continue;
      double bias = 1e-3 * view.camera.extent;
      if (proj.z() > depth[v](row, col) + bias) continue;  // occluded in this view
      double w = std::pow(facing, exponent);
      accum += w * Eigen::Vector3d(view.rgb.row(static_cast<Index>(row) * view.width + col));
      total_weight += w;
    }
    if (total_weight <= 0.0) continue;  // invisible everywhere: keep original
    Eigen::Vector3d blended = accum / total_weight;
    Eigen::Vector3d base = original.rgb.row(static_cast<Index>(idx));
    out.rgb.row(static_cast<Index>(idx)) =
        ((1.0 - m) * base + m * blended).cwiseMax(0.0).cwiseMin(1.0).transpose();
  }
  return out;
}

}  // namespace vflow
