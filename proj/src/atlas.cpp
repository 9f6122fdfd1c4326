// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vflow {

UvTexture UvTexture::filled(int size, const Eigen::Vector3d& color) {
  UvTexture t;
  t.size = size;
  t.rgb = color.transpose().replicate(static_cast<Index>(size) * size, 1);
  t.valid.assign(static_cast<std::size_t>(size) * size, 1);
  return t;
}

namespace {

// Shelf packer: places square cells left to right in index order, opening a
// new shelf when the current row is full. Returns false when the atlas
// overflows.
bool shelf_pack(const std::vector<int>& sides, int atlas_size, std::vector<int>& origin_x,
                std::vector<int>& origin_y) {
  int x = 0;
  int y = 0;
  int shelf = 0;
  origin_x.resize(sides.size());
  origin_y.resize(sides.size());
  for (std::size_t t = 0; t < sides.size(); ++t) {
    int s = sides[t];
    if (x + s > atlas_size) {
      y += shelf;
      x = 0;
      shelf = 0;
    }
    if (x + s > atlas_size || y + s > atlas_size) return false;
    origin_x[t] = x;
    origin_y[t] = y;
    x += s;
    shelf = std::max(shelf, s);
  }
  return true;
}

constexpr int kMinCellSide = 3;  // one interior texel plus the gutter ring

}  // namespace

TriMesh atlas_uv(const TriMesh& mesh, int atlas_size) {
  require_arg(!mesh.empty(), "atlas_uv: mesh has no triangles");
  require_arg(atlas_size >= kMinCellSide, "atlas_uv: atlas size too small");

  const Index nf = mesh.triangle_count();
  std::vector<double> area(nf);
  double total = 0.0;
  for (Index f = 0; f < nf; ++f) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(f, 2));
    area[f] = 0.5 * (b - a).cross(c - a).norm();
    total += area[f];
  }
  if (total <= 0.0) total = 1.0;

  // Cell side grows with sqrt(area) so texel budget tracks surface area.
  // Start near 40% fill and back off until the shelves fit.
  double scale = atlas_size * std::sqrt(0.4 / total);
  std::vector<int> sides(nf);
  std::vector<int> ox;
  std::vector<int> oy;
  bool packed = false;
  for (int attempt = 0; attempt < 48 && !packed; ++attempt) {
    bool all_min = true;
    for (Index f = 0; f < nf; ++f) {
      int s = static_cast<int>(std::floor(std::sqrt(area[f]) * scale));
      sides[f] = std::clamp(s, kMinCellSide, atlas_size);
      all_min = all_min && sides[f] == kMinCellSide;
    }
    packed = shelf_pack(sides, atlas_size, ox, oy);
    if (!packed && all_min)
      throw std::invalid_argument("atlas_uv: atlas too small for one texel per triangle");
    scale *= 0.8;
  }
  if (!packed) throw std::invalid_argument("atlas_uv: packing failed");

  TriMesh out = mesh;
  out.uvs.resize(nf * 3, 2);
  const double inv = 1.0 / atlas_size;
  for (Index f = 0; f < nf; ++f) {
    double w = sides[f] - 2;  // interior box side, gutter excluded
    double u0 = ox[f] + 1;
    double v0 = oy[f] + 1;
    out.uvs.row(f * 3 + 0) << u0 * inv, v0 * inv;
    out.uvs.row(f * 3 + 1) << (u0 + w) * inv, v0 * inv;
    out.uvs.row(f * 3 + 2) << u0 * inv, (v0 + w) * inv;
  }
  return out;
}

TexelMap build_texel_map(const TriMesh& mesh, int atlas_size) {
  require_arg(mesh.has_uvs(), "build_texel_map: mesh has no UVs");
  require_arg(atlas_size >= 1, "build_texel_map: bad atlas size");
  TexelMap map;
  map.size = atlas_size;
  map.tri.assign(static_cast<std::size_t>(atlas_size) * atlas_size, -1);
  map.bary.assign(map.tri.size(), Eigen::Vector3d::Zero());

  for (Index f = 0; f < mesh.triangle_count(); ++f) {
    Eigen::Vector2d a = mesh.uvs.row(f * 3 + 0) * atlas_size;
    Eigen::Vector2d b = mesh.uvs.row(f * 3 + 1) * atlas_size;
    Eigen::Vector2d c = mesh.uvs.row(f * 3 + 2) * atlas_size;
    double denom = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (denom == 0.0) continue;
    int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
    int x1 = std::min(atlas_size - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
    int y1 = std::min(atlas_size - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx) {
        Eigen::Vector2d p(tx + 0.5, ty + 0.5);
        double lb = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / denom;
        double lc = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / denom;
        double la = 1.0 - lb - lc;
        const double eps = -1e-9;
        if (la < eps || lb < eps || lc < eps) continue;
        std::size_t idx = static_cast<std::size_t>(ty) * atlas_size + tx;
        if (map.tri[idx] != -1)
          throw std::logic_error("build_texel_map: overlapping charts");
        map.tri[idx] = static_cast<int>(f);
        map.bary[idx] = Eigen::Vector3d(la, lb, lc);
      }
  }
  return map;
}

}  // namespace vflow
