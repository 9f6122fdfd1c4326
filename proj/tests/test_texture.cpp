// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "vflow/atlas.hpp"
#include "vflow/mesh.hpp"
#include "vflow/render.hpp"
#include "vflow/texture.hpp"

using namespace vflow;

namespace {

// Quad at height z facing the front camera (normals along -z), spanning
// [lo, hi]^2 in the first two axes. Triangles are appended to `mesh`.
void append_quad(TriMesh& mesh, double lo, double hi, double z) {
  Index base = mesh.vertices.rows();
  mesh.vertices.conservativeResize(base + 4, 3);
  mesh.vertices.row(base + 0) << lo, lo, z;
  mesh.vertices.row(base + 1) << hi, lo, z;
  mesh.vertices.row(base + 2) << hi, hi, z;
  mesh.vertices.row(base + 3) << lo, hi, z;
  Index t = mesh.triangles.rows();
  mesh.triangles.conservativeResize(t + 2, 3);
  mesh.triangles.row(t + 0) << base + 0, base + 2, base + 1;
  mesh.triangles.row(t + 1) << base + 0, base + 3, base + 2;
}

TriMesh front_quad() {
  TriMesh m;
  append_quad(m, 0.3, 0.7, 0.4);
  compute_vertex_normals(m);
  return m;
}

ViewImage flat_view(const OrthoCamera& camera, int res, const Eigen::Vector3d& color) {
  ViewImage v;
  v.width = res;
  v.height = res;
  v.camera = camera;
  v.rgb = color.transpose().replicate(static_cast<Index>(res) * res, 1);
  return v;
}

EditMaskd uniform_mask(double value) {
  EditMaskd m;
  m.resolution = 2;
  m.weights = Eigen::ArrayXd::Constant(8, value);
  return m;
}

}  // namespace

TEST_CASE("baking a constant albedo field paints every covered texel") {
  SlatFieldd albedo;
  albedo.resolution = 4;
  albedo.feature_dim = 4;
  albedo.features = Eigen::ArrayXd::Zero(64 * 4);
  for (Index v = 0; v < 64; ++v) {
    albedo.features[v * 4 + 0] = 0.25;
    albedo.features[v * 4 + 1] = 0.5;
    albedo.features[v * 4 + 2] = 0.75;
    albedo.features[v * 4 + 3] = 0.9;
  }
  albedo.activity = Eigen::ArrayXd::Ones(64);

  TriMesh mesh = atlas_uv(front_quad(), 32);
  UvTexture tex = bake_texture(mesh, albedo, 32, {0.1, 0.2, 0.3});
  int valid = 0;
  for (Index i = 0; i < tex.texel_count(); ++i) {
    if (tex.valid[i]) {
      CHECK(tex.rgb(i, 0) == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(tex.rgb(i, 1) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(tex.rgb(i, 2) == doctest::Approx(0.75).epsilon(1e-12));
      ++valid;
    } else {
      CHECK(tex.rgb(i, 0) == 0.1);
      CHECK(tex.rgb(i, 1) == 0.2);
      CHECK(tex.rgb(i, 2) == 0.3);
    }
  }
  CHECK(valid > 0);
  CHECK(valid < tex.texel_count());

  SlatFieldd thin = albedo;
  thin.feature_dim = 2;
  thin.features = Eigen::ArrayXd::Zero(64 * 2);
  CHECK_THROWS_AS(bake_texture(mesh, thin, 32), std::invalid_argument);
}

TEST_CASE("a zero mask returns the original texture bit-exactly") {
  TriMesh mesh = atlas_uv(front_quad(), 64);
  UvTexture original = UvTexture::filled(64, {0.31, 0.62, 0.93});
  std::vector<ViewImage> views = {flat_view(front_camera(), 64, {1.0, 0.0, 0.0})};
  UvTexture fused = fuse_texture(mesh, views, uniform_mask(0.0), original);
  REQUIRE(fused.size == original.size);
  CHECK((fused.rgb.array() == original.rgb.array()).all());
  CHECK(fused.valid == original.valid);
}

TEST_CASE("a full mask with one head-on view paints every covered texel") {
  TriMesh mesh = atlas_uv(front_quad(), 64);
  UvTexture original = UvTexture::filled(64, {1.0, 1.0, 1.0});
  const Eigen::Vector3d red(0.8, 0.05, 0.1);
  std::vector<ViewImage> views = {flat_view(front_camera(), 128, red)};
  UvTexture fused = fuse_texture(mesh, views, uniform_mask(1.0), original);

  TexelMap map = build_texel_map(mesh, 64);
  int painted = 0;
  for (Index i = 0; i < fused.texel_count(); ++i) {
    if (map.tri[i] < 0) continue;
    CHECK((fused.rgb.row(i).transpose() - red).cwiseAbs().maxCoeff() < 1e-6);
    ++painted;
  }
  CHECK(painted > 0);
}

TEST_CASE("two equally placed views blend to their mean") {
  TriMesh mesh = atlas_uv(front_quad(), 64);
  UvTexture original = UvTexture::filled(64, {0.0, 0.0, 0.0});
  const Eigen::Vector3d c1(0.2, 0.4, 0.6);
  const Eigen::Vector3d c2(0.8, 0.2, 0.0);
  std::vector<ViewImage> views = {flat_view(front_camera(), 96, c1),
                                  flat_view(front_camera(), 96, c2)};
  UvTexture fused = fuse_texture(mesh, views, uniform_mask(1.0), original);

  TexelMap map = build_texel_map(mesh, 64);
  const Eigen::Vector3d mean = 0.5 * (c1 + c2);
  for (Index i = 0; i < fused.texel_count(); ++i) {
    if (map.tri[i] < 0) continue;
    CHECK((fused.rgb.row(i).transpose() - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a view facing the back of the surface contributes nothing") {
  TriMesh mesh = atlas_uv(front_quad(), 64);
  UvTexture original = UvTexture::filled(64, {0.4, 0.5, 0.6});
  OrthoCamera behind;
  behind.dir = {0.0, 0.0, -1.0};
  behind.up = {-1.0, 0.0, 0.0};
  std::vector<ViewImage> views = {flat_view(behind, 64, {1.0, 0.0, 0.0})};
  UvTexture fused = fuse_texture(mesh, views, uniform_mask(1.0), original);
  CHECK((fused.rgb.array() == original.rgb.array()).all());
}

TEST_CASE("texels hidden behind nearer geometry keep their original color") {
  TriMesh mesh;
  append_quad(mesh, 0.4, 0.6, 0.3);  // triangles 0, 1: the occluder
  append_quad(mesh, 0.3, 0.7, 0.6);  // triangles 2, 3: mostly hidden
  compute_vertex_normals(mesh);
  mesh = atlas_uv(mesh, 128);

  const Eigen::Vector3d white(1.0, 1.0, 1.0);
  const Eigen::Vector3d red(0.9, 0.1, 0.05);
  UvTexture original = UvTexture::filled(128, white);
  std::vector<ViewImage> views = {flat_view(front_camera(), 256, red)};
  UvTexture fused = fuse_texture(mesh, views, uniform_mask(1.0), original);

  TexelMap map = build_texel_map(mesh, 128);
  int hidden = 0, exposed = 0, front = 0;
  for (Index i = 0; i < fused.texel_count(); ++i) {
    int tri = map.tri[i];
    if (tri < 0) continue;
    if (tri < 2) {
      CHECK((fused.rgb.row(i).transpose() - red).cwiseAbs().maxCoeff() < 1e-6);
      ++front;
      continue;
    }
    const Eigen::Vector3d& w = map.bary[i];
    Eigen::Vector3d p = w[0] * mesh.vertices.row(mesh.triangles(tri, 0)) +
                        w[1] * mesh.vertices.row(mesh.triangles(tri, 1)) +
                        w[2] * mesh.vertices.row(mesh.triangles(tri, 2));
    const bool under = p.x() > 0.43 && p.x() < 0.57 && p.y() > 0.43 && p.y() < 0.57;
    const bool clear = p.x() < 0.37 || p.x() > 0.63 || p.y() < 0.37 || p.y() > 0.63;
    if (under) {
      CHECK((fused.rgb.row(i).transpose() - white).cwiseAbs().maxCoeff() < 1e-6);
      ++hidden;
    } else if (clear) {
      CHECK((fused.rgb.row(i).transpose() - red).cwiseAbs().maxCoeff() < 1e-6);
      ++exposed;
    }
  }
  CHECK(front > 0);
  CHECK(hidden > 0);
  CHECK(exposed > 0);
}

TEST_CASE("fusing with no views is rejected") {
  TriMesh mesh = atlas_uv(front_quad(), 32);
  UvTexture original = UvTexture::filled(32, {0.5, 0.5, 0.5});
  CHECK_THROWS_AS(fuse_texture(mesh, {}, uniform_mask(1.0), original), std::invalid_argument);
}
