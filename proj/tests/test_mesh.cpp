// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "vflow/mesh.hpp"
#include "vflow/shape.hpp"

using namespace vflow;

namespace {

VoxelGridd sphere_grid(double radius, int r) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Sphere;
  s.center = {0.5, 0.5, 0.5};
  s.size = {radius, radius, radius};
  return rasterize(s, r);
}

}  // namespace

TEST_CASE("constant grids produce empty meshes") {
  VoxelGridd g;
  g.resolution = 8;
  g.values = Eigen::ArrayXd::Zero(512);
  CHECK(marching_cubes(g).empty());
  g.values = Eigen::ArrayXd::Ones(512);
  CHECK(marching_cubes(g).empty());
}

TEST_CASE("a single interior voxel becomes a small closed surface") {
  VoxelGridd g;
  g.resolution = 8;
  g.values = Eigen::ArrayXd::Zero(512);
  g.values[grid_index(8, 4, 4, 4)] = 1.0;
  TriMesh mesh = marching_cubes(g);
  CHECK_FALSE(mesh.empty());
  CHECK(watertight(mesh));
  CHECK(euler_characteristic(mesh) == 2);
  CHECK(signed_volume(mesh) > 0.0);
}

TEST_CASE("sphere surface area and volume match the analytic solid") {
  const double radius = 0.3;
  TriMesh mesh = marching_cubes(sphere_grid(radius, 32));
  CHECK_FALSE(mesh.empty());
  CHECK(watertight(mesh));
  CHECK(euler_characteristic(mesh) == 2);

  const double area = surface_area(mesh);
  const double expect_area = 4.0 * kPi * radius * radius;
  CHECK(std::abs(area - expect_area) / expect_area < 0.10);

  const double vol = signed_volume(mesh);
  const double expect_vol = 4.0 / 3.0 * kPi * radius * radius * radius;
  CHECK(std::abs(vol - expect_vol) / expect_vol < 0.10);
}

TEST_CASE("a box with a tunnel has torus topology") {
  ShapeSpec b;
  b.kind = ShapeSpec::Kind::Box;
  b.center = {0.5, 0.5, 0.5};
  b.size = {0.3, 0.3, 0.15};
  ShapeSpec hole;
  hole.kind = ShapeSpec::Kind::Cylinder;
  hole.op = ShapeSpec::Op::Difference;
  hole.center = {0.5, 0.5, 0.5};
  hole.size = {0.1, 0.0, 0.4};
  b.children = {hole};

  TriMesh mesh = marching_cubes(rasterize(b, 32));
  CHECK(watertight(mesh));
  CHECK(euler_characteristic(mesh) == 0);
}

TEST_CASE("vertex normals are unit length") {
  TriMesh mesh = marching_cubes(sphere_grid(0.25, 16));
  CHECK(mesh.normals.rows() == mesh.vertices.rows());
  for (Index v = 0; v < mesh.normals.rows(); ++v)
    CHECK(std::abs(mesh.normals.row(v).norm() - 1.0) < 1e-6);
}

TEST_CASE("sphere normals point away from the center") {
  TriMesh mesh = marching_cubes(sphere_grid(0.3, 32));
  for (Index v = 0; v < mesh.vertices.rows(); v += 7) {
    Eigen::Vector3d radial = (mesh.vertices.row(v).transpose() - Eigen::Vector3d(0.5, 0.5, 0.5));
    CHECK(radial.normalized().dot(mesh.normals.row(v).transpose().eval()) > 0.5);
  }
}

TEST_CASE("marching cubes is deterministic") {
  TriMesh a = marching_cubes(sphere_grid(0.28, 16));
  TriMesh b = marching_cubes(sphere_grid(0.28, 16));
  REQUIRE(a.vertex_count() == b.vertex_count());
  REQUIRE(a.triangle_count() == b.triangle_count());
  CHECK((a.vertices - b.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.triangles - b.triangles).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("all triangle indices are valid") {
  TriMesh mesh = marching_cubes(sphere_grid(0.3, 16));
  for (Index t = 0; t < mesh.triangles.rows(); ++t)
    for (int c = 0; c < 3; ++c) {
      CHECK(mesh.triangles(t, c) >= 0);
      CHECK(mesh.triangles(t, c) < mesh.vertex_count());
    }
}

TEST_CASE("chamfer distance separates identity from displacement") {
  TriMesh a = marching_cubes(sphere_grid(0.3, 16));
  CHECK(chamfer_distance(a, a) == 0.0);

  TriMesh b = a;
  b.vertices.col(0).array() += 0.01;
  double d = chamfer_distance(a, b);
  CHECK(d > 0.0);
  CHECK(d <= 0.01 + 1e-12);
  CHECK(chamfer_distance(b, a) == doctest::Approx(d));
}

TEST_CASE("iso level controls the extracted radius") {
  // A soft-shelled sphere: interior solid at 1, one-voxel shell at 0.4.
  // Extracting at iso 0.5 keeps the core only; at iso 0.3 the shell joins.
  VoxelGridd g = sphere_grid(0.22, 32);
  VoxelGridd shell = sphere_grid(0.28, 32);
  for (Index i = 0; i < g.values.size(); ++i)
    if (shell.values[i] == 1.0 && g.values[i] == 0.0) g.values[i] = 0.4;

  double v_high = signed_volume(marching_cubes(g, 0.5));
  double v_low = signed_volume(marching_cubes(g, 0.3));
  CHECK(v_low > v_high * 1.5);
}
