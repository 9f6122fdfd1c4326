// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <stdexcept>

#include "doctest.h"
#include "vflow/shape.hpp"

using namespace vflow;

namespace {

ShapeSpec sphere(Eigen::Vector3d center, double radius) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::Sphere;
  s.center = center;
  s.size = {radius, radius, radius};
  return s;
}

}  // namespace

TEST_CASE("sphere containment uses the radius in size[0]") {
  ShapeSpec s = sphere({0.5, 0.5, 0.5}, 0.2);
  CHECK(s.contains({0.5, 0.5, 0.5}));
  CHECK(s.contains({0.5, 0.5, 0.69}));
  CHECK_FALSE(s.contains({0.5, 0.5, 0.71}));
}

TEST_CASE("box containment uses per-axis half extents") {
  ShapeSpec b;
  b.kind = ShapeSpec::Kind::Box;
  b.center = {0.5, 0.5, 0.5};
  b.size = {0.1, 0.2, 0.3};
  CHECK(b.contains({0.59, 0.5, 0.5}));
  CHECK_FALSE(b.contains({0.61, 0.5, 0.5}));
  CHECK(b.contains({0.5, 0.69, 0.5}));
  CHECK_FALSE(b.contains({0.5, 0.71, 0.5}));
  CHECK(b.contains({0.5, 0.5, 0.79}));
  CHECK_FALSE(b.contains({0.5, 0.5, 0.81}));
}

TEST_CASE("cylinder containment checks radius in-plane and half-height along k") {
  ShapeSpec c;
  c.kind = ShapeSpec::Kind::Cylinder;
  c.center = {0.5, 0.5, 0.5};
  c.size = {0.15, 0.0, 0.25};
  CHECK(c.contains({0.64, 0.5, 0.5}));
  CHECK_FALSE(c.contains({0.66, 0.5, 0.5}));
  CHECK(c.contains({0.5, 0.5, 0.74}));
  CHECK_FALSE(c.contains({0.5, 0.5, 0.76}));
  CHECK_FALSE(c.contains({0.64, 0.5, 0.76}));
}

TEST_CASE("union children add solid and difference children subtract") {
  ShapeSpec root = sphere({0.4, 0.5, 0.5}, 0.15);
  ShapeSpec add = sphere({0.65, 0.5, 0.5}, 0.1);
  add.op = ShapeSpec::Op::Union;
  ShapeSpec cut = sphere({0.4, 0.5, 0.5}, 0.06);
  cut.op = ShapeSpec::Op::Difference;
  root.children = {add, cut};

  CHECK(root.contains({0.65, 0.5, 0.5}));       // added lobe
  CHECK_FALSE(root.contains({0.4, 0.5, 0.5}));  // carved core
  CHECK(root.contains({0.52, 0.5, 0.5}));       // remaining shell
}

TEST_CASE("children apply in order") {
  // A difference carving the core, then a union refilling part of it.
  ShapeSpec root = sphere({0.5, 0.5, 0.5}, 0.2);
  ShapeSpec cut = sphere({0.5, 0.5, 0.5}, 0.1);
  cut.op = ShapeSpec::Op::Difference;
  ShapeSpec refill = sphere({0.5, 0.5, 0.5}, 0.05);
  refill.op = ShapeSpec::Op::Union;
  root.children = {cut, refill};
  CHECK(root.contains({0.5, 0.5, 0.5}));
  CHECK_FALSE(root.contains({0.5, 0.5, 0.58}));

  std::swap(root.children[0], root.children[1]);  // refill first, then carve
  CHECK_FALSE(root.contains({0.5, 0.5, 0.5}));
}

TEST_CASE("rasterize tests voxel centers against the predicate") {
  ShapeSpec s = sphere({0.5, 0.5, 0.5}, 0.3);
  VoxelGridd g = rasterize(s, 16);
  Rng rng(3);
  for (int n = 0; n < 200; ++n) {
    int i = rng.uniform_int(16), j = rng.uniform_int(16), k = rng.uniform_int(16);
    double expect = s.contains(voxel_center(16, i, j, k)) ? 1.0 : 0.0;
    CHECK(g.at(i, j, k) == expect);
  }
}

TEST_CASE("rasterize output is binary and deterministic") {
  ShapeSpec s = sphere({0.45, 0.55, 0.5}, 0.25);
  s.children.push_back(sphere({0.6, 0.5, 0.5}, 0.1));
  VoxelGridd a = rasterize(s, 12);
  VoxelGridd b = rasterize(s, 12);
  CHECK((a.values == b.values).all());
  CHECK(((a.values == 0.0) || (a.values == 1.0)).all());
}

TEST_CASE("rasterize rejects tiny resolutions") {
  CHECK_THROWS_AS(rasterize(sphere({0.5, 0.5, 0.5}, 0.2), 2), std::invalid_argument);
}

TEST_CASE("serialize then parse preserves the tree and its rasterization") {
  ShapeSpec root;
  root.kind = ShapeSpec::Kind::Box;
  root.center = {0.51, 0.47, 0.53};
  root.size = {0.21, 0.17, 0.29};
  ShapeSpec hole;
  hole.kind = ShapeSpec::Kind::Cylinder;
  hole.op = ShapeSpec::Op::Difference;
  hole.center = {0.5, 0.5, 0.5};
  hole.size = {0.077131952, 0.0, 0.31};
  ShapeSpec bump = sphere({0.61234567891, 0.5, 0.35}, 0.1000000001);
  root.children = {hole, bump};

  ShapeSpec back = parse_shape(serialize_shape(root));
  CHECK(back.kind == root.kind);
  CHECK(back.children.size() == 2);
  CHECK(back.children[0].op == ShapeSpec::Op::Difference);
  CHECK(back.center == root.center);
  CHECK(back.children[1].center == root.children[1].center);
  CHECK(back.children[1].size == root.children[1].size);
  CHECK(serialize_shape(back) == serialize_shape(root));

  VoxelGridd a = rasterize(root, 16);
  VoxelGridd b = rasterize(back, 16);
  CHECK((a.values == b.values).all());
}

TEST_CASE("shape file roundtrip") {
  ShapeSpec s = sphere({0.4, 0.6, 0.5}, 0.22);
  s.children.push_back(sphere({0.55, 0.6, 0.5}, 0.09));
  s.children.back().op = ShapeSpec::Op::Difference;
  const std::string path = "test_shape_roundtrip.shape";
  save_shape(s, path);
  ShapeSpec back = load_shape(path);
  CHECK(serialize_shape(back) == serialize_shape(s));
  std::remove(path.c_str());
}

TEST_CASE("parse_shape rejects malformed text") {
  CHECK_THROWS(parse_shape("kind=banana\n"));
  CHECK_THROWS(parse_shape(""));
}
