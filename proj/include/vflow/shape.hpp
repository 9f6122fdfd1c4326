// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "vflow/grid.hpp"

namespace vflow {

// CSG node over solid primitives in the unit cube. Children are applied in
// order to the node's own primitive: union adds a child's solid, difference
// subtracts it. The op of a root node is ignored.
//
// Size semantics per kind:
//   sphere   - size[0] is the radius
//   box      - size is the half-extent along each axis
//   cylinder - axis along k; size[0] is the radius, size[2] the half-height
struct ShapeSpec {
  enum class Kind { Sphere, Box, Cylinder };
  enum class Op { Union, Difference };

  Kind kind = Kind::Sphere;
  Op op = Op::Union;
  Eigen::Vector3d center{0.5, 0.5, 0.5};
  Eigen::Vector3d size{0.25, 0.25, 0.25};
  std::vector<ShapeSpec> children;

  bool contains(const Eigen::Vector3d& p) const;
};

// Rasterize to a binary occupancy grid: a voxel is occupied iff its center
// satisfies the CSG predicate. Requires resolution >= 4.
VoxelGridd rasterize(const ShapeSpec& spec, int resolution);

// Line-based serialization (kind/center/size/op/children per node,
// children following their parent).
std::string serialize_shape(const ShapeSpec& spec);
ShapeSpec parse_shape(const std::string& text);

void save_shape(const ShapeSpec& spec, const std::string& path);
ShapeSpec load_shape(const std::string& path);

}  // namespace vflow
