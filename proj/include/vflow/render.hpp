// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vflow/atlas.hpp"
#include "vflow/grid.hpp"
#include "vflow/mesh.hpp"

namespace vflow {

// Orthographic camera looking along `dir` through a square window of side
// `extent` centered at `center`. Screen right is up x dir, rows grow against
// `up`. dir and up must be unit length and orthogonal.
struct OrthoCamera {
  Eigen::Vector3d dir{0.0, 0.0, 1.0};
  Eigen::Vector3d up{-1.0, 0.0, 0.0};
  Eigen::Vector3d center{0.5, 0.5, 0.5};
  double extent = 1.0;

  Eigen::Vector3d right() const { return up.cross(dir); }
  // Continuous pixel coordinates (col, row) and view depth of a world point.
  Eigen::Vector3d project(const Eigen::Vector3d& p, int width, int height) const;
};

// Front view matching the voxel silhouette layout: image row tracks the
// first grid axis, column the second, depth accumulates along the third.
OrthoCamera front_camera();

// Ring of cameras at the given azimuth count and elevation (radians above
// the equator), all aimed at the cube center, ordered by azimuth.
std::vector<OrthoCamera> ring_cameras(int count, double elevation, double extent);

struct ViewImage {
  int width = 0;
  int height = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3> rgb;  // row-major pixels, [0,1]
  OrthoCamera camera;

  Index pixel_count() const { return static_cast<Index>(width) * height; }
};

// How a render colors the surface: UV texture when `texture` is set, else a
// volumetric albedo field when `field` is set, else `base_color`. `shaded`
// applies a fixed headlight term on top of the albedo.
struct RenderStyle {
  const UvTexture* texture = nullptr;
  const SlatFieldd* field = nullptr;
  Eigen::Vector3d base_color{0.7, 0.7, 0.7};
  Eigen::Vector3d background{0.0, 0.0, 0.0};
  bool shaded = true;
};

ViewImage render_view(const TriMesh& mesh, const OrthoCamera& camera, int width, int height,
                      const RenderStyle& style = {});

// Convenience overload: extracts the iso-surface first.
ViewImage render_view(const VoxelGridd& grid, double iso, const OrthoCamera& camera, int width,
                      int height, const RenderStyle& style = {});

// Depth buffer of the mesh seen from the camera; pixels the surface misses
// hold +infinity. Depth is distance along the view direction.
Eigen::ArrayXXd render_depth(const TriMesh& mesh, const OrthoCamera& camera, int width,
                             int height);

// Binary coverage of the render against the background (any channel differs).
Eigen::ArrayXXd view_coverage(const ViewImage& view, const Eigen::Vector3d& background);

}  // namespace vflow
