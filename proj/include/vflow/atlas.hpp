// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vflow/mesh.hpp"

namespace vflow {

// Square RGB atlas with a per-texel validity flag. Texels are row-major
// (row * size + col); valid texels hold colors in [0,1].
struct UvTexture {
  int size = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3> rgb;
  std::vector<std::uint8_t> valid;

  static UvTexture filled(int size, const Eigen::Vector3d& color);
  Index texel_count() const { return static_cast<Index>(size) * size; }
};

// Assigns every triangle a private axis-aligned chart in an A x A atlas:
// cells are sized proportionally to sqrt(triangle area), packed on shelves in
// triangle-index order, and each chart keeps a one-texel gutter inside its
// cell. Corner c of triangle t gets the UV at row 3*t + c. Throws
// std::invalid_argument when the atlas cannot give every triangle at least
// one interior texel.
TriMesh atlas_uv(const TriMesh& mesh, int atlas_size);

// Inverse of the charting: for each texel, which triangle covers it and at
// which barycentric coordinates. tri == -1 marks unused texels.
struct TexelMap {
  int size = 0;
  std::vector<int> tri;
  std::vector<Eigen::Vector3d> bary;
};

// Rasterizes every chart of a UV-equipped mesh at texel centers. Texels are
// claimed at most once because charts live in disjoint cells.
TexelMap build_texel_map(const TriMesh& mesh, int atlas_size);

}  // namespace vflow
