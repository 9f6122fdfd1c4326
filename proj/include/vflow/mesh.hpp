// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "vflow/grid.hpp"

namespace vflow {

// Triangle mesh in normalized [0,1]^3 coordinates. Normals are per vertex.
// UVs, when present, are per triangle corner (row 3*t + c): every triangle
// owns a private atlas chart, so corners of a shared vertex carry distinct
// texture coordinates.
struct TriMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;
  Eigen::Matrix<double, Eigen::Dynamic, 3> normals;
  Eigen::Matrix<double, Eigen::Dynamic, 2> uvs;

  Index vertex_count() const { return vertices.rows(); }
  Index triangle_count() const { return triangles.rows(); }
  bool empty() const { return triangles.rows() == 0; }
  bool has_uvs() const { return uvs.rows() == triangles.rows() * 3 && triangles.rows() > 0; }
};

// Classic 256-case lookup tables; see src/mc_tables.cpp for the layout notes.
extern const int kMcEdgeTable[256];
extern const int kMcTriTable[256][16];

// Extracts the iso-surface of the scalar grid sampled at voxel centers.
// Vertices are welded on shared cell edges, positions linearly interpolated,
// triangles wound so normals point toward the low-value side (outward for
// occupancy grids). A grid entirely above or below iso yields an empty mesh.
TriMesh marching_cubes(const VoxelGridd& grid, double iso = 0.5);

// Area-weighted per-vertex normals, normalized to unit length.
void compute_vertex_normals(TriMesh& mesh);

double surface_area(const TriMesh& mesh);

// Divergence-theorem volume; positive when triangles are wound outward.
double signed_volume(const TriMesh& mesh);

// V - E + F with E counted over unique undirected edges.
long euler_characteristic(const TriMesh& mesh);

// True when every undirected edge is shared by exactly two triangles with
// opposite orientations.
bool watertight(const TriMesh& mesh);

// Symmetric mean nearest-neighbor distance between the two vertex clouds.
double chamfer_distance(const TriMesh& a, const TriMesh& b);

}  // namespace vflow
