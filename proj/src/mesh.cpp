// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vflow {

namespace {

// Cell corner offsets, bottom ring 0-3 then top ring 4-7.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TriMesh marching_cubes(const VoxelGridd& grid, double iso) {
  require_arg(iso > 0.0 && iso < 1.0, "marching_cubes: iso must lie in (0,1)");
  const int r = grid.resolution;
  TriMesh mesh;

  std::vector<double> verts;
  std::vector<int> tris;
  // Welds vertices on shared cell edges: key encodes (axis, base voxel).
  std::unordered_map<std::uint64_t, int> edge_vertex;
  edge_vertex.reserve(4096);

  auto value = [&](int i, int j, int k) { return grid.values[grid_index(r, i, j, k)]; };

  for (int ci = 0; ci + 1 < r; ++ci)
    for (int cj = 0; cj + 1 < r; ++cj)
      for (int ck = 0; ck + 1 < r; ++ck) {
        double val[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          val[c] = value(ci + kCorner[c][0], cj + kCorner[c][1], ck + kCorner[c][2]);
          if (val[c] < iso) cube |= 1 << c;
        }
        const int cut = kMcEdgeTable[cube];
        if (cut == 0) continue;

        int edge_vid[12];
        for (int e = 0; e < 12; ++e) {
          if (!(cut & (1 << e))) continue;
          int ca = kEdgeCorners[e][0];
          int cb = kEdgeCorners[e][1];
          int ax[3] = {ci + kCorner[ca][0], cj + kCorner[ca][1], ck + kCorner[ca][2]};
          int bx[3] = {ci + kCorner[cb][0], cj + kCorner[cb][1], ck + kCorner[cb][2]};
          // Canonical orientation: interpolate from the lexicographically
          // smaller endpoint so the welded position is computed one way only.
          if (std::make_tuple(ax[0], ax[1], ax[2]) > std::make_tuple(bx[0], bx[1], bx[2])) {
            std::swap(ca, cb);
            std::swap(ax[0], bx[0]);
            std::swap(ax[1], bx[1]);
            std::swap(ax[2], bx[2]);
          }
          int axis = bx[0] != ax[0] ? 0 : (bx[1] != ax[1] ? 1 : 2);
          std::uint64_t key =
              ((static_cast<std::uint64_t>(axis) * (r + 1) + ax[0]) * (r + 1) + ax[1]) * (r + 1) +
              ax[2];
          auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<int>(verts.size() / 3));
          if (inserted) {
            double va = val[ca];
            double vb = val[cb];
            double mu = (iso - va) / (vb - va);
            for (int d = 0; d < 3; ++d) {
              double pa = (ax[d] + 0.5) / r;
              double pb = (bx[d] + 0.5) / r;
              verts.push_back(pa + mu * (pb - pa));
            }
          }
          edge_vid[e] = it->second;
        }

        const int* row = kMcTriTable[cube];
        for (int n = 0; row[n] != -1; n += 3) {
          tris.push_back(edge_vid[row[n]]);
          tris.push_back(edge_vid[row[n + 1]]);
          tris.push_back(edge_vid[row[n + 2]]);
        }
      }

  const Index nv = static_cast<Index>(verts.size() / 3);
  const Index nf = static_cast<Index>(tris.size() / 3);
  mesh.vertices.resize(nv, 3);
  for (Index v = 0; v < nv; ++v)
    mesh.vertices.row(v) << verts[v * 3], verts[v * 3 + 1], verts[v * 3 + 2];
  mesh.triangles.resize(nf, 3);
  for (Index f = 0; f < nf; ++f)
    mesh.triangles.row(f) << tris[f * 3], tris[f * 3 + 1], tris[f * 3 + 2];
  compute_vertex_normals(mesh);
  return mesh;
}

void compute_vertex_normals(TriMesh& mesh) {
  mesh.normals = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(mesh.vertices.rows(), 3);
  for (Index f = 0; f < mesh.triangles.rows(); ++f) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(f, 2));
    Eigen::Vector3d weighted = (b - a).cross(c - a);  // face normal scaled by 2*area
    for (int k = 0; k < 3; ++k) mesh.normals.row(mesh.triangles(f, k)) += weighted.transpose();
  }
  for (Index v = 0; v < mesh.normals.rows(); ++v) {
    double len = mesh.normals.row(v).norm();
    if (len > 1e-300)
      mesh.normals.row(v) /= len;
    else
      mesh.normals.row(v) << 0.0, 0.0, 1.0;
  }
}

double surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (Index f = 0; f < mesh.triangles.rows(); ++f) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(f, 2));
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

double signed_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (Index f = 0; f < mesh.triangles.rows(); ++f) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(f, 2));
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

long euler_characteristic(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  for (Index f = 0; f < mesh.triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k) {
      int a = mesh.triangles(f, k);
      int b = mesh.triangles(f, (k + 1) % 3);
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  return static_cast<long>(mesh.vertices.rows()) - static_cast<long>(edges.size()) +
         static_cast<long>(mesh.triangles.rows());
}

bool watertight(const TriMesh& mesh) {
  if (mesh.empty()) return false;
  // Each undirected edge must occur exactly twice, once per direction.
  std::map<std::pair<int, int>, int> directed;
  for (Index f = 0; f < mesh.triangles.rows(); ++f)
    for (int k = 0; k < 3; ++k) {
      int a = mesh.triangles(f, k);
      int b = mesh.triangles(f, (k + 1) % 3);
      if (a == b) return false;
      directed[{a, b}]++;
    }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

double chamfer_distance(const TriMesh& a, const TriMesh& b) {
  require_arg(a.vertices.rows() > 0 && b.vertices.rows() > 0,
              "chamfer_distance: both meshes need vertices");
  auto one_sided = [](const Eigen::Matrix<double, Eigen::Dynamic, 3>& from,
                      const Eigen::Matrix<double, Eigen::Dynamic, 3>& to) {
    double total = 0.0;
    for (Index i = 0; i < from.rows(); ++i)
      total += (to.rowwise() - from.row(i)).rowwise().norm().minCoeff();
    return total / static_cast<double>(from.rows());
  };
  return 0.5 * (one_sided(a.vertices, b.vertices) + one_sided(b.vertices, a.vertices));
}

}  // namespace vflow
