// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/obj_io.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vflow/image_io.hpp"

namespace vflow {

namespace {

std::string basename_of(const std::string& prefix) {
  auto slash = prefix.find_last_of('/');
  return slash == std::string::npos ? prefix : prefix.substr(slash + 1);
}

}  // namespace

void export_obj(const TriMesh& mesh, const UvTexture* texture, const std::string& prefix) {
  const std::string base = basename_of(prefix);
  const bool with_uvs = texture != nullptr && mesh.has_uvs();

  {
    std::ofstream mtl(prefix + ".mtl", std::ios::binary);
    if (!mtl) throw std::runtime_error(prefix + ".mtl: cannot open for writing");
    mtl << "newmtl surface\n";
    mtl << "Ka 0 0 0\n";
    mtl << "Kd 0.7 0.7 0.7\n";
    mtl << "Ks 0 0 0\n";
    if (texture != nullptr) {
      mtl << "map_Kd " << base << ".ppm\n";
      save_ppm(prefix + ".ppm", *texture);
    }
  }

  std::ofstream out(prefix + ".obj", std::ios::binary);
  if (!out) throw std::runtime_error(prefix + ".obj: cannot open for writing");
  out << "mtllib " << base << ".mtl\n";
  out << "usemtl surface\n";
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    out << "v " << format_double(mesh.vertices(v, 0)) << ' ' << format_double(mesh.vertices(v, 1))
        << ' ' << format_double(mesh.vertices(v, 2)) << '\n';
  if (with_uvs)
    for (Index t = 0; t < mesh.uvs.rows(); ++t)
      out << "vt " << format_double(mesh.uvs(t, 0)) << ' ' << format_double(mesh.uvs(t, 1))
          << '\n';
  for (Index v = 0; v < mesh.normals.rows(); ++v)
    out << "vn " << format_double(mesh.normals(v, 0)) << ' ' << format_double(mesh.normals(v, 1))
        << ' ' << format_double(mesh.normals(v, 2)) << '\n';
  for (Index f = 0; f < mesh.triangle_count(); ++f) {
    out << 'f';
    for (int c = 0; c < 3; ++c) {
      int vi = mesh.triangles(f, c) + 1;
      if (with_uvs)
        out << ' ' << vi << '/' << f * 3 + c + 1 << '/' << vi;
      else
        out << ' ' << vi << "//" << vi;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error(prefix + ".obj: write failed");
}

TriMesh parse_obj(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");

  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector2d> uvs;
  std::vector<Eigen::Vector3d> norms;
  struct Corner {
    int v = -1;
    int t = -1;
    int n = -1;
  };
  std::vector<std::array<Corner, 3>> faces;

  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      ls >> p.x() >> p.y() >> p.z();
      verts.push_back(p);
    } else if (tag == "vt") {
      Eigen::Vector2d t;
      ls >> t.x() >> t.y();
      uvs.push_back(t);
    } else if (tag == "vn") {
      Eigen::Vector3d n;
      ls >> n.x() >> n.y() >> n.z();
      norms.push_back(n);
    } else if (tag == "f") {
      std::array<Corner, 3> face;
      for (int c = 0; c < 3; ++c) {
        std::string ref;
        if (!(ls >> ref)) throw std::runtime_error(path + ": face with fewer than 3 corners");
        Corner corner;
        std::size_t s1 = ref.find('/');
        corner.v = std::stoi(ref.substr(0, s1)) - 1;
        if (s1 != std::string::npos) {
          std::size_t s2 = ref.find('/', s1 + 1);
          std::string t = ref.substr(s1 + 1, s2 == std::string::npos ? std::string::npos
                                                                     : s2 - s1 - 1);
          if (!t.empty()) corner.t = std::stoi(t) - 1;
          if (s2 != std::string::npos && s2 + 1 < ref.size())
            corner.n = std::stoi(ref.substr(s2 + 1)) - 1;
        }
        face[c] = corner;
      }
      std::string extra;
      if (ls >> extra) throw std::runtime_error(path + ": non-triangle face");
      faces.push_back(face);
    }
  }

  TriMesh mesh;
  mesh.vertices.resize(static_cast<Index>(verts.size()), 3);
  for (std::size_t v = 0; v < verts.size(); ++v) mesh.vertices.row(v) = verts[v].transpose();
  mesh.triangles.resize(static_cast<Index>(faces.size()), 3);
  mesh.normals = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(mesh.vertices.rows(), 3);
  bool any_uv = false;
  for (const auto& face : faces)
    for (const Corner& c : face) any_uv = any_uv || c.t >= 0;
  if (any_uv) mesh.uvs = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(faces.size() * 3, 2);

  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int c = 0; c < 3; ++c) {
      const Corner& corner = faces[f][c];
      if (corner.v < 0 || corner.v >= static_cast<int>(verts.size()))
        throw std::runtime_error(path + ": vertex index out of range");
      mesh.triangles(static_cast<Index>(f), c) = corner.v;
      if (corner.n >= 0 && corner.n < static_cast<int>(norms.size()))
        mesh.normals.row(corner.v) = norms[corner.n].transpose();
      if (corner.t >= 0 && corner.t < static_cast<int>(uvs.size()))
        mesh.uvs.row(static_cast<Index>(f) * 3 + c) = uvs[corner.t].transpose();
    }
  return mesh;
}

}  // namespace vflow
