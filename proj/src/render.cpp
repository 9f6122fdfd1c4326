// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/render.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "vflow/resample.hpp"

namespace vflow {

Eigen::Vector3d OrthoCamera::project(const Eigen::Vector3d& p, int width, int height) const {
  Eigen::Vector3d rel = p - center;
  double col = (rel.dot(right()) / extent + 0.5) * width;
  double row = (-rel.dot(up) / extent + 0.5) * height;
  return {col, row, rel.dot(dir)};
}

OrthoCamera front_camera() { return OrthoCamera{}; }

std::vector<OrthoCamera> ring_cameras(int count, double elevation, double extent) {
  require_arg(count >= 1, "ring_cameras: count must be >= 1");
  std::vector<OrthoCamera> cams;
  cams.reserve(count);
  const double sphi = std::sin(elevation);
  const double cphi = std::cos(elevation);
  for (int v = 0; v < count; ++v) {
    double theta = 2.0 * kPi * v / count;
    OrthoCamera cam;
    cam.dir = Eigen::Vector3d(sphi, cphi * std::sin(theta), cphi * std::cos(theta));
    cam.up = (Eigen::Vector3d(-1.0, 0.0, 0.0) + sphi * cam.dir).normalized();
    cam.center = Eigen::Vector3d(0.5, 0.5, 0.5);
    cam.extent = extent;
    cams.push_back(cam);
  }
  return cams;
}

namespace {

void check_camera(const OrthoCamera& cam) {
  require_arg(std::abs(cam.dir.norm() - 1.0) < 1e-6 && std::abs(cam.up.norm() - 1.0) < 1e-6,
              "camera: dir and up must be unit length");
  require_arg(std::abs(cam.dir.dot(cam.up)) < 1e-6, "camera: dir and up must be orthogonal");
  require_arg(cam.extent > 0.0, "camera: extent must be positive");
}

// Depth-tested scanline pass over every triangle. `shade` runs for each
// pixel the triangle wins at the moment it wins; a later triangle can win
// the same pixel again, so shading must be a pure overwrite.
void rasterize(const TriMesh& mesh, const OrthoCamera& cam, int width, int height,
               Eigen::ArrayXXd& depth,
               const std::function<void(int row, int col, Index f, const Eigen::Vector3d& bary,
                                        double z)>& shade) {
  depth = Eigen::ArrayXXd::Constant(height, width, std::numeric_limits<double>::infinity());
  for (Index f = 0; f < mesh.triangle_count(); ++f) {
    Eigen::Vector3d pa = cam.project(mesh.vertices.row(mesh.triangles(f, 0)), width, height);
    Eigen::Vector3d pb = cam.project(mesh.vertices.row(mesh.triangles(f, 1)), width, height);
    Eigen::Vector3d pc = cam.project(mesh.vertices.row(mesh.triangles(f, 2)), width, height);
    double denom = (pb.x() - pa.x()) * (pc.y() - pa.y()) - (pc.x() - pa.x()) * (pb.y() - pa.y());
    if (denom == 0.0) continue;
    int x0 = std::max(0, static_cast<int>(std::floor(std::min({pa.x(), pb.x(), pc.x()}))));
    int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({pa.x(), pb.x(), pc.x()}))));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min({pa.y(), pb.y(), pc.y()}))));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({pa.y(), pb.y(), pc.y()}))));
    for (int row = y0; row <= y1; ++row)
      for (int col = x0; col <= x1; ++col) {
        double px = col + 0.5;
        double py = row + 0.5;
        double lb = ((px - pa.x()) * (pc.y() - pa.y()) - (pc.x() - pa.x()) * (py - pa.y())) / denom;
        double lc = ((pb.x() - pa.x()) * (py - pa.y()) - (px - pa.x()) * (pb.y() - pa.y())) / denom;
        double la = 1.0 - lb - lc;
        const double eps = -1e-12;
        if (la < eps || lb < eps || lc < eps) continue;
        double z = la * pa.z() + lb * pb.z() + lc * pc.z();
        if (z < depth(row, col)) {
          depth(row, col) = z;
          shade(row, col, f, Eigen::Vector3d(la, lb, lc), z);
        }
      }
  }
}

}  // namespace

ViewImage render_view(const TriMesh& mesh, const OrthoCamera& camera, int width, int height,
                      const RenderStyle& style) {
  check_camera(camera);
  require_arg(width >= 1 && height >= 1, "render_view: bad raster size");
  if (style.texture != nullptr)
    require_arg(mesh.has_uvs() || mesh.empty(), "render_view: texture needs UVs");

  ViewImage view;
  view.width = width;
  view.height = height;
  view.camera = camera;
  view.rgb = style.background.transpose().replicate(static_cast<Index>(width) * height, 1);

  Eigen::ArrayXXd depth;
  rasterize(mesh, camera, width, height, depth,
            [&](int row, int col, Index f, const Eigen::Vector3d& bary, double) {
              Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(f, 0));
              Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(f, 1));
              Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(f, 2));
              Eigen::Vector3d albedo = style.base_color;
              if (style.texture != nullptr) {
                const UvTexture& tex = *style.texture;
                Eigen::Vector2d uv = bary.x() * mesh.uvs.row(f * 3 + 0) +
                                     bary.y() * mesh.uvs.row(f * 3 + 1) +
                                     bary.z() * mesh.uvs.row(f * 3 + 2);
                int tx = std::clamp(static_cast<int>(std::floor(uv.x() * tex.size)), 0,
                                    tex.size - 1);
                int ty = std::clamp(static_cast<int>(std::floor(uv.y() * tex.size)), 0,
                                    tex.size - 1);
                Index idx = static_cast<Index>(ty) * tex.size + tx;
                if (tex.valid[static_cast<std::size_t>(idx)]) albedo = tex.rgb.row(idx);
              } else if (style.field != nullptr) {
                Eigen::Vector3d pos = bary.x() * a + bary.y() * b + bary.z() * c;
                Eigen::VectorXd channels(style.field->feature_dim);
                sample_field(*style.field, pos, channels.data());
                albedo = channels.head(3).cwiseMax(0.0).cwiseMin(1.0);
              }
              if (style.shaded) {
                Eigen::Vector3d n = (b - a).cross(c - a);
                double len = n.norm();
                double facing = len > 0.0 ? std::max(0.0, -n.dot(camera.dir) / len) : 0.0;
                albedo *= 0.2 + 0.8 * facing;
              }
              view.rgb.row(static_cast<Index>(row) * width + col) =
                  albedo.cwiseMax(0.0).cwiseMin(1.0).transpose();
            });
  return view;
}

ViewImage render_view(const VoxelGridd& grid, double iso, const OrthoCamera& camera, int width,
                      int height, const RenderStyle& style) {
  return render_view(marching_cubes(grid, iso), camera, width, height, style);
}

Eigen::ArrayXXd render_depth(const TriMesh& mesh, const OrthoCamera& camera, int width,
                             int height) {
  check_camera(camera);
  require_arg(width >= 1 && height >= 1, "render_depth: bad raster size");
  Eigen::ArrayXXd depth;
  rasterize(mesh, camera, width, height, depth,
            [](int, int, Index, const Eigen::Vector3d&, double) {});
  return depth;
}

Eigen::ArrayXXd view_coverage(const ViewImage& view, const Eigen::Vector3d& background) {
  Eigen::ArrayXXd mask(view.height, view.width);
  for (int row = 0; row < view.height; ++row)
    for (int col = 0; col < view.width; ++col) {
      Eigen::Vector3d c = view.rgb.row(static_cast<Index>(row) * view.width + col);
      mask(row, col) = (c - background).cwiseAbs().maxCoeff() > 0.0 ? 1.0 : 0.0;
    }
  return mask;
}

}  // namespace vflow
