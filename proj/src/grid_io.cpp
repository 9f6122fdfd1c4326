// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/grid_io.hpp"

#include <fstream>
#include <sstream>

#include "vflow/common.hpp"

namespace vflow {

namespace {

void write_values(std::string& out, const Eigen::ArrayXd& v, int per_line) {
  for (Index n = 0; n < v.size(); ++n) {
    out += format_double(v[n]);
    out += (n + 1) % per_line == 0 ? '\n' : ' ';
  }
  if (v.size() % per_line != 0) out += '\n';
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << body;
  if (!f) throw std::runtime_error("write failed: " + path);
}

Eigen::ArrayXd read_values(std::istream& in, Index count, const std::string& path) {
  Eigen::ArrayXd v(count);
  std::string tok;
  for (Index n = 0; n < count; ++n) {
    if (!(in >> tok)) throw std::runtime_error("truncated field file: " + path);
    v[n] = parse_double(tok);
  }
  return v;
}

}  // namespace

void save_voxgrid(const Eigen::ArrayXd& values, int resolution, const std::string& path) {
  require_arg(values.size() == static_cast<Index>(resolution) * resolution * resolution,
              "save_voxgrid: shape mismatch");
  std::string out = "VOXGRID " + std::to_string(resolution) + "\n";
  write_values(out, values, resolution);
  write_file(path, out);
}

void save_voxgrid(const VoxelGridd& grid, const std::string& path) {
  save_voxgrid(grid.values, grid.resolution, path);
}

void save_voxgrid(const StructureLatentd& latent, const std::string& path) {
  save_voxgrid(latent.logits, latent.resolution, path);
}

void save_voxgrid(const EditMaskd& mask, const std::string& path) {
  save_voxgrid(mask.weights, mask.resolution, path);
}

VoxelGridd load_voxgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int r = 0;
  if (!(in >> magic >> r) || magic != "VOXGRID" || r <= 0)
    throw std::runtime_error("not a VOXGRID file: " + path);
  VoxelGridd g;
  g.resolution = r;
  g.values = read_values(in, static_cast<Index>(r) * r * r, path);
  return g;
}

void save_slat(const SlatFieldd& slat, const std::string& path) {
  const Index n = static_cast<Index>(slat.resolution) * slat.resolution * slat.resolution;
  require_arg(slat.features.size() == n * slat.feature_dim && slat.activity.size() == n,
              "save_slat: shape mismatch");
  std::string out =
      "SLATF " + std::to_string(slat.resolution) + " " + std::to_string(slat.feature_dim) + "\n";
  write_values(out, slat.features, slat.feature_dim * 8);
  write_values(out, slat.activity, 32);
  write_file(path, out);
}

SlatFieldd load_slat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int r = 0, f = 0;
  if (!(in >> magic >> r >> f) || magic != "SLATF" || r <= 0 || f <= 0)
    throw std::runtime_error("not a SLATF file: " + path);
  SlatFieldd s;
  s.resolution = r;
  s.feature_dim = f;
  const Index n = static_cast<Index>(r) * r * r;
  s.features = read_values(in, n * f, path);
  s.activity = read_values(in, n, path);
  return s;
}

}  // namespace vflow
