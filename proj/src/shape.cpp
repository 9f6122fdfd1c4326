// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/shape.hpp"

#include <fstream>
#include <sstream>

#include "vflow/common.hpp"

namespace vflow {

namespace {

bool primitive_contains(const ShapeSpec& s, const Eigen::Vector3d& p) {
  Eigen::Vector3d d = p - s.center;
  switch (s.kind) {
    case ShapeSpec::Kind::Sphere:
      return d.squaredNorm() <= s.size[0] * s.size[0];
    case ShapeSpec::Kind::Box:
      return std::abs(d[0]) <= s.size[0] && std::abs(d[1]) <= s.size[1] &&
             std::abs(d[2]) <= s.size[2];
    case ShapeSpec::Kind::Cylinder:
      return d[0] * d[0] + d[1] * d[1] <= s.size[0] * s.size[0] &&
             std::abs(d[2]) <= s.size[2];
  }
  return false;
}

const char* kind_name(ShapeSpec::Kind k) {
  switch (k) {
    case ShapeSpec::Kind::Sphere: return "sphere";
    case ShapeSpec::Kind::Box: return "box";
    case ShapeSpec::Kind::Cylinder: return "cylinder";
  }
  return "sphere";
}

}  // namespace

bool ShapeSpec::contains(const Eigen::Vector3d& p) const {
  bool inside = primitive_contains(*this, p);
  for (const ShapeSpec& c : children) {
    if (c.op == Op::Union)
      inside = inside || c.contains(p);
    else
      inside = inside && !c.contains(p);
  }
  return inside;
}

VoxelGridd rasterize(const ShapeSpec& spec, int resolution) {
  require_arg(resolution >= 4, "rasterize: resolution must be at least 4");
  VoxelGridd g;
  g.resolution = resolution;
  g.values.resize(static_cast<Index>(resolution) * resolution * resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k)
        g.values[grid_index(resolution, i, j, k)] =
            spec.contains(voxel_center(resolution, i, j, k)) ? 1.0 : 0.0;
  return g;
}

namespace {

void serialize_node(const ShapeSpec& s, std::string& out) {
  out += "kind=";
  out += kind_name(s.kind);
  out += "\ncenter=" + format_double(s.center[0]) + " " + format_double(s.center[1]) + " " +
         format_double(s.center[2]);
  out += "\nsize=" + format_double(s.size[0]) + " " + format_double(s.size[1]) + " " +
         format_double(s.size[2]);
  out += "\nop=";
  out += s.op == ShapeSpec::Op::Union ? "union" : "difference";
  out += "\nchildren=" + std::to_string(s.children.size()) + "\n";
  for (const ShapeSpec& c : s.children) serialize_node(c, out);
}

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    require_arg(eq != std::string::npos, "parse_shape: malformed line");
    require_arg(line.substr(0, eq) == key, "parse_shape: unexpected key");
    return line.substr(eq + 1);
  }
  throw std::invalid_argument("parse_shape: truncated input, expected " + key);
}

Eigen::Vector3d parse_vec3(const std::string& s) {
  std::istringstream is(s);
  std::string a, b, c;
  require_arg(static_cast<bool>(is >> a >> b >> c), "parse_shape: bad vector");
  return {parse_double(a), parse_double(b), parse_double(c)};
}

ShapeSpec parse_node(std::istream& in) {
  ShapeSpec s;
  std::string kind = expect_line(in, "kind");
  if (kind == "sphere")
    s.kind = ShapeSpec::Kind::Sphere;
  else if (kind == "box")
    s.kind = ShapeSpec::Kind::Box;
  else if (kind == "cylinder")
    s.kind = ShapeSpec::Kind::Cylinder;
  else
    throw std::invalid_argument("parse_shape: unknown kind " + kind);
  s.center = parse_vec3(expect_line(in, "center"));
  s.size = parse_vec3(expect_line(in, "size"));
  std::string op = expect_line(in, "op");
  if (op == "union")
    s.op = ShapeSpec::Op::Union;
  else if (op == "difference")
    s.op = ShapeSpec::Op::Difference;
  else
    throw std::invalid_argument("parse_shape: unknown op " + op);
  int n = static_cast<int>(parse_double(expect_line(in, "children")));
  require_arg(n >= 0 && n < 1000, "parse_shape: bad child count");
  for (int i = 0; i < n; ++i) s.children.push_back(parse_node(in));
  return s;
}

}  // namespace

std::string serialize_shape(const ShapeSpec& spec) {
  std::string out;
  serialize_node(spec, out);
  return out;
}

ShapeSpec parse_shape(const std::string& text) {
  std::istringstream in(text);
  return parse_node(in);
}

void save_shape(const ShapeSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_shape: cannot open " + path);
  out << serialize_shape(spec);
}

ShapeSpec load_shape(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_shape: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_shape(ss.str());
}

}  // namespace vflow
