// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace vflow {

namespace {

[[noreturn]] void fail(const std::string& path, const char* what) {
  throw std::runtime_error(path + ": " + what);
}

int quantize(double v, int maxval) {
  long q = std::lround(std::min(1.0, std::max(0.0, v)) * maxval);
  return static_cast<int>(std::min<long>(maxval, std::max<long>(0, q)));
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    tok.push_back(static_cast<char>(c));
    while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
    break;
  }
  return tok;
}

}  // namespace

void save_pgm(const std::string& path, const Eigen::ArrayXXd& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P2\n" << image.cols() << " " << image.rows() << "\n65535\n";
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      if (c) out << ' ';
      out << quantize(image(r, c), 65535);
    }
    out << '\n';
  }
  if (!out) fail(path, "write failed");
}

Eigen::ArrayXXd load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  if (next_token(in) != "P2") fail(path, "not a P2 PGM");
  int w = std::stoi(next_token(in));
  int h = std::stoi(next_token(in));
  int maxval = std::stoi(next_token(in));
  if (w < 1 || h < 1 || maxval < 1) fail(path, "bad PGM header");
  Eigen::ArrayXXd image(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      std::string tok = next_token(in);
      if (tok.empty()) fail(path, "truncated PGM");
      image(r, c) = std::stod(tok) / maxval;
    }
  return image;
}

void save_ppm(const std::string& path, int width, int height,
              const Eigen::Matrix<double, Eigen::Dynamic, 3>& rgb) {
  require_arg(rgb.rows() == static_cast<Index>(width) * height, "save_ppm: shape mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P6\n" << width << " " << height << "\n255\n";
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(rgb.rows()) * 3);
  for (Index p = 0; p < rgb.rows(); ++p)
    for (int c = 0; c < 3; ++c) bytes.push_back(static_cast<char>(quantize(rgb(p, c), 255)));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

void save_ppm(const std::string& path, const ViewImage& view) {
  save_ppm(path, view.width, view.height, view.rgb);
}

void save_ppm(const std::string& path, const UvTexture& texture) {
  save_ppm(path, texture.size, texture.size, texture.rgb);
}

PpmImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  if (next_token(in) != "P6") fail(path, "not a P6 PPM");
  int w = std::stoi(next_token(in));
  int h = std::stoi(next_token(in));
  int maxval = std::stoi(next_token(in));
  if (w < 1 || h < 1 || maxval != 255) fail(path, "bad PPM header");
  PpmImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<Index>(w) * h, 3);
  std::string bytes(static_cast<std::size_t>(w) * h * 3, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) fail(path, "truncated PPM");
  for (Index p = 0; p < img.rgb.rows(); ++p)
    for (int c = 0; c < 3; ++c)
      img.rgb(p, c) = static_cast<unsigned char>(bytes[p * 3 + c]) / 255.0;
  return img;
}

}  // namespace vflow
