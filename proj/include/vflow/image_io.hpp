// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>

#include "vflow/atlas.hpp"
#include "vflow/render.hpp"

namespace vflow {

// Grayscale image as text PGM (P2, 16-bit), values clamped from [0,1].
// Output is byte-stable for identical inputs.
void save_pgm(const std::string& path, const Eigen::ArrayXXd& image);
Eigen::ArrayXXd load_pgm(const std::string& path);

struct PpmImage {
  int width = 0;
  int height = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3> rgb;  // row-major pixels, [0,1]
};

// Color image as binary PPM (P6, 8-bit), values clamped from [0,1].
void save_ppm(const std::string& path, int width, int height,
              const Eigen::Matrix<double, Eigen::Dynamic, 3>& rgb);
void save_ppm(const std::string& path, const ViewImage& view);
void save_ppm(const std::string& path, const UvTexture& texture);
PpmImage load_ppm(const std::string& path);

}  // namespace vflow
