// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "vflow/grid.hpp"

namespace vflow {

// Text dump formats for cubic fields. Values are printed in shortest
// round-trip decimal form, so save/load is lossless for doubles.
//
//   VOXGRID <R>        followed by R^3 values in index order
//   SLATF <R> <F>      followed by R^3*F feature values, then R^3 activity

void save_voxgrid(const Eigen::ArrayXd& values, int resolution, const std::string& path);
void save_voxgrid(const VoxelGridd& grid, const std::string& path);
void save_voxgrid(const StructureLatentd& latent, const std::string& path);
void save_voxgrid(const EditMaskd& mask, const std::string& path);

// Loads a VOXGRID file; the caller interprets the values.
VoxelGridd load_voxgrid(const std::string& path);

void save_slat(const SlatFieldd& slat, const std::string& path);
SlatFieldd load_slat(const std::string& path);

}  // namespace vflow
