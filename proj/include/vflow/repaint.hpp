// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "vflow/flow.hpp"
#include "vflow/grid.hpp"

namespace vflow {

struct RepaintConfig {
  int steps = 25;
  double sigma_b = 1.0;     // feather width for the feature mask
  double cfg_scale = 5.0;   // guidance scale for the appearance model
  std::uint64_t seed = 0;
};

// Feathered per-voxel repaint mask: the mesh mask reduced to the latent
// resolution, Gaussian-feathered, and restricted to the active voxel set.
EditMaskd build_feature_mask(const EditMaskd& mesh_mask, const Eigen::ArrayXd& activity,
                             int latent_res, double sigma_b, int dilation = 1);

// Expands a per-voxel mask to per-feature weights (each voxel's weight is
// repeated feature_dim times, matching the SlatField feature layout).
Eigen::ArrayXd expand_mask(const EditMaskd& mask, int feature_dim);

// One repaint iteration from time t_k to t_prev = t_k - 1/K.
//
// Masked features advance the guided conditional flow; unmasked features are
// replaced by the forward-diffused source at the destination time,
// (1 - t_prev) z_src + t_prev * eps. Fractional weights blend the two
// branches element-wise. At t_prev = 0 the anchor branch is z_src itself,
// which pins fully unmasked features to the source bit-exactly.
Eigen::VectorXd repaint_step(const Eigen::VectorXd& z_k, double t_k, double t_prev,
                             const Eigen::ArrayXd& weights, const Eigen::VectorXd& z_src,
                             const VelocityField& model, const Condition& cond, double cfg_scale,
                             Rng& rng);

// Full repaint pass from noise at t = 1 down to t = 0.
Eigen::VectorXd repaint_run(const Eigen::VectorXd& z_src, const Eigen::ArrayXd& weights,
                            const VelocityField& model, const Condition& cond,
                            const RepaintConfig& config);

}  // namespace vflow
