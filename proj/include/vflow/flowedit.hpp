// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>

#include "vflow/flow.hpp"
#include "vflow/grid.hpp"
#include "vflow/silhouette.hpp"

namespace vflow {

struct FlowEditConfig {
  int steps = 25;
  double cfg_src = 5.0;
  double cfg_tgt = 10.0;
  int n_avg = 2;
  double gamma = 0.1;  // trajectory-correction weight
  double eta = 2.5;    // silhouette-guidance weight (after norm matching)
  double kappa = 0.25;
  std::uint64_t seed = 0;
  bool guidance_enabled = true;
};

// State pair produced by coupling a fresh noise draw to the current edit
// state: the source path point and the target point sharing its noise.
struct CoupledStates {
  Eigen::VectorXd x_src_t;
  Eigen::VectorXd x_tgt_t;
};

// Couples the current state x_t to the source path at time t with one noise
// draw: x_src_t walks the linear path from x_src0, and x_tgt_t keeps the
// accumulated edit offset x_t - x_src0 on top of it.
CoupledStates couple_states(const Eigen::VectorXd& x_src0, const Eigen::VectorXd& x_t, double t,
                            Rng& rng);

// Inversion-free editing velocity: the mean over the sample seeds of the
// guided velocity difference between the target and source branches at
// coupled states. One coupling draw per seed.
Eigen::VectorXd edit_velocity(const VelocityField& model, const Eigen::VectorXd& x_src0,
                              const Eigen::VectorXd& x_t, double t, const Condition& cond_src,
                              const Condition& cond_tgt, double cfg_src, double cfg_tgt,
                              std::span<const std::uint64_t> sample_seeds);

// One-step denoised estimates of both branches:
// x_hat = x_t - t * v(x_t, t | c) with the branch's guidance scale.
struct CleanEstimates {
  Eigen::VectorXd x_hat_src;
  Eigen::VectorXd x_hat_tgt;
};
CleanEstimates clean_estimates(const VelocityField& model, const Eigen::VectorXd& x_src_t,
                               const Eigen::VectorXd& x_tgt_t, double t, const Condition& cond_src,
                               const Condition& cond_tgt, double cfg_src, double cfg_tgt);

// Residual pulling the edit toward the source's denoised trajectory:
// xi = x_hat_tgt - x_hat_src.
Eigen::VectorXd trajectory_correction(const CleanEstimates& est);

// Observer invoked after each iteration with the step index about to be
// reached, its time knot, and the state.
using EditObserver = std::function<void(int step, double t, const Eigen::VectorXd& x)>;

// Masked, silhouette-guided edit of a structure latent.
//
// Starting from the source latent at t = 1, each iteration advances the
// masked edit velocity, then adds the masked correction
//     gamma * xi - eta * G_sil,
// where G_sil is the negative silhouette-energy gradient of the intermediate
// state norm-matched to the edit velocity. Steps walk t from 1 to 0 with
// negative dt, so the -eta * G_sil term descends the silhouette energy.
// Voxels with zero mask weight stay bit-exactly at x_src0. With guidance
// disabled both correction terms are skipped.
StructureLatentd flowedit_run(const VelocityField& model, const StructureLatentd& x_src0,
                              const EditMaskd& mask, const Condition& cond_src,
                              const Condition& cond_tgt, const Eigen::MatrixXd& sil_target,
                              const FlowEditConfig& config, const EditObserver& observer = {});

}  // namespace vflow
