// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/flowedit.hpp"

namespace vflow {

CoupledStates couple_states(const Eigen::VectorXd& x_src0, const Eigen::VectorXd& x_t, double t,
                            Rng& rng) {
  require_arg(x_src0.size() == x_t.size(), "couple_states: shape mismatch");
  require_arg(t >= 0.0 && t <= 1.0, "couple_states: t out of range");
  Eigen::VectorXd eps = rng.normal_vec(x_src0.size());
  CoupledStates s;
  s.x_src_t = (1.0 - t) * x_src0 + t * eps;
  s.x_tgt_t = s.x_src_t + (x_t - x_src0);
  return s;
}

namespace {

struct BranchVelocities {
  CoupledStates states;
  Eigen::VectorXd v_src;
  Eigen::VectorXd v_tgt;
};

BranchVelocities branch_velocities(const VelocityField& model, const Eigen::VectorXd& x_src0,
                                   const Eigen::VectorXd& x_t, double t, const Condition& cond_src,
                                   const Condition& cond_tgt, double cfg_src, double cfg_tgt,
                                   std::uint64_t seed) {
  Rng rng(seed);
  BranchVelocities bv;
  bv.states = couple_states(x_src0, x_t, t, rng);
  bv.v_tgt = cfg_velocity(model, bv.states.x_tgt_t, t, cond_tgt, cfg_tgt);
  bv.v_src = cfg_velocity(model, bv.states.x_src_t, t, cond_src, cfg_src);
  return bv;
}

}  // namespace

Eigen::VectorXd edit_velocity(const VelocityField& model, const Eigen::VectorXd& x_src0,
                              const Eigen::VectorXd& x_t, double t, const Condition& cond_src,
                              const Condition& cond_tgt, double cfg_src, double cfg_tgt,
                              std::span<const std::uint64_t> sample_seeds) {
  require_arg(!sample_seeds.empty(), "edit_velocity: needs at least one sample seed");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x_src0.size());
  for (std::uint64_t s : sample_seeds) {
    BranchVelocities bv =
        branch_velocities(model, x_src0, x_t, t, cond_src, cond_tgt, cfg_src, cfg_tgt, s);
    acc += bv.v_tgt - bv.v_src;
  }
  return acc / static_cast<double>(sample_seeds.size());
}

CleanEstimates clean_estimates(const VelocityField& model, const Eigen::VectorXd& x_src_t,
                               const Eigen::VectorXd& x_tgt_t, double t, const Condition& cond_src,
                               const Condition& cond_tgt, double cfg_src, double cfg_tgt) {
  require_arg(x_src_t.size() == x_tgt_t.size(), "clean_estimates: shape mismatch");
  CleanEstimates est;
  est.x_hat_src = x_src_t - t * cfg_velocity(model, x_src_t, t, cond_src, cfg_src);
  est.x_hat_tgt = x_tgt_t - t * cfg_velocity(model, x_tgt_t, t, cond_tgt, cfg_tgt);
  return est;
}

Eigen::VectorXd trajectory_correction(const CleanEstimates& est) {
  return est.x_hat_tgt - est.x_hat_src;
}

StructureLatentd flowedit_run(const VelocityField& model, const StructureLatentd& x_src0,
                              const EditMaskd& mask, const Condition& cond_src,
                              const Condition& cond_tgt, const Eigen::MatrixXd& sil_target,
                              const FlowEditConfig& config, const EditObserver& observer) {
  const int r = x_src0.resolution;
  const Index n = x_src0.logits.size();
  require_arg(r > 0 && n == static_cast<Index>(r) * r * r, "flowedit_run: latent shape mismatch");
  require_arg(model.dim() == n, "flowedit_run: model/latent dim mismatch");
  require_arg(mask.resolution == r && mask.weights.size() == n,
              "flowedit_run: mask shape mismatch");
  require_arg(config.steps >= 1, "flowedit_run: steps must be >= 1");
  require_arg(config.n_avg >= 1, "flowedit_run: n_avg must be >= 1");
  if (config.guidance_enabled && config.eta != 0.0)
    require_arg(sil_target.rows() == r && sil_target.cols() == r,
                "flowedit_run: silhouette target shape mismatch");

  const Eigen::VectorXd src = x_src0.logits.matrix();
  const Eigen::ArrayXd maskw = mask.weights;
  Eigen::VectorXd x = src;

  for (int i = config.steps; i >= 1; --i) {
    const double t = static_cast<double>(i) / config.steps;
    const double dt = static_cast<double>(i - 1) / config.steps - t;

    Eigen::VectorXd v_edit = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < config.n_avg; ++j) {
      BranchVelocities bv = branch_velocities(
          model, src, x, t, cond_src, cond_tgt, config.cfg_src, config.cfg_tgt,
          derive_seed(config.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
      v_edit += bv.v_tgt - bv.v_src;
      if (config.guidance_enabled)
        xi += (bv.states.x_tgt_t - t * bv.v_tgt) - (bv.states.x_src_t - t * bv.v_src);
    }
    v_edit /= config.n_avg;

    Eigen::VectorXd x_next = x + dt * (maskw * v_edit.array()).matrix();
    if (config.guidance_enabled) {
      xi /= config.n_avg;
      Eigen::VectorXd correction = config.gamma * xi;
      if (config.eta != 0.0) {
        StructureLatentd intermediate{r, x_next.array()};
        Eigen::VectorXd g_sil = -norm_match(
            energy_gradient(intermediate, sil_target, config.kappa).matrix(), v_edit);
        correction -= config.eta * g_sil;
      }
      x_next += dt * (maskw * correction.array()).matrix();
    }

    // Masked voxels are pinned to the source latent outright rather than
    // relying on +-0 arithmetic to cancel.
    x = (maskw != 0.0).select(x_next.array(), src.array()).matrix();
    if (observer) observer(i - 1, t + dt, x);
  }

  StructureLatentd out;
  out.resolution = r;
  out.logits = x.array();
  return out;
}

}  // namespace vflow
