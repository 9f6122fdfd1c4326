// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/repaint.hpp"

namespace vflow {

EditMaskd build_feature_mask(const EditMaskd& mesh_mask, const Eigen::ArrayXd& activity,
                             int latent_res, double sigma_b, int dilation) {
  const Index n = static_cast<Index>(latent_res) * latent_res * latent_res;
  require_arg(activity.size() == n, "build_feature_mask: activity shape mismatch");
  EditMaskd reduced = downsample_mask(mesh_mask, latent_res, dilation);
  EditMaskd feathered = feather(reduced, sigma_b);
  feathered.weights *= activity;
  return feathered;
}

Eigen::ArrayXd expand_mask(const EditMaskd& mask, int feature_dim) {
  require_arg(feature_dim >= 1, "expand_mask: feature_dim must be >= 1");
  Eigen::ArrayXd out(mask.weights.size() * feature_dim);
  for (Index v = 0; v < mask.weights.size(); ++v)
    out.segment(v * feature_dim, feature_dim).setConstant(mask.weights[v]);
  return out;
}

Eigen::VectorXd repaint_step(const Eigen::VectorXd& z_k, double t_k, double t_prev,
                             const Eigen::ArrayXd& weights, const Eigen::VectorXd& z_src,
                             const VelocityField& model, const Condition& cond, double cfg_scale,
                             Rng& rng) {
  const Index n = z_k.size();
  require_arg(z_src.size() == n && weights.size() == n, "repaint_step: shape mismatch");
  require_arg(model.dim() == n, "repaint_step: model dim mismatch");
  require_arg(t_k > 0.0 && t_k <= 1.0 && t_prev >= 0.0 && t_prev < t_k,
              "repaint_step: bad time pair");

  Eigen::VectorXd eps = rng.normal_vec(n);
  Eigen::VectorXd generated = z_k + (t_prev - t_k) * cfg_velocity(model, z_k, t_k, cond, cfg_scale);
  Eigen::VectorXd anchored = t_prev == 0.0 ? z_src : ((1.0 - t_prev) * z_src + t_prev * eps).eval();

  Eigen::VectorXd out(n);
  for (Index idx = 0; idx < n; ++idx) {
    double m = weights[idx];
    if (m == 0.0)
      out[idx] = anchored[idx];
    else if (m == 1.0)
      out[idx] = generated[idx];
    else
      out[idx] = m * generated[idx] + (1.0 - m) * anchored[idx];
  }
  return out;
}

Eigen::VectorXd repaint_run(const Eigen::VectorXd& z_src, const Eigen::ArrayXd& weights,
                            const VelocityField& model, const Condition& cond,
                            const RepaintConfig& config) {
  require_arg(config.steps >= 1, "repaint_run: steps must be >= 1");
  require_arg(z_src.size() == weights.size(), "repaint_run: shape mismatch");
  Rng init(derive_seed(config.seed, 0x7a11));
  Eigen::VectorXd z = init.normal_vec(z_src.size());
  for (int k = config.steps; k >= 1; --k) {
    double t_k = static_cast<double>(k) / config.steps;
    double t_prev = static_cast<double>(k - 1) / config.steps;
    Rng rng(derive_seed(config.seed, 0x5e9d, static_cast<std::uint64_t>(k)));
    z = repaint_step(z, t_k, t_prev, weights, z_src, model, cond, config.cfg_scale, rng);
  }
  return z;
}

}  // namespace vflow
