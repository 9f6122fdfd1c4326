// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/train.hpp"

#include <cmath>
#include <cstdio>

namespace vflow {

TrainStats train_flow_model(MlpModel& model, const FlowBatch& dataset, const TrainConfig& cfg) {
  require_arg(!dataset.x0.empty(), "train_flow_model: empty dataset");
  require_arg(dataset.x0.size() == dataset.cond.size(), "train_flow_model: dataset shape mismatch");
  require_arg(cfg.steps >= 1 && cfg.batch >= 1, "train_flow_model: bad step/batch count");
  require_arg(cfg.learning_rate > 0.0, "train_flow_model: bad learning rate");

  TrainStats stats;
  stats.loss.reserve(cfg.steps);

  MlpModel::Gradients grads = MlpModel::Gradients::zeros(model.config());
  MlpModel::Gradients vel = MlpModel::Gradients::zeros(model.config());
  Rng pick(derive_seed(cfg.seed, 0x9c1f));

  // The gate head multiplies the raw state, so its loss curvature carries a
  // factor of E|x_t|^2 that no other parameter group has; a single learning
  // rate is either unstable for the gate or frozen for the trunk. Dividing
  // the gate gradients by the mean squared state norm (data logits at
  // magnitude 1/input_scale, unit noise, averaged over the path) restores
  // one stable rate, and the factor 8 lets the scalar gate settle within a
  // few hundred steps while staying far below the stability bound.
  const double data_ms = 1.0 / (model.config().input_scale * model.config().input_scale);
  const double state_ms =
      static_cast<double>(model.config().latent_dim) * (1.0 + data_ms) / 3.0;
  const double gate_scale = 8.0 / state_ms;

  for (int step = 0; step < cfg.steps; ++step) {
    FlowBatch batch;
    batch.x0.reserve(cfg.batch);
    batch.cond.reserve(cfg.batch);
    for (int b = 0; b < cfg.batch; ++b) {
      int idx = pick.uniform_int(static_cast<int>(dataset.x0.size()));
      batch.x0.push_back(dataset.x0[idx]);
      batch.cond.push_back(dataset.cond[idx]);
    }

    for (auto& g : grads.param_views()) g.setZero();
    double loss = flow_matching_loss(model, batch, derive_seed(cfg.seed, 0x51e9, step),
                                     cfg.cond_dropout, &grads);
    if (!std::isfinite(loss))
      throw TrainingError("training loss diverged at step " + std::to_string(step), step);
    stats.loss.push_back(loss);
    grads.gate_w *= gate_scale;
    grads.gate_b *= gate_scale;

    double frac = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 0.0;
    double lr = cfg.learning_rate * (1.0 - (1.0 - cfg.decay_floor) * frac);

    auto params = model.param_views();
    auto gviews = grads.param_views();
    auto vviews = vel.param_views();
    for (size_t i = 0; i < params.size(); ++i) {
      vviews[i] = cfg.momentum * vviews[i] - lr * gviews[i];
      params[i] += vviews[i];
    }

    if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
      std::printf("step %6d  loss %.6f  lr %.2e\n", step, loss, lr);
  }
  return stats;
}

double evaluate_loss(const MlpModel& model, const FlowBatch& dataset, std::uint64_t seed,
                     int rounds) {
  require_arg(!dataset.x0.empty(), "evaluate_loss: empty dataset");
  require_arg(rounds >= 1, "evaluate_loss: rounds must be >= 1");
  double acc = 0.0;
  for (int r = 0; r < rounds; ++r)
    acc += flow_matching_loss(model, dataset, derive_seed(seed, 0xe7a1, r));
  return acc / rounds;
}

}  // namespace vflow
