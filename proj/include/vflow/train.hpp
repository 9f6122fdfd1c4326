// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vflow/mlp.hpp"

namespace vflow {

struct TrainConfig {
  double learning_rate = 2e-4;
  int steps = 2000;
  int batch = 16;
  double cond_dropout = 0.1;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  // Linear learning-rate decay down to decay_floor * learning_rate at the
  // final step.
  double decay_floor = 0.1;
  int log_every = 0;  // 0 disables progress lines
};

// Thrown when the objective stops being finite; carries the failing step.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct TrainStats {
  std::vector<double> loss;  // per-step training loss
};

// Plain SGD with momentum on the flow-matching objective. Batches are drawn
// with replacement from the dataset; every draw derives from the config
// seed, so runs are reproducible.
TrainStats train_flow_model(MlpModel& model, const FlowBatch& dataset, const TrainConfig& cfg);

// Flow-matching loss of a model over a fixed evaluation set, averaged over
// `rounds` seeded draws of (t, noise) per element. No condition dropout.
double evaluate_loss(const MlpModel& model, const FlowBatch& dataset, std::uint64_t seed,
                     int rounds = 4);

}  // namespace vflow
