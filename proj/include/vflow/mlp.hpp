// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "vflow/flow.hpp"

namespace vflow {

struct MlpConfig {
  Index latent_dim = 0;
  Index cond_dim = 0;
  Index cond_embed = 64;
  Index hidden = 256;
  int hidden_layers = 3;
  int time_freqs = 8;
  // Fixed preconditioning of the trunk input; logits have magnitude ~8, so
  // this keeps first-layer preactivations in tanh's linear range.
  double input_scale = 0.125;
};

// Trainable conditional velocity model.
//
// Trunk input is [scaled latent, sinusoidal time embedding, condition
// embedding]; the condition raster passes through one linear layer. Three
// tanh layers feed a linear output head plus a scalar gate g on the raw
// state,
//     v(x, t | c) = gate * x + W_out h + b_out.
// The gate term lets the network represent near-point-mass fields
// ((x - x0) / t needs a full-rank linear term in x, which a width-limited
// trunk cannot carry on its own).
class MlpModel : public VelocityField {
 public:
  MlpModel() = default;
  explicit MlpModel(const MlpConfig& cfg);

  static MlpModel random_init(const MlpConfig& cfg, std::uint64_t seed);

  const MlpConfig& config() const { return cfg_; }
  Index dim() const override { return cfg_.latent_dim; }

  void eval(const Eigen::Ref<const Eigen::MatrixXd>& states, double t,
            const std::vector<const Condition*>& conds,
            Eigen::Ref<Eigen::MatrixXd> out) const override;

  // Forward pass with per-column times. Keeps the layer activations when a
  // cache is supplied so a backward pass can follow.
  struct Cache {
    Eigen::MatrixXd x;        // raw states
    Eigen::MatrixXd cond;     // condition rasters as columns (zeros when null)
    Eigen::MatrixXd trunk_in; // assembled trunk input
    std::vector<Eigen::MatrixXd> hidden;
    Eigen::RowVectorXd gate;
  };
  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::MatrixXd>& states,
                          const Eigen::VectorXd& times,
                          const std::vector<const Condition*>& conds, Cache* cache = nullptr) const;

  // Parameter gradients, same shapes as the parameters.
  struct Gradients {
    Eigen::MatrixXd cond_w;
    Eigen::VectorXd cond_b;
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::MatrixXd out_w;
    Eigen::VectorXd out_b;
    Eigen::VectorXd gate_w;
    double gate_b = 0.0;

    static Gradients zeros(const MlpConfig& cfg);
    std::vector<Eigen::Map<Eigen::VectorXd>> param_views();
  };

  // Backpropagates dL/dv through the cached forward pass.
  void backward(const Cache& cache, const Eigen::MatrixXd& dv, Gradients& grads) const;

  // Flat views over every parameter block in declaration order (the
  // checkpoint and packed-vector order).
  std::vector<Eigen::Map<Eigen::VectorXd>> param_views();
  std::vector<Eigen::Map<const Eigen::VectorXd>> param_views() const;
  Index param_count() const;
  Eigen::VectorXd pack_params() const;
  void unpack_params(const Eigen::VectorXd& packed);

  // Checkpoint io: a VFLOW1 header line with the layer dimensions followed
  // by raw 64-bit parameters in declaration order. Reload is bit-exact.
  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);

  // Sinusoidal time embedding used by the trunk.
  Eigen::VectorXd time_embedding(double t) const;

 private:
  MlpConfig cfg_;
  Eigen::MatrixXd cond_w_;
  Eigen::VectorXd cond_b_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
  Eigen::MatrixXd out_w_;
  Eigen::VectorXd out_b_;
  Eigen::VectorXd gate_w_;
  double gate_b_ = 0.0;
};

// A training batch: clean latents with their conditions.
struct FlowBatch {
  std::vector<Eigen::VectorXd> x0;
  std::vector<Condition> cond;
};

// Conditional flow-matching objective. For each element the draw is
// t ~ uniform(0, 1], x1 ~ N(0, I), x_t on the linear path, and the loss is
// the squared error |v(x_t, t | c) - (x1 - x0)|^2 averaged over the batch.
// Conditions drop to null with probability cond_dropout. The seed fixes
// every draw, so repeated calls are bit-identical. Only MlpModel instances
// are accepted; when grads is non-null the parameter gradients are written.
double flow_matching_loss(const VelocityField& model, const FlowBatch& batch, std::uint64_t seed,
                          double cond_dropout = 0.0, MlpModel::Gradients* grads = nullptr);

}  // namespace vflow
