// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "vflow/common.hpp"

namespace vflow {

// Conditioning input for a velocity model: a flattened raster (a silhouette
// or a color thumbnail). A null condition carries no raster and enters the
// model as an all-zero embedding input.
struct Condition {
  Eigen::VectorXd data;
  bool is_null = false;

  static Condition null() { return Condition{Eigen::VectorXd(), true}; }

  static Condition from_raster(const Eigen::MatrixXd& raster) {
    Condition c;
    c.data.resize(raster.size());
    for (Index i = 0; i < raster.rows(); ++i)
      for (Index j = 0; j < raster.cols(); ++j) c.data[i * raster.cols() + j] = raster(i, j);
    return c;
  }
};

// Uniform time discretization of [0, 1] with knots t_i = i / steps,
// traversed from t_steps = 1 down to t_0 = 0 when sampling.
struct TimeGrid {
  int steps = 25;

  explicit TimeGrid(int s = 25) : steps(s) { require_arg(s >= 1, "TimeGrid: steps must be >= 1"); }
  double knot(int i) const { return static_cast<double>(i) / steps; }
};

// The straight interpolation path between a clean sample (t = 0) and noise
// (t = 1).
inline Eigen::VectorXd linear_path(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, double t) {
  require_arg(x0.size() == x1.size(), "linear_path: shape mismatch");
  return (1.0 - t) * x0 + t * x1;
}

// A conditional velocity field v(x, t | c) on flattened latents.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual Index dim() const = 0;

  // Batch evaluation: states and velocities are columns. All columns share
  // t; conditions are per column.
  virtual void eval(const Eigen::Ref<const Eigen::MatrixXd>& states, double t,
                    const std::vector<const Condition*>& conds,
                    Eigen::Ref<Eigen::MatrixXd> out) const = 0;

  Eigen::VectorXd velocity(const Eigen::VectorXd& x, double t, const Condition& c) const {
    Eigen::MatrixXd out(x.size(), 1);
    eval(x, t, {&c}, out);
    return out.col(0);
  }
};

// Oracle field for a single clean point x0 per condition:
// v(x, t) = (x - x0) / t. Euler integration of this field is exact because
// trajectories are affine in t.
class AnalyticPointMass : public VelocityField {
 public:
  using AnchorFn = std::function<Eigen::VectorXd(const Condition&)>;

  explicit AnalyticPointMass(Eigen::VectorXd anchor)
      : dim_(anchor.size()), anchor_([a = std::move(anchor)](const Condition&) { return a; }) {}

  AnalyticPointMass(Index dim, AnchorFn anchor) : dim_(dim), anchor_(std::move(anchor)) {}

  Index dim() const override { return dim_; }

  void eval(const Eigen::Ref<const Eigen::MatrixXd>& states, double t,
            const std::vector<const Condition*>& conds,
            Eigen::Ref<Eigen::MatrixXd> out) const override {
    require_arg(t > 0.0, "AnalyticPointMass: t must be positive");
    require_arg(states.rows() == dim_, "AnalyticPointMass: state dim mismatch");
    require_arg(static_cast<Index>(conds.size()) == states.cols(),
                "AnalyticPointMass: conditions/batch mismatch");
    for (Index b = 0; b < states.cols(); ++b)
      out.col(b) = (states.col(b) - anchor_(*conds[b])) / t;
  }

 private:
  Index dim_;
  AnchorFn anchor_;
};

// Oracle field for a finite mixture of clean points with prior weights.
// The marginal velocity is the posterior-weighted mean of the per-component
// point-mass velocities; responsibilities are computed in log space.
class AnalyticMixture : public VelocityField {
 public:
  struct Component {
    Eigen::VectorXd anchor;
    double prior = 1.0;
  };
  using ComponentFn = std::function<std::vector<Component>(const Condition&)>;

  explicit AnalyticMixture(std::vector<Component> components)
      : dim_(components.empty() ? 0 : components.front().anchor.size()),
        components_([cs = std::move(components)](const Condition&) { return cs; }) {
    require_arg(dim_ > 0, "AnalyticMixture: needs at least one component");
  }

  AnalyticMixture(Index dim, ComponentFn components)
      : dim_(dim), components_(std::move(components)) {}

  Index dim() const override { return dim_; }

  // Posterior responsibilities of the components at (x, t):
  // w_j proportional to prior_j * exp(-|x - (1-t) x0_j|^2 / (2 t^2)).
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& x, double t,
                                   const Condition& c) const {
    std::vector<Component> cs = components_(c);
    require_arg(!cs.empty(), "AnalyticMixture: empty component set");
    Eigen::VectorXd logw(cs.size());
    for (size_t j = 0; j < cs.size(); ++j) {
      double d2 = (x - (1.0 - t) * cs[j].anchor).squaredNorm();
      logw[j] = std::log(cs[j].prior) - d2 / (2.0 * t * t);
    }
    double m = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - m).exp();
    return w / w.sum();
  }

  void eval(const Eigen::Ref<const Eigen::MatrixXd>& states, double t,
            const std::vector<const Condition*>& conds,
            Eigen::Ref<Eigen::MatrixXd> out) const override {
    require_arg(t > 0.0, "AnalyticMixture: t must be positive");
    require_arg(states.rows() == dim_, "AnalyticMixture: state dim mismatch");
    require_arg(static_cast<Index>(conds.size()) == states.cols(),
                "AnalyticMixture: conditions/batch mismatch");
    for (Index b = 0; b < states.cols(); ++b) {
      Eigen::VectorXd x = states.col(b);
      std::vector<Component> cs = components_(*conds[b]);
      Eigen::VectorXd w = responsibilities(x, t, *conds[b]);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
      for (size_t j = 0; j < cs.size(); ++j) v += w[j] * (x - cs[j].anchor) / t;
      out.col(b) = v;
    }
  }

 private:
  Index dim_;
  ComponentFn components_;
};

// Classifier-free guided velocity: v_null + s * (v_cond - v_null).
// The endpoints short-circuit so s = 1 returns the conditional velocity and
// s = 0 the null velocity bit-exactly.
inline Eigen::VectorXd cfg_velocity(const VelocityField& model, const Eigen::VectorXd& x, double t,
                                    const Condition& c, double scale) {
  if (scale == 1.0) return model.velocity(x, t, c);
  Condition null = Condition::null();
  if (scale == 0.0) return model.velocity(x, t, null);
  Eigen::MatrixXd states(x.size(), 2);
  states.col(0) = x;
  states.col(1) = x;
  Eigen::MatrixXd v(x.size(), 2);
  model.eval(states, t, {&c, &null}, v);
  return v.col(1) + scale * (v.col(0) - v.col(1));
}

// Euler sampler from noise at t = 1 down to t = 0 on a uniform grid.
inline Eigen::VectorXd sample_euler(const VelocityField& model, const Condition& c,
                                    const TimeGrid& grid, double cfg_scale, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x = rng.normal_vec(model.dim());
  for (int i = grid.steps; i >= 1; --i) {
    double t = grid.knot(i);
    double dt = grid.knot(i - 1) - t;
    x += dt * cfg_velocity(model, x, t, c, cfg_scale);
  }
  return x;
}

}  // namespace vflow
