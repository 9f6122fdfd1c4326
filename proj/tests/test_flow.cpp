// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "doctest.h"
#include "vflow/flow.hpp"
#include "vflow/mlp.hpp"

using namespace vflow;

namespace {

// Point mass whose anchor flips with the condition's null flag, so guidance
// arithmetic has something to resolve.
AnalyticPointMass split_anchor(Index dim, double cond_value, double null_value) {
  return AnalyticPointMass(dim, [=](const Condition& c) {
    return Eigen::VectorXd::Constant(dim, c.is_null ? null_value : cond_value);
  });
}

}  // namespace

TEST_CASE("linear_path hits both endpoints") {
  Eigen::VectorXd x0(2), x1(2);
  x0 << 1.0, -2.0;
  x1 << 3.0, 5.0;
  CHECK((linear_path(x0, x1, 0.0) - x0).norm() == 0.0);
  CHECK((linear_path(x0, x1, 1.0) - x1).norm() == 0.0);
  CHECK(linear_path(x0, x1, 0.25)[0] == doctest::Approx(1.5));
}

TEST_CASE("TimeGrid knots are uniform and the constructor validates steps") {
  TimeGrid g(4);
  CHECK(g.knot(0) == 0.0);
  CHECK(g.knot(4) == 1.0);
  CHECK(g.knot(1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(TimeGrid(0), std::invalid_argument);
}

TEST_CASE("point-mass velocity is the displacement over time") {
  Eigen::VectorXd anchor(3);
  anchor << 0.5, -1.0, 2.0;
  AnalyticPointMass m(anchor);
  Eigen::VectorXd x(3);
  x << 1.5, -1.0, 0.0;
  Eigen::VectorXd v = m.velocity(x, 0.5, Condition::null());
  CHECK((v - (x - anchor) / 0.5).norm() < 1e-15);
  CHECK_THROWS_AS(m.velocity(x, 0.0, Condition::null()), std::invalid_argument);
}

TEST_CASE("Euler sampling of a point mass lands on the anchor for any step count") {
  Rng rng(400);
  Eigen::VectorXd anchor = rng.normal_vec(24);
  AnalyticPointMass m(anchor);
  for (int steps : {1, 5, 25})
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      Eigen::VectorXd x = sample_euler(m, Condition::null(), TimeGrid(steps), 1.0, seed);
      CHECK((x - anchor).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("a single Euler step already solves the point-mass field") {
  Eigen::VectorXd anchor = Eigen::VectorXd::Constant(8, 1.25);
  AnalyticPointMass m(anchor);
  Eigen::VectorXd x = sample_euler(m, Condition::null(), TimeGrid(1), 1.0, 99);
  CHECK((x - anchor).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cfg_velocity endpoints are bit-exact") {
  AnalyticPointMass m = split_anchor(5, 2.0, -3.0);
  Rng rng(41);
  Eigen::VectorXd x = rng.normal_vec(5);
  Condition c = Condition::from_raster(Eigen::MatrixXd::Ones(1, 1));

  Eigen::VectorXd v1 = cfg_velocity(m, x, 0.7, c, 1.0);
  Eigen::VectorXd vc = m.velocity(x, 0.7, c);
  CHECK((v1.array() == vc.array()).all());

  Eigen::VectorXd v0 = cfg_velocity(m, x, 0.7, c, 0.0);
  Eigen::VectorXd vn = m.velocity(x, 0.7, Condition::null());
  CHECK((v0.array() == vn.array()).all());
}

TEST_CASE("cfg_velocity extrapolates past the conditional branch") {
  AnalyticPointMass m = split_anchor(4, 1.0, 0.0);
  Rng rng(42);
  Eigen::VectorXd x = rng.normal_vec(4);
  Condition c = Condition::from_raster(Eigen::MatrixXd::Ones(1, 1));
  double t = 0.5;

  Eigen::VectorXd vc = m.velocity(x, t, c);
  Eigen::VectorXd vn = m.velocity(x, t, Condition::null());
  Eigen::VectorXd expect = 2.0 * vc - vn;
  CHECK((cfg_velocity(m, x, t, c, 2.0) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mixture with a single component equals the point mass") {
  Rng rng(43);
  Eigen::VectorXd anchor = rng.normal_vec(6);
  AnalyticMixture mix({{anchor, 1.0}});
  AnalyticPointMass pm(anchor);
  Eigen::VectorXd x = rng.normal_vec(6);
  CHECK((mix.velocity(x, 0.3, Condition::null()) - pm.velocity(x, 0.3, Condition::null()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("mixture responsibilities sum to one and favor the near component") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(3, 10.0);
  AnalyticMixture mix({{a, 0.5}, {b, 0.5}});

  double t = 0.5;
  Eigen::VectorXd near_a = (1.0 - t) * a;
  Eigen::VectorXd w = mix.responsibilities(near_a, t, Condition::null());
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[0] > 0.999);

  // Near component a the marginal velocity collapses to a's point mass.
  AnalyticPointMass pm(a);
  CHECK((mix.velocity(near_a, t, Condition::null()) - pm.velocity(near_a, t, Condition::null()))
            .norm() < 1e-9);
}

TEST_CASE("mixture priors shift the balance point") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
  AnalyticMixture even({{a, 0.5}, {b, 0.5}});
  AnalyticMixture tilted({{a, 0.9}, {b, 0.1}});
  // At the symmetric point the responsibilities follow the priors exactly.
  Eigen::VectorXd mid = 0.5 * (1.0 - 0.4) * (a + b);
  Eigen::VectorXd we = even.responsibilities(mid, 0.4, Condition::null());
  Eigen::VectorXd wt = tilted.responsibilities(mid, 0.4, Condition::null());
  CHECK(we[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(wt[0] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("Condition::from_raster flattens row-major") {
  Eigen::MatrixXd r(2, 3);
  r << 1, 2, 3, 4, 5, 6;
  Condition c = Condition::from_raster(r);
  CHECK(c.data.size() == 6);
  CHECK(c.data[0] == 1.0);
  CHECK(c.data[2] == 3.0);
  CHECK(c.data[3] == 4.0);
  CHECK_FALSE(c.is_null);
  CHECK(Condition::null().is_null);
}

TEST_CASE("sample_euler is reproducible for a fixed seed") {
  AnalyticPointMass m(Eigen::VectorXd::Constant(10, 0.5));
  Eigen::VectorXd a = sample_euler(m, Condition::null(), TimeGrid(7), 1.0, 1234);
  Eigen::VectorXd b = sample_euler(m, Condition::null(), TimeGrid(7), 1.0, 1234);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("flow-matching loss of a zero model on zero data is the dimension") {
  // With a zero velocity output and x0 = 0 the residual is exactly x1, so the
  // loss is a Monte-Carlo mean of |x1|^2 over the batch: chi-square with
  // `dim` degrees of freedom, mean = dim.
  const Index dim = 16;
  MlpConfig cfg;
  cfg.latent_dim = dim;
  cfg.cond_dim = 4;
  cfg.cond_embed = 4;
  cfg.hidden = 8;
  cfg.hidden_layers = 1;
  MlpModel zero(cfg);  // zero parameters, zero output

  FlowBatch batch;
  for (int n = 0; n < 10000; ++n) {
    batch.x0.push_back(Eigen::VectorXd::Zero(dim));
    batch.cond.push_back(Condition::null());
  }
  double loss = flow_matching_loss(zero, batch, 2024);
  CHECK(loss == doctest::Approx(static_cast<double>(dim)).epsilon(0.05));
}

TEST_CASE("flow-matching loss rejects analytic models") {
  AnalyticPointMass m(Eigen::VectorXd::Zero(4));
  FlowBatch batch;
  batch.x0.push_back(Eigen::VectorXd::Zero(4));
  batch.cond.push_back(Condition::null());
  CHECK_THROWS_AS(flow_matching_loss(m, batch, 1), std::invalid_argument);
}
