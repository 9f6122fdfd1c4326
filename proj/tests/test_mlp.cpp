// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "vflow/mlp.hpp"
#include "vflow/train.hpp"

using namespace vflow;

namespace {

MlpConfig tiny_config() {
  MlpConfig cfg;
  cfg.latent_dim = 6;
  cfg.cond_dim = 4;
  cfg.cond_embed = 5;
  cfg.hidden = 8;
  cfg.hidden_layers = 2;
  cfg.time_freqs = 2;
  cfg.input_scale = 0.5;
  return cfg;
}

Eigen::VectorXd pack_grads(MlpModel::Gradients& g) {
  auto views = g.param_views();
  Index total = 0;
  for (const auto& v : views) total += v.size();
  Eigen::VectorXd out(total);
  Index at = 0;
  for (const auto& v : views) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

FlowBatch tiny_batch(const MlpConfig& cfg, int count, std::uint64_t seed) {
  Rng rng(seed);
  FlowBatch batch;
  for (int n = 0; n < count; ++n) {
    batch.x0.push_back(rng.normal_vec(cfg.latent_dim));
    Eigen::MatrixXd raster(cfg.cond_dim, 1);
    for (Index i = 0; i < cfg.cond_dim; ++i) raster(i, 0) = rng.uniform01();
    batch.cond.push_back(Condition::from_raster(raster));
  }
  return batch;
}

}  // namespace

TEST_CASE("random_init is deterministic in the seed") {
  MlpConfig cfg = tiny_config();
  MlpModel a = MlpModel::random_init(cfg, 7);
  MlpModel b = MlpModel::random_init(cfg, 7);
  MlpModel c = MlpModel::random_init(cfg, 8);
  CHECK((a.pack_params().array() == b.pack_params().array()).all());
  CHECK((a.pack_params() - c.pack_params()).norm() > 0.0);
}

TEST_CASE("pack/unpack are inverses and param_count agrees") {
  MlpModel m = MlpModel::random_init(tiny_config(), 3);
  Eigen::VectorXd p = m.pack_params();
  CHECK(p.size() == m.param_count());
  MlpModel other(tiny_config());
  other.unpack_params(p);
  CHECK((other.pack_params().array() == p.array()).all());
}

TEST_CASE("checkpoint save/load is bit-exact") {
  MlpModel m = MlpModel::random_init(tiny_config(), 11);
  const std::string path = "test_mlp_ckpt.bin";
  m.save(path);
  MlpModel back = MlpModel::load(path);
  CHECK(back.config().latent_dim == m.config().latent_dim);
  CHECK(back.config().cond_embed == m.config().cond_embed);
  CHECK(back.config().hidden_layers == m.config().hidden_layers);
  CHECK(back.config().input_scale == m.config().input_scale);
  CHECK((back.pack_params().array() == m.pack_params().array()).all());
  std::remove(path.c_str());
}

TEST_CASE("time embedding has the configured width and stays bounded") {
  MlpModel m(tiny_config());
  Eigen::VectorXd e1 = m.time_embedding(0.3);
  Eigen::VectorXd e2 = m.time_embedding(0.7);
  CHECK(e1.size() == 2 * tiny_config().time_freqs);
  CHECK(e1.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK((e1 - e2).norm() > 1e-3);
}

TEST_CASE("a null condition behaves as an all-zero raster") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 21);
  Rng rng(5);
  Eigen::VectorXd x = rng.normal_vec(cfg.latent_dim);
  Condition zeros = Condition::from_raster(Eigen::MatrixXd::Zero(cfg.cond_dim, 1));
  Eigen::VectorXd va = m.velocity(x, 0.4, Condition::null());
  Eigen::VectorXd vb = m.velocity(x, 0.4, zeros);
  CHECK((va.array() == vb.array()).all());
}

TEST_CASE("eval matches forward at a shared time") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 31);
  Rng rng(6);
  Eigen::MatrixXd states(cfg.latent_dim, 3);
  for (int b = 0; b < 3; ++b) states.col(b) = rng.normal_vec(cfg.latent_dim);
  Condition c = Condition::from_raster(Eigen::MatrixXd::Ones(cfg.cond_dim, 1));
  std::vector<const Condition*> conds{&c, &c, &c};

  Eigen::MatrixXd via_eval(cfg.latent_dim, 3);
  m.eval(states, 0.6, conds, via_eval);
  Eigen::MatrixXd via_forward = m.forward(states, Eigen::VectorXd::Constant(3, 0.6), conds);
  CHECK((via_eval - via_forward).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward gradients match finite differences of a linear functional") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 99);
  Rng rng(17);

  const int bsz = 3;
  Eigen::MatrixXd states(cfg.latent_dim, bsz);
  for (int b = 0; b < bsz; ++b) states.col(b) = rng.normal_vec(cfg.latent_dim);
  Eigen::VectorXd times(bsz);
  times << 0.2, 0.55, 0.9;
  Condition c1 = Condition::from_raster(Eigen::MatrixXd::Random(cfg.cond_dim, 1));
  Condition c2 = Condition::null();
  std::vector<const Condition*> conds{&c1, &c2, &c1};
  Eigen::MatrixXd weights = Eigen::MatrixXd::Random(cfg.latent_dim, bsz);

  // J(params) = sum(v .* weights); backward with dv = weights gives dJ/dp.
  MlpModel::Cache cache;
  m.forward(states, times, conds, &cache);
  MlpModel::Gradients grads = MlpModel::Gradients::zeros(cfg);
  m.backward(cache, weights, grads);
  Eigen::VectorXd analytic = pack_grads(grads);

  Eigen::VectorXd p = m.pack_params();
  Rng pickp(18);
  const double h = 1e-6;
  for (int n = 0; n < 60; ++n) {
    Index i = pickp.uniform_int(static_cast<int>(p.size()));
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    MlpModel mp(cfg), mm(cfg);
    mp.unpack_params(pp);
    mm.unpack_params(pm);
    double jp = (mp.forward(states, times, conds).array() * weights.array()).sum();
    double jm = (mm.forward(states, times, conds).array() * weights.array()).sum();
    double fd = (jp - jm) / (2 * h);
    double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    CHECK(std::abs(analytic[i] - fd) / scale < 1e-5);
  }

  // Every block must carry signal somewhere.
  CHECK(grads.cond_w.norm() > 0.0);
  CHECK(grads.cond_b.norm() > 0.0);
  CHECK(grads.out_w.norm() > 0.0);
  CHECK(grads.gate_w.norm() > 0.0);
  CHECK(grads.gate_b != 0.0);
}

TEST_CASE("flow-matching loss gradients match finite differences") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 55);
  FlowBatch batch = tiny_batch(cfg, 4, 56);
  const std::uint64_t seed = 77;
  const double dropout = 0.3;

  MlpModel::Gradients grads = MlpModel::Gradients::zeros(cfg);
  flow_matching_loss(m, batch, seed, dropout, &grads);
  Eigen::VectorXd analytic = pack_grads(grads);

  Eigen::VectorXd p = m.pack_params();
  Rng pickp(58);
  const double h = 1e-4;
  for (int n = 0; n < 40; ++n) {
    Index i = pickp.uniform_int(static_cast<int>(p.size()));
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    MlpModel a(cfg), b(cfg);
    a.unpack_params(pp);
    b.unpack_params(pm);
    double fd = (flow_matching_loss(a, batch, seed, dropout) -
                 flow_matching_loss(b, batch, seed, dropout)) / (2 * h);
    double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    CHECK(std::abs(analytic[i] - fd) / scale < 1e-4);
  }
}

TEST_CASE("flow-matching loss is reproducible across calls") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 61);
  FlowBatch batch = tiny_batch(cfg, 6, 62);
  double a = flow_matching_loss(m, batch, 5);
  double b = flow_matching_loss(m, batch, 5);
  CHECK(a == b);
  CHECK(a > 0.0);
}

TEST_CASE("training is deterministic and reduces the loss on a tiny problem") {
  MlpConfig cfg = tiny_config();
  FlowBatch data = tiny_batch(cfg, 8, 70);
  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.steps = 300;
  tc.batch = 8;
  tc.cond_dropout = 0.1;
  tc.seed = 4;

  MlpModel m1 = MlpModel::random_init(cfg, 71);
  MlpModel m2 = MlpModel::random_init(cfg, 71);
  TrainStats s1 = train_flow_model(m1, data, tc);
  TrainStats s2 = train_flow_model(m2, data, tc);
  CHECK((m1.pack_params().array() == m2.pack_params().array()).all());
  CHECK(s1.loss == s2.loss);

  double head = std::accumulate(s1.loss.begin(), s1.loss.begin() + 25, 0.0) / 25.0;
  double tail = std::accumulate(s1.loss.end() - 25, s1.loss.end(), 0.0) / 25.0;
  CHECK(tail < head);
}

TEST_CASE("training throws a TrainingError when the loss diverges") {
  MlpConfig cfg = tiny_config();
  FlowBatch data = tiny_batch(cfg, 4, 80);
  TrainConfig tc;
  tc.learning_rate = 1e100;
  tc.steps = 50;
  tc.batch = 4;
  tc.seed = 9;
  MlpModel m = MlpModel::random_init(cfg, 81);
  CHECK_THROWS_AS(train_flow_model(m, data, tc), TrainingError);
}

TEST_CASE("evaluate_loss averages seeded draws and needs a valid round count") {
  MlpConfig cfg = tiny_config();
  MlpModel m = MlpModel::random_init(cfg, 90);
  FlowBatch data = tiny_batch(cfg, 4, 91);
  double a = evaluate_loss(m, data, 3, 4);
  double b = evaluate_loss(m, data, 3, 4);
  CHECK(a == b);
  CHECK_THROWS_AS(evaluate_loss(m, data, 3, 0), std::invalid_argument);
}
