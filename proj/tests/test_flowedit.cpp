// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "vflow/flowedit.hpp"
#include "vflow/mlp.hpp"

using namespace vflow;

namespace {

StructureLatentd random_latent(int r, std::uint64_t seed) {
  Rng rng(seed);
  StructureLatentd lat;
  lat.resolution = r;
  lat.logits.resize(static_cast<Index>(r) * r * r);
  for (Index n = 0; n < lat.logits.size(); ++n) lat.logits[n] = rng.normal();
  return lat;
}

EditMaskd full_mask(int r) {
  EditMaskd m;
  m.resolution = r;
  m.weights = Eigen::ArrayXd::Ones(static_cast<Index>(r) * r * r);
  return m;
}

EditMaskd zero_mask(int r) {
  EditMaskd m;
  m.resolution = r;
  m.weights = Eigen::ArrayXd::Zero(static_cast<Index>(r) * r * r);
  return m;
}

// Anchors that answer to the condition so the src and tgt branches differ.
AnalyticPointMass two_sided(Index dim, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return AnalyticPointMass(dim, [a, b](const Condition& c) {
    return (!c.is_null && c.data.size() > 0 && c.data[0] > 0.5) ? b : a;
  });
}

Condition tag(double value) { return Condition::from_raster(Eigen::MatrixXd::Constant(1, 1, value)); }

}  // namespace

TEST_CASE("coupling preserves the running edit offset bit-exactly") {
  Rng data(1);
  Eigen::VectorXd x_src0 = data.normal_vec(32);
  Eigen::VectorXd x_t = data.normal_vec(32);
  for (double t : {0.04, 0.5, 1.0}) {
    Rng rng(17);
    CoupledStates s = couple_states(x_src0, x_t, t, rng);
    // The target state is constructed as the source state plus the offset.
    Eigen::VectorXd expect = s.x_src_t + (x_t - x_src0);
    CHECK((s.x_tgt_t.array() == expect.array()).all());
  }
}

TEST_CASE("coupling at t=1 returns the raw noise draw") {
  Rng data(2);
  Eigen::VectorXd x_src0 = data.normal_vec(16);
  Rng rng(33);
  CoupledStates s = couple_states(x_src0, x_src0, 1.0, rng);
  Rng replay(33);
  Eigen::VectorXd eps = replay.normal_vec(16);
  CHECK((s.x_src_t.array() == eps.array()).all());
  CHECK((s.x_tgt_t.array() == eps.array()).all());
}

TEST_CASE("edit velocity vanishes for identical branches at the source state") {
  Rng data(3);
  Eigen::VectorXd x_src0 = data.normal_vec(20);
  MlpConfig cfg;
  cfg.latent_dim = 20;
  cfg.cond_dim = 2;
  cfg.cond_embed = 3;
  cfg.hidden = 8;
  cfg.hidden_layers = 1;
  MlpModel m = MlpModel::random_init(cfg, 5);
  Condition c = Condition::from_raster(Eigen::MatrixXd::Ones(2, 1));

  std::array<std::uint64_t, 2> seeds{9, 10};
  Eigen::VectorXd v = edit_velocity(m, x_src0, x_src0, 0.5, c, c, 7.0, 7.0, seeds);
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("point-mass edit velocity is noise-independent") {
  // With anchors a (source branch) and b (target branch) at guidance 1 and
  // x_src0 = a, the coupled-state difference cancels the noise term and
  // leaves (x_t - b) / t regardless of the sample seed.
  const Index dim = 24;
  Rng data(4);
  Eigen::VectorXd a = data.normal_vec(dim);
  Eigen::VectorXd b = data.normal_vec(dim);
  AnalyticPointMass m = two_sided(dim, a, b);

  Eigen::VectorXd x_t = data.normal_vec(dim);
  for (double t : {0.1, 0.6, 1.0}) {
    Eigen::VectorXd expect = (x_t - b + a - a) / t;  // x_src0 = a
    std::array<std::uint64_t, 1> one{42};
    std::array<std::uint64_t, 3> three{1, 2, 3};
    Eigen::VectorXd v1 = edit_velocity(m, a, x_t, t, tag(0.0), tag(1.0), 1.0, 1.0, one);
    Eigen::VectorXd v3 = edit_velocity(m, a, x_t, t, tag(0.0), tag(1.0), 1.0, 1.0, three);
    CHECK((v1 - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((v3 - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("averaging over seeds decomposes into single-seed calls") {
  const Index dim = 12;
  MlpConfig cfg;
  cfg.latent_dim = dim;
  cfg.cond_dim = 1;  // matches the 1x1 raster tags below
  cfg.cond_embed = 3;
  cfg.hidden = 8;
  cfg.hidden_layers = 1;
  MlpModel m = MlpModel::random_init(cfg, 6);
  Rng data(7);
  Eigen::VectorXd x_src0 = data.normal_vec(dim);
  Eigen::VectorXd x_t = data.normal_vec(dim);

  std::array<std::uint64_t, 4> seeds{11, 12, 13, 14};
  Eigen::VectorXd joint =
      edit_velocity(m, x_src0, x_t, 0.4, tag(0.0), tag(1.0), 5.0, 10.0, seeds);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (std::uint64_t s : seeds) {
    std::array<std::uint64_t, 1> one{s};
    acc += edit_velocity(m, x_src0, x_t, 0.4, tag(0.0), tag(1.0), 5.0, 10.0, one);
  }
  CHECK((joint - acc / 4.0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("edit_velocity requires at least one seed") {
  AnalyticPointMass m(Eigen::VectorXd::Zero(4));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(
      edit_velocity(m, x, x, 0.5, tag(0.0), tag(1.0), 1.0, 1.0, std::span<const std::uint64_t>{}),
      std::invalid_argument);
}

TEST_CASE("clean estimates invert the point-mass field exactly") {
  const Index dim = 16;
  Rng data(8);
  Eigen::VectorXd a = data.normal_vec(dim);
  Eigen::VectorXd b = data.normal_vec(dim);
  AnalyticPointMass m = two_sided(dim, a, b);

  Eigen::VectorXd x_src_t = data.normal_vec(dim);
  Eigen::VectorXd x_tgt_t = data.normal_vec(dim);
  CleanEstimates est = clean_estimates(m, x_src_t, x_tgt_t, 0.35, tag(0.0), tag(1.0), 1.0, 1.0);
  CHECK((est.x_hat_src - a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((est.x_hat_tgt - b).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd xi = trajectory_correction(est);
  CHECK((xi - (b - a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trajectory correction is a translation-invariant difference") {
  Rng data(9);
  CleanEstimates est;
  est.x_hat_src = data.normal_vec(10);
  est.x_hat_tgt = data.normal_vec(10);
  Eigen::VectorXd d = data.normal_vec(10);

  Eigen::VectorXd xi = trajectory_correction(est);
  CleanEstimates shifted{est.x_hat_src + d, est.x_hat_tgt + d};
  CHECK((trajectory_correction(shifted) - xi).cwiseAbs().maxCoeff() < 1e-12);

  CleanEstimates same{est.x_hat_src, est.x_hat_src};
  CHECK(trajectory_correction(same).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a zero mask leaves the latent untouched bit-exactly") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 10);
  AnalyticPointMass m(Eigen::VectorXd::Constant(src.logits.size(), 3.0));
  FlowEditConfig cfg;
  cfg.seed = 5;
  StructureLatentd out = flowedit_run(m, src, zero_mask(r), tag(0.0), tag(1.0),
                                      Eigen::MatrixXd::Zero(r, r), cfg);
  CHECK((out.logits == src.logits).all());
}

TEST_CASE("identical conditions without guidance are a fixed point") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 11);
  MlpConfig mc;
  mc.latent_dim = src.logits.size();
  mc.cond_dim = 4;
  mc.cond_embed = 4;
  mc.hidden = 16;
  mc.hidden_layers = 2;
  MlpModel m = MlpModel::random_init(mc, 12);

  FlowEditConfig cfg;
  cfg.guidance_enabled = false;
  cfg.cfg_src = 6.0;
  cfg.cfg_tgt = 6.0;
  cfg.seed = 13;
  Condition c = Condition::from_raster(Eigen::MatrixXd::Ones(2, 2));
  StructureLatentd out =
      flowedit_run(m, src, full_mask(r), c, c, Eigen::MatrixXd::Zero(r, r), cfg);
  CHECK((out.logits - src.logits).abs().maxCoeff() < 1e-10);
}

TEST_CASE("point-mass editing lands on the target anchor for any step count") {
  const int r = 4;
  const Index n = static_cast<Index>(r) * r * r;
  Rng data(14);
  StructureLatentd src;
  src.resolution = r;
  src.logits = data.normal_vec(n).array();
  Eigen::VectorXd b = data.normal_vec(n);
  AnalyticPointMass m = two_sided(n, src.logits.matrix(), b);

  for (int steps : {1, 5, 25}) {
    FlowEditConfig cfg;
    cfg.steps = steps;
    cfg.cfg_src = 1.0;
    cfg.cfg_tgt = 1.0;
    cfg.gamma = 0.0;
    cfg.eta = 0.0;
    cfg.seed = 15;
    StructureLatentd out = flowedit_run(m, src, full_mask(r), tag(0.0), tag(1.0),
                                        Eigen::MatrixXd::Zero(r, r), cfg);
    CHECK((out.logits.matrix() - b).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("voxels outside the mask stay bit-exact under a trained-style model") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 16);
  MlpConfig mc;
  mc.latent_dim = src.logits.size();
  mc.cond_dim = 4;
  mc.cond_embed = 4;
  mc.hidden = 16;
  mc.hidden_layers = 2;

  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    MlpModel m = MlpModel::random_init(mc, 100 + trial);
    Rng rng(200 + trial);
    EditMaskd mask;
    mask.resolution = r;
    mask.weights.resize(src.logits.size());
    for (Index i = 0; i < mask.weights.size(); ++i)
      mask.weights[i] = rng.uniform01() < 0.5 ? 0.0 : 1.0;

    FlowEditConfig cfg;
    cfg.steps = 8;
    cfg.n_avg = 2;
    cfg.guidance_enabled = (trial % 2 == 0);
    cfg.seed = trial;
    Eigen::MatrixXd sil = Eigen::MatrixXd::Zero(r, r);
    sil(1, 2) = 1.0;
    StructureLatentd out = flowedit_run(m, src, mask,
                                        Condition::from_raster(Eigen::MatrixXd::Zero(2, 2)),
                                        Condition::from_raster(Eigen::MatrixXd::Ones(2, 2)), sil,
                                        cfg);
    for (Index i = 0; i < mask.weights.size(); ++i)
      if (mask.weights[i] == 0.0) CHECK(out.logits[i] == src.logits[i]);
  }
}

TEST_CASE("editing is reproducible for a fixed seed") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 17);
  MlpConfig mc;
  mc.latent_dim = src.logits.size();
  mc.cond_dim = 4;
  mc.cond_embed = 4;
  mc.hidden = 16;
  mc.hidden_layers = 1;
  MlpModel m = MlpModel::random_init(mc, 18);

  FlowEditConfig cfg;
  cfg.steps = 6;
  cfg.seed = 19;
  Eigen::MatrixXd sil = Eigen::MatrixXd::Ones(r, r);
  Condition cs = Condition::from_raster(Eigen::MatrixXd::Zero(2, 2));
  Condition ct = Condition::from_raster(Eigen::MatrixXd::Ones(2, 2));
  StructureLatentd o1 = flowedit_run(m, src, full_mask(r), cs, ct, sil, cfg);
  StructureLatentd o2 = flowedit_run(m, src, full_mask(r), cs, ct, sil, cfg);
  CHECK((o1.logits == o2.logits).all());
}

TEST_CASE("guidance requires a correctly shaped silhouette target") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 20);
  AnalyticPointMass m(Eigen::VectorXd::Zero(src.logits.size()));
  FlowEditConfig cfg;  // guidance on by default
  CHECK_THROWS_AS(flowedit_run(m, src, full_mask(r), tag(0.0), tag(1.0),
                               Eigen::MatrixXd::Zero(r + 1, r + 1), cfg),
                  std::invalid_argument);
}

TEST_CASE("the observer sees every step down to t=0 and the final state") {
  const int r = 4;
  StructureLatentd src = random_latent(r, 21);
  AnalyticPointMass m(Eigen::VectorXd::Constant(src.logits.size(), 0.5));
  FlowEditConfig cfg;
  cfg.steps = 5;
  cfg.gamma = 0.0;
  cfg.eta = 0.0;

  std::vector<double> times;
  Eigen::VectorXd last;
  StructureLatentd out = flowedit_run(
      m, src, full_mask(r), tag(0.0), tag(1.0), Eigen::MatrixXd::Zero(r, r), cfg,
      [&](int, double t, const Eigen::VectorXd& x) {
        times.push_back(t);
        last = x;
      });
  CHECK(times.size() == 5);
  CHECK(times.front() == doctest::Approx(0.8));
  CHECK(times.back() == 0.0);
  CHECK((last.array() == out.logits).all());
}
