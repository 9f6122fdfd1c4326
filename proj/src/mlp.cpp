// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/mlp.hpp"

#include <cstring>
#include <fstream>

namespace vflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Index trunk_input_dim(const MlpConfig& c) {
  return c.latent_dim + 2 * static_cast<Index>(c.time_freqs) + c.cond_embed;
}

}  // namespace

MlpModel::MlpModel(const MlpConfig& cfg) : cfg_(cfg) {
  require_arg(cfg.latent_dim > 0, "MlpModel: latent_dim must be positive");
  require_arg(cfg.cond_dim > 0, "MlpModel: cond_dim must be positive");
  require_arg(cfg.hidden > 0 && cfg.hidden_layers >= 1, "MlpModel: bad trunk shape");
  require_arg(cfg.time_freqs >= 1 && cfg.cond_embed > 0, "MlpModel: bad embedding shape");
  cond_w_ = Eigen::MatrixXd::Zero(cfg.cond_embed, cfg.cond_dim);
  cond_b_ = Eigen::VectorXd::Zero(cfg.cond_embed);
  w_.resize(cfg.hidden_layers);
  b_.resize(cfg.hidden_layers);
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    Index in = l == 0 ? trunk_input_dim(cfg) : cfg.hidden;
    w_[l] = Eigen::MatrixXd::Zero(cfg.hidden, in);
    b_[l] = Eigen::VectorXd::Zero(cfg.hidden);
  }
  out_w_ = Eigen::MatrixXd::Zero(cfg.latent_dim, cfg.hidden);
  out_b_ = Eigen::VectorXd::Zero(cfg.latent_dim);
  gate_w_ = Eigen::VectorXd::Zero(cfg.hidden);
  gate_b_ = 0.0;
}

MlpModel MlpModel::random_init(const MlpConfig& cfg, std::uint64_t seed) {
  MlpModel m(cfg);
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-a, a);
  };
  fill(m.cond_w_);
  for (auto& w : m.w_) fill(w);
  fill(m.out_w_);
  // Biases and the gate start at zero: the model begins as a plain MLP with
  // zero output.
  return m;
}

Eigen::VectorXd MlpModel::time_embedding(double t) const {
  Eigen::VectorXd e(2 * cfg_.time_freqs);
  for (int f = 0; f < cfg_.time_freqs; ++f) {
    double w = kTwoPi * static_cast<double>(1 << f) * 0.5;
    e[2 * f] = std::sin(w * t);
    e[2 * f + 1] = std::cos(w * t);
  }
  return e;
}

Eigen::MatrixXd MlpModel::forward(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                  const Eigen::VectorXd& times,
                                  const std::vector<const Condition*>& conds, Cache* cache) const {
  const Index batch = states.cols();
  require_arg(states.rows() == cfg_.latent_dim, "MlpModel: state dim mismatch");
  require_arg(times.size() == batch, "MlpModel: times/batch mismatch");
  require_arg(static_cast<Index>(conds.size()) == batch, "MlpModel: conditions/batch mismatch");

  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(cfg_.cond_dim, batch);
  for (Index bcol = 0; bcol < batch; ++bcol) {
    const Condition& c = *conds[bcol];
    if (c.is_null) continue;
    require_arg(c.data.size() == cfg_.cond_dim, "MlpModel: condition raster shape mismatch");
    cond.col(bcol) = c.data;
  }

  // Linear projection: a bounded nonlinearity here tends to settle into
  // saturated per-case codewords during training, which erases the small
  // silhouette differences editing relies on.
  Eigen::MatrixXd emb = (cond_w_ * cond).colwise() + cond_b_;

  Eigen::MatrixXd trunk_in(trunk_input_dim(cfg_), batch);
  trunk_in.topRows(cfg_.latent_dim) = cfg_.input_scale * states;
  for (Index bcol = 0; bcol < batch; ++bcol)
    trunk_in.block(cfg_.latent_dim, bcol, 2 * cfg_.time_freqs, 1) = time_embedding(times[bcol]);
  trunk_in.bottomRows(cfg_.cond_embed) = emb;

  std::vector<Eigen::MatrixXd> hidden(cfg_.hidden_layers);
  const Eigen::MatrixXd* prev = &trunk_in;
  for (int l = 0; l < cfg_.hidden_layers; ++l) {
    hidden[l] = ((w_[l] * (*prev)).colwise() + b_[l]).array().tanh();
    prev = &hidden[l];
  }

  Eigen::RowVectorXd gate = (gate_w_.transpose() * hidden.back()).array() + gate_b_;
  Eigen::MatrixXd v = (out_w_ * hidden.back()).colwise() + out_b_;
  v += states * gate.asDiagonal();

  if (cache) {
    cache->x = states;
    cache->cond = std::move(cond);
    cache->trunk_in = std::move(trunk_in);
    cache->hidden = std::move(hidden);
    cache->gate = std::move(gate);
  }
  return v;
}

void MlpModel::eval(const Eigen::Ref<const Eigen::MatrixXd>& states, double t,
                    const std::vector<const Condition*>& conds,
                    Eigen::Ref<Eigen::MatrixXd> out) const {
  Eigen::VectorXd times = Eigen::VectorXd::Constant(states.cols(), t);
  out = forward(states, times, conds);
}

void MlpModel::backward(const Cache& cache, const Eigen::MatrixXd& dv, Gradients& grads) const {
  const Eigen::MatrixXd& h_last = cache.hidden.back();

  // Output head and gate.
  Eigen::RowVectorXd dgate = (dv.array() * cache.x.array()).colwise().sum();
  grads.gate_w += h_last * dgate.transpose();
  grads.gate_b += dgate.sum();
  grads.out_w += dv * h_last.transpose();
  grads.out_b += dv.rowwise().sum();

  Eigen::MatrixXd dh = out_w_.transpose() * dv + gate_w_ * dgate;

  // Trunk.
  for (int l = cfg_.hidden_layers - 1; l >= 0; --l) {
    Eigen::MatrixXd da = dh.array() * (1.0 - cache.hidden[l].array().square());
    const Eigen::MatrixXd& input = l == 0 ? cache.trunk_in : cache.hidden[l - 1];
    grads.w[l] += da * input.transpose();
    grads.b[l] += da.rowwise().sum();
    dh = w_[l].transpose() * da;
  }

  // Condition embedding (dh is now the trunk-input gradient).
  Eigen::MatrixXd de = dh.bottomRows(cfg_.cond_embed);
  grads.cond_w += de * cache.cond.transpose();
  grads.cond_b += de.rowwise().sum();
}

MlpModel::Gradients MlpModel::Gradients::zeros(const MlpConfig& cfg) {
  Gradients g;
  g.cond_w = Eigen::MatrixXd::Zero(cfg.cond_embed, cfg.cond_dim);
  g.cond_b = Eigen::VectorXd::Zero(cfg.cond_embed);
  g.w.resize(cfg.hidden_layers);
  g.b.resize(cfg.hidden_layers);
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    Index in = l == 0 ? trunk_input_dim(cfg) : cfg.hidden;
    g.w[l] = Eigen::MatrixXd::Zero(cfg.hidden, in);
    g.b[l] = Eigen::VectorXd::Zero(cfg.hidden);
  }
  g.out_w = Eigen::MatrixXd::Zero(cfg.latent_dim, cfg.hidden);
  g.out_b = Eigen::VectorXd::Zero(cfg.latent_dim);
  g.gate_w = Eigen::VectorXd::Zero(cfg.hidden);
  g.gate_b = 0.0;
  return g;
}

namespace {

template <typename MapT, typename Model>
std::vector<MapT> make_views(Model& m) {
  std::vector<MapT> v;
  v.emplace_back(m.cond_w.data(), m.cond_w.size());
  v.emplace_back(m.cond_b.data(), m.cond_b.size());
  for (size_t l = 0; l < m.w.size(); ++l) {
    v.emplace_back(m.w[l].data(), m.w[l].size());
    v.emplace_back(m.b[l].data(), m.b[l].size());
  }
  v.emplace_back(m.out_w.data(), m.out_w.size());
  v.emplace_back(m.out_b.data(), m.out_b.size());
  v.emplace_back(m.gate_w.data(), m.gate_w.size());
  v.emplace_back(&m.gate_b, 1);
  return v;
}

struct ParamRefs {
  Eigen::MatrixXd& cond_w;
  Eigen::VectorXd& cond_b;
  std::vector<Eigen::MatrixXd>& w;
  std::vector<Eigen::VectorXd>& b;
  Eigen::MatrixXd& out_w;
  Eigen::VectorXd& out_b;
  Eigen::VectorXd& gate_w;
  double& gate_b;
};

struct ConstParamRefs {
  const Eigen::MatrixXd& cond_w;
  const Eigen::VectorXd& cond_b;
  const std::vector<Eigen::MatrixXd>& w;
  const std::vector<Eigen::VectorXd>& b;
  const Eigen::MatrixXd& out_w;
  const Eigen::VectorXd& out_b;
  const Eigen::VectorXd& gate_w;
  const double& gate_b;
};

}  // namespace

std::vector<Eigen::Map<Eigen::VectorXd>> MlpModel::param_views() {
  ParamRefs r{cond_w_, cond_b_, w_, b_, out_w_, out_b_, gate_w_, gate_b_};
  return make_views<Eigen::Map<Eigen::VectorXd>>(r);
}

std::vector<Eigen::Map<const Eigen::VectorXd>> MlpModel::param_views() const {
  ConstParamRefs r{cond_w_, cond_b_, w_, b_, out_w_, out_b_, gate_w_, gate_b_};
  return make_views<Eigen::Map<const Eigen::VectorXd>>(r);
}

std::vector<Eigen::Map<Eigen::VectorXd>> MlpModel::Gradients::param_views() {
  ParamRefs r{cond_w, cond_b, w, b, out_w, out_b, gate_w, gate_b};
  return make_views<Eigen::Map<Eigen::VectorXd>>(r);
}

Index MlpModel::param_count() const {
  Index n = 0;
  for (const auto& v : param_views()) n += v.size();
  return n;
}

Eigen::VectorXd MlpModel::pack_params() const {
  Eigen::VectorXd packed(param_count());
  Index at = 0;
  for (const auto& v : param_views()) {
    packed.segment(at, v.size()) = v;
    at += v.size();
  }
  return packed;
}

void MlpModel::unpack_params(const Eigen::VectorXd& packed) {
  require_arg(packed.size() == param_count(), "unpack_params: size mismatch");
  Index at = 0;
  for (auto& v : param_views()) {
    v = packed.segment(at, v.size());
    at += v.size();
  }
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("MlpModel::save: cannot open " + path);
  out << "VFLOW1 " << cfg_.latent_dim << ' ' << cfg_.cond_dim << ' ' << cfg_.cond_embed << ' '
      << cfg_.hidden << ' ' << cfg_.hidden_layers << ' ' << cfg_.time_freqs << '\n';
  out.write(reinterpret_cast<const char*>(&cfg_.input_scale), sizeof(double));
  for (const auto& v : param_views())
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw std::runtime_error("MlpModel::save: write failed: " + path);
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("MlpModel::load: cannot open " + path);
  std::string magic;
  MlpConfig cfg;
  if (!(in >> magic >> cfg.latent_dim >> cfg.cond_dim >> cfg.cond_embed >> cfg.hidden >>
        cfg.hidden_layers >> cfg.time_freqs) ||
      magic != "VFLOW1")
    throw std::runtime_error("MlpModel::load: not a VFLOW1 checkpoint: " + path);
  in.ignore(1);  // newline after the header
  if (!in.read(reinterpret_cast<char*>(&cfg.input_scale), sizeof(double)))
    throw std::runtime_error("MlpModel::load: truncated checkpoint: " + path);
  MlpModel m(cfg);
  for (auto& v : m.param_views())
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw std::runtime_error("MlpModel::load: truncated checkpoint: " + path);
  return m;
}

double flow_matching_loss(const VelocityField& model, const FlowBatch& batch, std::uint64_t seed,
                          double cond_dropout, MlpModel::Gradients* grads) {
  const MlpModel* mlp = dynamic_cast<const MlpModel*>(&model);
  require_arg(mlp != nullptr, "flow_matching_loss: model must be a trainable MlpModel");
  const Index bsz = static_cast<Index>(batch.x0.size());
  require_arg(bsz > 0, "flow_matching_loss: empty batch");
  require_arg(batch.cond.size() == batch.x0.size(), "flow_matching_loss: batch shape mismatch");
  const Index n = mlp->dim();

  Eigen::MatrixXd xt(n, bsz), target(n, bsz);
  Eigen::VectorXd times(bsz);
  Condition null = Condition::null();
  std::vector<const Condition*> conds(bsz);
  for (Index i = 0; i < bsz; ++i) {
    require_arg(batch.x0[i].size() == n, "flow_matching_loss: latent dim mismatch");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    double t = 1.0 - rng.uniform01();  // (0, 1]
    Eigen::VectorXd x1 = rng.normal_vec(n);
    bool drop = cond_dropout > 0.0 && rng.uniform01() < cond_dropout;
    times[i] = t;
    xt.col(i) = linear_path(batch.x0[i], x1, t);
    target.col(i) = x1 - batch.x0[i];
    conds[i] = drop ? &null : &batch.cond[i];
  }

  MlpModel::Cache cache;
  Eigen::MatrixXd v = mlp->forward(xt, times, conds, grads ? &cache : nullptr);
  Eigen::MatrixXd resid = v - target;
  double loss = resid.squaredNorm() / static_cast<double>(bsz);
  if (grads) {
    Eigen::MatrixXd dv = resid * (2.0 / static_cast<double>(bsz));
    mlp->backward(cache, dv, *grads);
  }
  return loss;
}

}  // namespace vflow
