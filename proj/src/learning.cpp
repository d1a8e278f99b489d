#include "tda/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tda/error.hpp"

namespace tda {

Matrix PrototypeBank::binarized() const {
  Matrix k(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.size(); ++i) k.data[i] = hard_spike(logits.data[i], 0.5);
  return k;
}

Matrix PrototypeBank::soft_binarized(double alpha) const {
  const LifParams p{0.0, 0.5, alpha};
  Matrix k(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.size(); ++i) k.data[i] = soft_spike(logits.data[i], p);
  return k;
}

double prototype_distance(std::span<const double> f, std::span<const double> k) {
  if (f.size() != k.size()) throw InvalidInput("prototype_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double diff = f[i] - k[i];
    acc += diff * diff;
  }
  return -acc;
}

std::vector<double> prototype_distances(std::span<const double> f, const Matrix& K) {
  std::vector<double> d(K.rows);
  for (std::size_t i = 0; i < K.rows; ++i) d[i] = prototype_distance(f, K.row(i));
  return d;
}

namespace {

double log_sum_exp(std::span<const double> d) {
  const double m = *std::max_element(d.begin(), d.end());
  double acc = 0.0;
  for (double x : d) acc += std::exp(x - m);
  return m + std::log(acc);
}

void check_dists(std::span<const double> dists, std::size_t true_class) {
  if (dists.empty() || true_class >= dists.size()) throw InvalidInput("prototype_loss: class index out of range");
  for (double x : dists)
    if (!std::isfinite(x)) throw NumericError("prototype_loss: non-finite distance");
}

}  // namespace

double prototype_loss(std::span<const double> dists, std::size_t true_class, double lambda) {
  check_dists(dists, true_class);
  return log_sum_exp(dists) - dists[true_class] - lambda * dists[true_class];
}

std::vector<double> prototype_loss_grad(std::span<const double> dists, std::size_t true_class, double lambda) {
  check_dists(dists, true_class);
  const double lse = log_sum_exp(dists);
  std::vector<double> g(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) g[i] = std::exp(dists[i] - lse);
  g[true_class] -= 1.0 + lambda;
  return g;
}

std::vector<double> readout_grad(std::span<const double> f, const Matrix& K, std::span<const double> dloss_ddist) {
  std::vector<double> g(f.size(), 0.0);
  for (std::size_t i = 0; i < K.rows; ++i) {
    const double c = -2.0 * dloss_ddist[i];
    const double* k = K.data.data() + i * K.cols;
    for (std::size_t l = 0; l < f.size(); ++l) g[l] += c * (f[l] - k[l]);
  }
  return g;
}

Matrix prototype_backward(std::span<const double> f, const Matrix& K, const Matrix& P, std::span<const double> dists,
                          std::size_t true_class, double lambda, double alpha) {
  if (K.rows != P.rows || K.cols != P.cols || f.size() != K.cols) throw InvalidInput("prototype_backward: shape mismatch");
  const auto gd = prototype_loss_grad(dists, true_class, lambda);
  const LifParams bin{0.0, 0.5, alpha};
  Matrix g(P.rows, P.cols);
  for (std::size_t i = 0; i < P.rows; ++i) {
    const double c = 2.0 * gd[i];
    for (std::size_t l = 0; l < P.cols; ++l)
      g(i, l) = c * (f[l] - K(i, l)) * soft_spike_grad(P(i, l), bin);
  }
  return g;
}

std::vector<double> membrane_gradients(const TdaConfig& config, const NeuronTrace& trace,
                                       std::span<const double> dloss_dreadout, const BackwardOptions& opt) {
  const AutapseTopology& topo = *config.topology;
  const std::size_t n = topo.n_nodes;
  const std::size_t T = trace.T;
  if (trace.n_nodes != n || T != config.external_T) throw InvalidInput("backward: trace does not match config");
  if (dloss_dreadout.size() != config.readout_length()) throw InvalidInput("backward: readout gradient length mismatch");

  const std::size_t r_begin = topo.readout_begin() - 1;
  const std::size_t r_count = topo.readout_count();
  const double tau = config.lif.tau;
  const double* w = config.autapse_weights.data();
  const bool strict = config.dynamics == Dynamics::STRICT;

  std::vector<double> gv(T * n, 0.0);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t te = strict ? T - 1 - step : step;
    double* g_row = gv.data() + te * n;
    const double* g_after = strict && te + 1 < T ? g_row + n : nullptr;
    for (std::size_t t0 = n; t0-- > 0;) {
      const double v = trace.potential(te, t0);
      const double s = trace.s(te, t0);

      double gs = 0.0;
      if (t0 >= r_begin && t0 < r_begin + r_count) gs = dloss_dreadout[te * r_count + (t0 - r_begin)];
      const std::size_t node = t0 + 1;
      for (std::size_t k = topo.out_offsets[node]; k < topo.out_offsets[node + 1]; ++k) {
        const Edge& e = topo.edges[topo.out_edges[k]];
        gs += g_row[e.dst - 1] * w[e.slot];
      }

      // Gradient of the membrane that inherits this node's potential: the
      // next node in PAPER mode, the same node one external step later in
      // STRICT mode.
      double g_next = 0.0;
      if (strict) {
        if (g_after) g_next = g_after[t0];
      } else if (t0 + 1 < n) {
        g_next = g_row[t0 + 1];
      }
      if (!opt.detach_reset) gs += g_next * (-tau * v);
      g_row[t0] = gs * soft_spike_grad(v, config.lif) + g_next * tau * (1.0 - s);
    }
  }
  return gv;
}

namespace {

void size_bundle(const TdaConfig& config, GradientBundle& out) {
  if (out.grad_W.rows != config.input_weights.rows || out.grad_W.cols != config.input_weights.cols)
    out.grad_W = Matrix(config.input_weights.rows, config.input_weights.cols);
  if (out.grad_autapse.size() != config.autapse_weights.size()) out.grad_autapse.assign(config.autapse_weights.size(), 0.0);
}

}  // namespace

void backward(const TdaConfig& config, const NeuronTrace& trace, std::span<const double> x,
              std::span<const double> dloss_dreadout, GradientBundle& out, const BackwardOptions& opt) {
  if (x.size() != config.external_T * config.input_dim) throw InvalidInput("backward: input shape mismatch");
  const auto gv = membrane_gradients(config, trace, dloss_dreadout, opt);
  size_bundle(config, out);
  const AutapseTopology& topo = *config.topology;
  const std::size_t n = topo.n_nodes;
  for (std::size_t te = 0; te < trace.T; ++te) {
    for (const Edge& e : topo.edges) out.grad_autapse[e.slot] += gv[te * n + e.dst - 1] * trace.s(te, e.src - 1);
    const double* xt = x.data() + te * config.input_dim;
    for (std::size_t r = 0; r < config.input_weights.rows; ++r) {
      const double g = gv[te * n + r];
      if (g == 0.0) continue;
      double* row = out.grad_W.data.data() + r * config.input_dim;
      for (std::size_t j = 0; j < config.input_dim; ++j) row[j] += g * xt[j];
    }
  }
}

GradientBundle backward(const TdaConfig& config, const NeuronTrace& trace, std::span<const double> x,
                        std::span<const double> dloss_dreadout, const BackwardOptions& opt) {
  GradientBundle out;
  backward(config, trace, x, dloss_dreadout, out, opt);
  return out;
}

SampleResult sample_loss_and_grad(const TdaModel& model, std::span<const double> x, std::size_t label, bool soft) {
  const TdaConfig& cfg = model.config;
  const NeuronTrace trace = soft ? forward_soft(cfg, x) : forward(cfg, x);
  const auto f = readout(trace, cfg);
  const Matrix K = soft ? model.prototypes.soft_binarized(cfg.lif.alpha) : model.prototypes.binarized();
  const auto d = prototype_distances(f, K);

  SampleResult r;
  r.loss = prototype_loss(d, label, model.prototypes.lambda);
  r.predicted = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
  const auto gd = prototype_loss_grad(d, label, model.prototypes.lambda);
  const auto gf = readout_grad(f, K, gd);
  BackwardOptions opt;
  opt.detach_reset = !soft;
  backward(cfg, trace, x, gf, r.grads, opt);
  r.grads.grad_prototype_logits =
      prototype_backward(f, K, model.prototypes.logits, d, label, model.prototypes.lambda, cfg.lif.alpha);
  return r;
}

double sample_loss(const TdaModel& model, std::span<const double> x, std::size_t label, bool soft) {
  const TdaConfig& cfg = model.config;
  const NeuronTrace trace = soft ? forward_soft(cfg, x) : forward(cfg, x);
  const auto f = readout(trace, cfg);
  const Matrix K = soft ? model.prototypes.soft_binarized(cfg.lif.alpha) : model.prototypes.binarized();
  return prototype_loss(prototype_distances(f, K), label, model.prototypes.lambda);
}

std::size_t predict(const TdaModel& model, std::span<const double> x) {
  const auto f = readout(forward(model.config, x), model.config);
  const auto d = prototype_distances(f, model.prototypes.binarized());
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

double cosine_lr(const AdamParams& p, std::size_t epoch) {
  if (p.total_epochs == 0) return p.base_lr;
  const double frac = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(p.total_epochs));
  return 0.5 * p.base_lr * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void OptimState::init(const TdaModel& model) {
  m_W.assign(model.config.input_weights.size(), 0.0);
  v_W = m_W;
  m_aut.assign(model.config.autapse_weights.size(), 0.0);
  v_aut = m_aut;
  m_proto.assign(model.prototypes.logits.size(), 0.0);
  v_proto = m_proto;
  step = 0;
  epoch = 0;
}

namespace {

void check_finite(std::span<const double> g, const char* name) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i]))
      throw NumericError(std::string("optimizer: non-finite gradient in ") + name + " at index " + std::to_string(i));
}

void adam_update(std::span<double> p, std::span<const double> g, std::vector<double>& m, std::vector<double>& v,
                 const AdamParams& a, double lr, double bc1, double bc2) {
  if (g.empty()) return;
  if (g.size() != p.size() || m.size() != p.size()) throw InvalidInput("optimizer: shape mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
    v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + a.eps);
  }
}

}  // namespace

void optimizer_step(TdaModel& model, const GradientBundle& grads, OptimState& state) {
  check_finite(grads.grad_W.data, "input weights");
  check_finite(grads.grad_autapse, "autapse weights");
  check_finite(grads.grad_prototype_logits.data, "prototype logits");
  ++state.step;
  const AdamParams& a = state.params;
  const double lr = cosine_lr(a, state.epoch);
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.step));
  adam_update(model.config.input_weights.data, grads.grad_W.data, state.m_W, state.v_W, a, lr, bc1, bc2);
  adam_update(model.config.autapse_weights, grads.grad_autapse, state.m_aut, state.v_aut, a, lr, bc1, bc2);
  adam_update(model.prototypes.logits.data, grads.grad_prototype_logits.data, state.m_proto, state.v_proto, a, lr, bc1,
              bc2);
}

}  // namespace tda
