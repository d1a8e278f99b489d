#include "tda/reference.hpp"

#include <algorithm>
#include <utility>

#include "tda/error.hpp"

namespace tda {

namespace {

// Incoming (delay, weight) pairs per node, sources ascending.
std::vector<std::vector<std::pair<std::size_t, double>>> incoming(const TdaConfig& config) {
  const AutapseTopology& topo = *config.topology;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_src(topo.n_nodes + 1);
  for (const Edge& e : topo.edges) by_src[e.dst].emplace_back(e.src, e.slot);
  std::vector<std::vector<std::pair<std::size_t, double>>> out(topo.n_nodes + 1);
  for (std::size_t node = 1; node <= topo.n_nodes; ++node) {
    auto& list = by_src[node];
    std::sort(list.begin(), list.end());
    for (auto [src, slot] : list) out[node].emplace_back(node - src, config.autapse_weights[slot]);
  }
  return out;
}

}  // namespace

NeuronTrace reference_forward(const TdaConfig& config, std::span<const double> x) {
  config.validate();
  const AutapseTopology& topo = *config.topology;
  const std::size_t n = topo.n_nodes;
  const std::size_t T = config.external_T;
  const std::size_t n_in = topo.input_nodes();
  const std::size_t dim = config.input_dim;
  if (x.size() != T * dim) throw InvalidInput("reference_forward: input shape mismatch");
  const auto in = incoming(config);
  const bool strict = config.dynamics == Dynamics::STRICT;

  NeuronTrace tr;
  tr.T = T;
  tr.n_nodes = n;
  tr.n_input = n_in;
  tr.v.assign(T * n, 0.0);
  tr.spikes.assign(T * n, 0);
  tr.i_ext.assign(T * n_in, 0.0);

  SpikeHistory history(std::max<std::size_t>(topo.max_delay(), 1));
  for (std::size_t te = 0; te < T; ++te) {
    std::span<double> proj(tr.i_ext.data() + te * n_in, n_in);
    matvec(config.input_weights, x.subspan(te * dim, dim), proj);
    history.clear();
    double v_prev = 0.0, s_prev = 0.0;
    for (std::size_t node = 1; node <= n; ++node) {
      const std::size_t t0 = node - 1;
      if (strict) {
        v_prev = te > 0 ? tr.v[(te - 1) * n + t0] : 0.0;
        s_prev = te > 0 ? tr.spikes[(te - 1) * n + t0] : 0.0;
      }
      const double i_ext = t0 < n_in ? proj[t0] : 0.0;
      const double i_aut = autapse_current(history, in[node], node);
      const double v = membrane_step(config.lif, v_prev, s_prev, i_ext, i_aut);
      const Spike s = hard_spike(v, config.lif.v_th);
      tr.v[te * n + t0] = v;
      tr.spikes[te * n + t0] = s;
      history.push(s);
      v_prev = v;
      s_prev = s;
    }
  }
  return tr;
}

std::vector<NeuronTrace> reference_forward_batch(const TdaConfig& config, std::span<const double> inputs,
                                                 std::size_t batch) {
  const std::size_t per = config.external_T * config.input_dim;
  if (inputs.size() != batch * per) throw InvalidInput("reference_forward_batch: input size does not match batch");
  std::vector<NeuronTrace> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(reference_forward(config, inputs.subspan(b * per, per)));
  return out;
}

}  // namespace tda
