#include "tda/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <istream>
#include <ostream>

#include "tda/error.hpp"

namespace tda {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string to_string(Dynamics d) { return d == Dynamics::PAPER ? "paper" : "strict"; }

Dynamics parse_dynamics(const std::string& s) {
  if (s == "paper") return Dynamics::PAPER;
  if (s == "strict") return Dynamics::STRICT;
  throw InvalidSpec("unknown dynamics '" + s + "'");
}

void TdaConfig::validate() const {
  if (!topology) throw InvalidSpec("config: missing topology");
  lif.validate();
  if (external_T < 1) throw InvalidSpec("config: external_T must be >= 1");
  if (input_weights.rows != topology->input_nodes() || input_weights.cols != input_dim)
    throw InvalidSpec("config: input weights must be " + std::to_string(topology->input_nodes()) + " x " +
                      std::to_string(input_dim));
  if (autapse_weights.size() != topology->n_weight_slots)
    throw InvalidSpec("config: expected " + std::to_string(topology->n_weight_slots) + " autapse weights");
}

namespace {

void check_input(const TdaConfig& config, std::span<const double> x) {
  if (x.size() != config.external_T * config.input_dim)
    throw InvalidInput("forward: input has " + std::to_string(x.size()) + " values, expected " +
                       std::to_string(config.external_T * config.input_dim));
}

template <bool Soft>
void run_forward(const TdaConfig& config, std::span<const double> x, NeuronTrace& tr, FlopCounter* flops) {
  const AutapseTopology& topo = *config.topology;
  const std::size_t n = topo.n_nodes;
  const std::size_t T = config.external_T;
  const std::size_t n_in = topo.input_nodes();
  const std::size_t dim = config.input_dim;
  const double tau = config.lif.tau;
  const double v_th = config.lif.v_th;
  const bool strict = config.dynamics == Dynamics::STRICT;
  const double* w = config.autapse_weights.data();
  // Convolution taps are tallied as multiply plus add, like the baseline.
  const std::uint64_t tap_cost = topo.mode == Mode::CONV ? 2 : 1;

  tr.T = T;
  tr.n_nodes = n;
  tr.n_input = n_in;
  tr.v.assign(T * n, 0.0);
  tr.spikes.assign(T * n, 0);
  if constexpr (Soft) tr.soft_spikes.assign(T * n, 0.0);
  tr.i_ext.assign(T * n_in, 0.0);

  for (std::size_t te = 0; te < T; ++te) {
    std::span<double> proj(tr.i_ext.data() + te * n_in, n_in);
    const double* xt = x.data() + te * dim;
    // Repeated input rows (direct encoding) reuse the previous projection.
    if (te > 0 && std::memcmp(xt, xt - dim, dim * sizeof(double)) == 0) {
      std::copy_n(proj.data() - n_in, n_in, proj.data());
    } else {
      matvec(config.input_weights, {xt, dim}, proj);
    }
    if (flops) flops->input += n_in * dim;

    double* v_row = tr.v.data() + te * n;
    Spike* hard_row = tr.spikes.data() + te * n;
    double* soft_row = Soft ? tr.soft_spikes.data() + te * n : nullptr;
    const double* v_last = te > 0 ? v_row - n : nullptr;

    double v_prev = 0.0, s_prev = 0.0;
    for (std::size_t t0 = 0; t0 < n; ++t0) {
      if (strict) {
        v_prev = te > 0 ? v_last[t0] : 0.0;
        s_prev = te > 0 ? (Soft ? (soft_row - n)[t0] : static_cast<double>((hard_row - n)[t0])) : 0.0;
      }
      const double i_ext = t0 < n_in ? proj[t0] : 0.0;
      double i_aut = 0.0;
      const std::size_t node = t0 + 1;
      for (std::size_t k = topo.in_offsets[node]; k < topo.in_offsets[node + 1]; ++k) {
        const Edge& e = topo.edges[topo.in_edges[k]];
        const double s_src = Soft ? soft_row[e.src - 1] : static_cast<double>(hard_row[e.src - 1]);
        i_aut += w[e.slot] * s_src;
      }
      if (flops) flops->synaptic += tap_cost * (topo.in_offsets[node + 1] - topo.in_offsets[node]);

      const double v = membrane_update(tau, v_prev, s_prev, i_ext, i_aut);
      v_row[t0] = v;
      hard_row[t0] = hard_spike(v, v_th);
      double s;
      if constexpr (Soft) {
        s = soft_spike(v, config.lif);
        soft_row[t0] = s;
      } else {
        s = hard_row[t0];
      }
      v_prev = v;
      s_prev = s;
    }
  }
  if (std::any_of(tr.v.begin(), tr.v.end(), [](double v) { return !std::isfinite(v); }))
    throw NumericError("forward: non-finite membrane potential");
}

}  // namespace

NeuronTrace forward(const TdaConfig& config, std::span<const double> x, FlopCounter* flops) {
  check_input(config, x);
  NeuronTrace tr;
  run_forward<false>(config, x, tr, flops);
  return tr;
}

NeuronTrace forward_soft(const TdaConfig& config, std::span<const double> x) {
  check_input(config, x);
  NeuronTrace tr;
  run_forward<true>(config, x, tr, nullptr);
  return tr;
}

std::vector<NeuronTrace> forward_batch(const TdaConfig& config, std::span<const double> inputs, std::size_t batch) {
  const std::size_t per = config.external_T * config.input_dim;
  if (inputs.size() != batch * per) throw InvalidInput("forward_batch: input size does not match batch");
  std::vector<NeuronTrace> traces(batch);
  std::vector<std::exception_ptr> errors(batch);
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const auto i = static_cast<std::size_t>(b);
    try {
      run_forward<false>(config, inputs.subspan(i * per, per), traces[i], nullptr);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

std::vector<double> readout(const NeuronTrace& trace, const TdaConfig& config) {
  const AutapseTopology& topo = *config.topology;
  const std::size_t begin0 = topo.readout_begin() - 1;
  const std::size_t count = topo.readout_count();
  std::vector<double> f(count * trace.T);
  for (std::size_t te = 0; te < trace.T; ++te)
    for (std::size_t k = 0; k < count; ++k) f[te * count + k] = trace.s(te, begin0 + k);
  return f;
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError("trace dump: truncated");
  return value;
}

}  // namespace

void write_trace(std::ostream& os, const NeuronTrace& trace) {
  put(os, static_cast<std::uint32_t>(trace.T));
  put(os, static_cast<std::uint32_t>(trace.n_nodes));
  os.write(reinterpret_cast<const char*>(trace.spikes.data()), static_cast<std::streamsize>(trace.spikes.size()));
  os.write(reinterpret_cast<const char*>(trace.v.data()), static_cast<std::streamsize>(trace.v.size() * sizeof(double)));
  if (!os) throw IoError("trace dump: write failed");
}

NeuronTrace read_trace(std::istream& is) {
  NeuronTrace tr;
  tr.T = get<std::uint32_t>(is);
  tr.n_nodes = get<std::uint32_t>(is);
  tr.spikes.resize(tr.T * tr.n_nodes);
  tr.v.resize(tr.T * tr.n_nodes);
  if (!is.read(reinterpret_cast<char*>(tr.spikes.data()), static_cast<std::streamsize>(tr.spikes.size())) ||
      !is.read(reinterpret_cast<char*>(tr.v.data()), static_cast<std::streamsize>(tr.v.size() * sizeof(double))))
    throw ParseError("trace dump: truncated");
  return tr;
}

}  // namespace tda
