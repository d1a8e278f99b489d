#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tda/dynamics.hpp"
#include "tda/tensor.hpp"
#include "tda/topology.hpp"

namespace tda {

/// PAPER: membrane carries from node t-1 to node t within an external step
/// and restarts at 0 for every external step. STRICT: no carry across nodes;
/// each node carries its own membrane across external steps, so every node
/// behaves as one standard LIF neuron.
enum class Dynamics { PAPER, STRICT };

std::string to_string(Dynamics d);
Dynamics parse_dynamics(const std::string& s);

/// Full description of one unfolded TDA model, parameters included.
struct TdaConfig {
  std::shared_ptr<const AutapseTopology> topology;
  LifParams lif;
  std::size_t external_T = 1;
  Dynamics dynamics = Dynamics::PAPER;
  std::size_t input_dim = 0;
  /// (input-receiving nodes) x input_dim; every node in RC mode, the first
  /// segment otherwise.
  Matrix input_weights;
  /// One weight per topology slot.
  std::vector<double> autapse_weights;

  Mode mode() const { return topology->mode; }
  std::size_t n_nodes() const { return topology->n_nodes; }
  std::size_t readout_length() const { return topology->readout_count() * external_T; }
  void validate() const;
};

/// Per-sample forward record, laid out [external step][node] (node 0-based
/// in storage, 1-based in the model).
struct NeuronTrace {
  std::size_t T = 0;
  std::size_t n_nodes = 0;
  std::size_t n_input = 0;
  std::vector<double> v;
  std::vector<Spike> spikes;
  /// Real-valued spikes; filled only by forward_soft.
  std::vector<double> soft_spikes;
  /// Projection W x^t fed to the input-receiving nodes, [T][n_input].
  std::vector<double> i_ext;

  bool soft() const { return !soft_spikes.empty(); }
  double s(std::size_t te, std::size_t node0) const {
    const std::size_t i = te * n_nodes + node0;
    return soft() ? soft_spikes[i] : static_cast<double>(spikes[i]);
  }
  double potential(std::size_t te, std::size_t node0) const { return v[te * n_nodes + node0]; }
};

/// Multiply-accumulate tallies: `synaptic` counts autaptic (or, for baseline
/// layers, the layer's own weight) operations; `input` the external projection.
/// Convolution taps count 2 (multiply and add), dense taps 1.
struct FlopCounter {
  std::uint64_t synaptic = 0;
  std::uint64_t input = 0;
};

/// Hard-threshold forward pass of one sample, x laid out [T][input_dim].
NeuronTrace forward(const TdaConfig& config, std::span<const double> x, FlopCounter* flops = nullptr);

/// The same wiring with soft_spike in place of every hard threshold (reset
/// factor included). Used by gradient checking.
NeuronTrace forward_soft(const TdaConfig& config, std::span<const double> x);

/// Forward over a batch; samples are distributed over OpenMP threads and
/// each writes only its own trace. `inputs` holds batch x T x input_dim.
std::vector<NeuronTrace> forward_batch(const TdaConfig& config, std::span<const double> inputs, std::size_t batch);

/// Spikes of the readout nodes over all external steps, [T][readout node].
std::vector<double> readout(const NeuronTrace& trace, const TdaConfig& config);

/// Trace dump: u32 T, u32 n_nodes, T*n spike bytes, T*n f64 potentials (LE).
void write_trace(std::ostream& os, const NeuronTrace& trace);
NeuronTrace read_trace(std::istream& is);

}  // namespace tda
