#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tda/dynamics.hpp"
#include "tda/engine.hpp"
#include "tda/tensor.hpp"
#include "tda/topology.hpp"

namespace tda {

enum class LayerKind { RESERVOIR, DENSE, CONV };

/// One layer of conventional LIF neurons (no autapses). DENSE and
/// RESERVOIR use `weights` as n_out x n_in; RESERVOIR adds the square
/// `recurrent` matrix. CONV uses `weights` as the c_out x (c_in k k) kernel
/// tensor with the geometry in `conv`.
struct StdLayer {
  LayerKind kind = LayerKind::DENSE;
  Matrix weights;
  Matrix recurrent;
  ConvMapSpec conv;
  LifParams lif;

  std::size_t n_inputs() const;
  std::size_t n_neurons() const;
  void validate() const;
};

/// Output of a baseline layer over T external steps, [T][neuron].
struct LayerTrace {
  std::size_t T = 0;
  std::size_t n = 0;
  std::vector<double> v;
  std::vector<Spike> spikes;

  std::vector<double> spikes_as_double() const { return {spikes.begin(), spikes.end()}; }
};

/// v^t = tau v^{t-1}(1 - s^{t-1}) + W in^t (+ W_rec s^{t-1}); membrane
/// carried across external steps per neuron. Input laid out [T][n_in].
LayerTrace std_forward(const StdLayer& layer, std::span<const double> input, std::size_t T,
                       FlopCounter* flops = nullptr);

/// Direct zero-padded spatial convolution feeding the LIF update, input
/// [T][c_in][H][W], output [T][c_out][H'][W']. Every kernel tap counts two
/// FLOPs, padded taps included.
LayerTrace std_conv_forward(const StdLayer& layer, std::span<const double> input, std::size_t T,
                            FlopCounter* flops = nullptr);

/// Runs either layer kind.
LayerTrace run_layer(const StdLayer& layer, std::span<const double> input, std::size_t T,
                     FlopCounter* flops = nullptr);

/// Standard layers structurally equivalent to a TDA model: a DENSE layer
/// with the input weights, followed by one DENSE (MLP) or CONV layer per
/// segment boundary built from export_equivalent_matrix.
std::vector<StdLayer> equivalent_std_network(const TdaConfig& config);

/// Dense recurrence for reservoir baselines, Gaussian N(0, scale^2 / n).
StdLayer make_reservoir(std::size_t n_in, std::size_t n, const LifParams& lif, std::uint64_t seed, double scale = 1.0);

}  // namespace tda
