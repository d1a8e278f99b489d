#include "tda/baseline.hpp"

#include <cmath>
#include <random>

#include "tda/error.hpp"

namespace tda {

std::size_t StdLayer::n_inputs() const {
  return kind == LayerKind::CONV ? conv.input_nodes() : weights.cols;
}

std::size_t StdLayer::n_neurons() const {
  return kind == LayerKind::CONV ? conv.output_nodes() : weights.rows;
}

void StdLayer::validate() const {
  lif.validate();
  if (kind == LayerKind::CONV) {
    conv.validate();
    if (weights.rows != conv.c_out || weights.cols != conv.c_in * conv.kernel * conv.kernel)
      throw InvalidSpec("conv layer: kernel tensor shape mismatch");
  }
  if (kind == LayerKind::RESERVOIR && (recurrent.rows != weights.rows || recurrent.cols != weights.rows))
    throw InvalidSpec("reservoir layer: recurrent matrix must be square n x n");
}

LayerTrace std_forward(const StdLayer& layer, std::span<const double> input, std::size_t T, FlopCounter* flops) {
  if (layer.kind == LayerKind::CONV) return std_conv_forward(layer, input, T, flops);
  layer.validate();
  const std::size_t n_in = layer.n_inputs(), n = layer.n_neurons();
  if (input.size() != T * n_in) throw InvalidInput("std_forward: input shape mismatch");
  LayerTrace out{T, n, std::vector<double>(T * n, 0.0), std::vector<Spike>(T * n, 0)};
  const bool recurrent = layer.kind == LayerKind::RESERVOIR;
  std::vector<double> current(n), rec(n), s_prev(n, 0.0), v_prev(n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    matvec(layer.weights, input.subspan(t * n_in, n_in), current);
    if (recurrent) {
      matvec(layer.recurrent, s_prev, rec);
      if (flops) {
        flops->synaptic += n * n;
        flops->input += n * n_in;
      }
    } else if (flops) {
      flops->synaptic += n * n_in;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double v = membrane_update(layer.lif.tau, v_prev[i], s_prev[i], current[i], recurrent ? rec[i] : 0.0);
      out.v[t * n + i] = v;
      out.spikes[t * n + i] = hard_spike(v, layer.lif.v_th);
      v_prev[i] = v;
      s_prev[i] = out.spikes[t * n + i];
    }
  }
  return out;
}

LayerTrace std_conv_forward(const StdLayer& layer, std::span<const double> input, std::size_t T, FlopCounter* flops) {
  if (layer.kind != LayerKind::CONV) throw InvalidSpec("std_conv_forward: layer is not convolutional");
  layer.validate();
  const ConvMapSpec& c = layer.conv;
  const std::size_t H = c.in_height, W = c.in_width, k = c.kernel;
  const std::size_t oh = c.out_height(), ow = c.out_width();
  const std::size_t n_in = c.input_nodes(), n = c.output_nodes();
  if (input.size() != T * n_in) throw InvalidInput("std_conv_forward: input shape mismatch");
  LayerTrace out{T, n, std::vector<double>(T * n, 0.0), std::vector<Spike>(T * n, 0)};
  std::vector<double> s_prev(n, 0.0), v_prev(n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* in = input.data() + t * n_in;
    for (std::size_t co = 0; co < c.c_out; ++co)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < c.c_in; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(i * c.stride + ky) - static_cast<std::ptrdiff_t>(c.padding);
                const auto x = static_cast<std::ptrdiff_t>(j * c.stride + kx) - static_cast<std::ptrdiff_t>(c.padding);
                const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(H) &&
                                    x < static_cast<std::ptrdiff_t>(W);
                const double pix =
                    inside ? in[(ci * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)] : 0.0;
                acc += layer.weights(co, (ci * k + ky) * k + kx) * pix;
              }
          if (flops) flops->synaptic += 2 * c.c_in * k * k;
          const std::size_t o = (co * oh + i) * ow + j;
          const double v = membrane_update(layer.lif.tau, v_prev[o], s_prev[o], acc, 0.0);
          out.v[t * n + o] = v;
          out.spikes[t * n + o] = hard_spike(v, layer.lif.v_th);
          v_prev[o] = v;
          s_prev[o] = out.spikes[t * n + o];
        }
  }
  return out;
}

LayerTrace run_layer(const StdLayer& layer, std::span<const double> input, std::size_t T, FlopCounter* flops) {
  return layer.kind == LayerKind::CONV ? std_conv_forward(layer, input, T, flops) : std_forward(layer, input, T, flops);
}

std::vector<StdLayer> equivalent_std_network(const TdaConfig& config) {
  config.validate();
  const AutapseTopology& topo = *config.topology;
  if (topo.mode == Mode::RC) throw InvalidSpec("equivalent network: RC topologies have no layered equivalent");
  std::vector<StdLayer> net;
  StdLayer first;
  first.kind = LayerKind::DENSE;
  first.weights = config.input_weights;
  first.lif = config.lif;
  net.push_back(first);
  const auto mats = export_equivalent_matrix(topo, config.autapse_weights);
  for (const Matrix& m : mats) {
    StdLayer l;
    l.lif = config.lif;
    l.weights = m;
    if (topo.mode == Mode::CONV) {
      l.kind = LayerKind::CONV;
      l.conv = *topo.conv;
    } else {
      l.kind = LayerKind::DENSE;
    }
    net.push_back(std::move(l));
  }
  return net;
}

StdLayer make_reservoir(std::size_t n_in, std::size_t n, const LifParams& lif, std::uint64_t seed, double scale) {
  StdLayer l;
  l.kind = LayerKind::RESERVOIR;
  l.lif = lif;
  l.weights = Matrix(n, n_in);
  l.recurrent = Matrix(n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale / std::sqrt(static_cast<double>(n)));
  const double wb = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, n_in)));
  std::uniform_real_distribution<double> uni(-wb, wb);
  for (double& x : l.weights.data) x = uni(rng);
  for (double& x : l.recurrent.data) x = gauss(rng);
  return l;
}

}  // namespace tda
