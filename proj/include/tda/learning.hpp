#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tda/engine.hpp"
#include "tda/tensor.hpp"

namespace tda {

/// Learnable real logits P (C x L) and their binarization K = [P >= 0.5].
struct PrototypeBank {
  Matrix logits;
  double lambda = 0.001;

  std::size_t n_classes() const { return logits.rows; }
  std::size_t length() const { return logits.cols; }
  Matrix binarized() const;
  /// soft_spike(P) with threshold 0.5; the differentiable twin of binarized().
  Matrix soft_binarized(double alpha) const;
};

struct GradientBundle {
  Matrix grad_W;
  std::vector<double> grad_autapse;
  Matrix grad_prototype_logits;
};

struct BackwardOptions {
  /// Drop the -tau v dS/dv term of the reset factor. Training detaches it;
  /// gradient checking against the soft forward keeps it.
  bool detach_reset = true;
};

/// -||f - k||^2
double prototype_distance(std::span<const double> f, std::span<const double> k);
std::vector<double> prototype_distances(std::span<const double> f, const Matrix& K);

/// -log softmax(d)[true_class] - lambda * d[true_class], stabilized.
double prototype_loss(std::span<const double> dists, std::size_t true_class, double lambda);
/// dL/dd_i = softmax_i - [i == true] - lambda [i == true].
std::vector<double> prototype_loss_grad(std::span<const double> dists, std::size_t true_class, double lambda);

/// dL/df = sum_i dL/dd_i * (-2)(f - k_i).
std::vector<double> readout_grad(std::span<const double> f, const Matrix& K, std::span<const double> dloss_ddist);

/// dL/dP = dL/dd_i * 2(f - k_i) * soft_spike_grad(P; threshold 0.5), per row.
Matrix prototype_backward(std::span<const double> f, const Matrix& K, const Matrix& P, std::span<const double> dists,
                          std::size_t true_class, double lambda, double alpha);

/// Membrane-potential gradients for every node of a trace, given dL/df at
/// the readout. Result is laid out like trace.v.
std::vector<double> membrane_gradients(const TdaConfig& config, const NeuronTrace& trace,
                                       std::span<const double> dloss_dreadout, const BackwardOptions& opt = {});

/// Weight gradients of one sample: grad_W and grad_autapse (prototype part
/// left empty). Accumulates into `out` when its tensors are already sized.
void backward(const TdaConfig& config, const NeuronTrace& trace, std::span<const double> x,
              std::span<const double> dloss_dreadout, GradientBundle& out, const BackwardOptions& opt = {});
GradientBundle backward(const TdaConfig& config, const NeuronTrace& trace, std::span<const double> x,
                        std::span<const double> dloss_dreadout, const BackwardOptions& opt = {});

/// A trainable model: the unfolded neuron plus its prototype bank.
struct TdaModel {
  TdaConfig config;
  PrototypeBank prototypes;
};

/// Loss and gradients of one sample under the hard forward (training path)
/// or the soft forward (checking path, reset attached).
struct SampleResult {
  double loss = 0.0;
  std::size_t predicted = 0;
  GradientBundle grads;
};

SampleResult sample_loss_and_grad(const TdaModel& model, std::span<const double> x, std::size_t label, bool soft);
double sample_loss(const TdaModel& model, std::span<const double> x, std::size_t label, bool soft);
/// Index of the nearest hard prototype to the hard readout (ties -> lowest).
std::size_t predict(const TdaModel& model, std::span<const double> x);

struct AdamParams {
  double base_lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t total_epochs = 100;
};

/// Cosine decay from base_lr at epoch 0 towards 0 at total_epochs.
double cosine_lr(const AdamParams& p, std::size_t epoch);

struct OptimState {
  AdamParams params;
  std::vector<double> m_W, v_W, m_aut, v_aut, m_proto, v_proto;
  std::uint64_t step = 0;
  std::size_t epoch = 0;

  void init(const TdaModel& model);
};

/// One Adam update at the current epoch's cosine learning rate. Throws
/// NumericError (naming the tensor) if any gradient is non-finite.
void optimizer_step(TdaModel& model, const GradientBundle& grads, OptimState& state);

}  // namespace tda
