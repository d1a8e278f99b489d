#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tda {

using Spike = std::uint8_t;

/// Leak factor, firing threshold and surrogate sharpness of a LIF unit.
struct LifParams {
  double tau = 0.5;
  double v_th = 0.3;
  double alpha = 2.0;

  /// Throws InvalidSpec unless 0 <= tau <= 1, v_th > 0 and alpha > 0.
  void validate() const;
};

/// State of one internal node after its update.
struct NodeState {
  double v = 0.0;
  Spike s = 0;
  int node_index = 1;
};

/// tau * v_prev * (1 - s_prev) + i_ext + i_autapse, evaluated left to right.
/// Throws NumericError on non-finite arguments or result.
double membrane_step(const LifParams& p, double v_prev, double s_prev, double i_ext, double i_autapse);

/// Unchecked form for inner loops; same expression and evaluation order.
inline double membrane_update(double tau, double v_prev, double s_prev, double i_ext, double i_autapse) {
  return tau * v_prev * (1.0 - s_prev) + i_ext + i_autapse;
}

/// Fires at or above threshold.
inline Spike hard_spike(double v, double v_th) { return v >= v_th ? 1 : 0; }

/// (1/pi) atan((pi/2) alpha (v - v_th)) + 1/2
double soft_spike(double v, const LifParams& p);

/// d soft_spike / dv = (alpha/2) / (1 + ((pi/2) alpha (v - v_th))^2)
double soft_spike_grad(double v, const LifParams& p);

/// Ring buffer of the most recent spikes of one node lane. Slot for node t
/// is t mod capacity; reading delay d at node t yields s^{t-d}, or 0 when
/// t - d < 1 or d exceeds the capacity.
class SpikeHistory {
 public:
  explicit SpikeHistory(std::size_t capacity);

  /// Records s for the next node; nodes are pushed in order 1, 2, ...
  void push(double s);
  /// s^{t-d} where t is the node about to be computed (pushed() + 1).
  double at_delay(std::size_t d) const;
  /// Number of nodes recorded so far.
  std::size_t pushed() const { return count_; }
  std::size_t capacity() const { return buf_.size(); }
  void clear();

 private:
  std::vector<double> buf_;
  std::size_t count_ = 0;
};

/// sum over (d, w) of w * s^{t-d}, restricted to 1 <= d < t, accumulated in
/// the order the weights are given.
double autapse_current(const SpikeHistory& history, std::span<const std::pair<std::size_t, double>> weights,
                       std::size_t t);

}  // namespace tda
