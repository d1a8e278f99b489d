#include "tda/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tda/error.hpp"

namespace tda {

void LifParams::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidSpec("tau must lie in [0, 1]");
  if (!(v_th > 0.0)) throw InvalidSpec("v_th must be positive");
  if (!(alpha > 0.0)) throw InvalidSpec("alpha must be positive");
}

double membrane_step(const LifParams& p, double v_prev, double s_prev, double i_ext, double i_autapse) {
  if (!std::isfinite(v_prev) || !std::isfinite(s_prev) || !std::isfinite(i_ext) || !std::isfinite(i_autapse))
    throw NumericError("membrane_step: non-finite input");
  const double v = membrane_update(p.tau, v_prev, s_prev, i_ext, i_autapse);
  if (!std::isfinite(v)) throw NumericError("membrane_step: non-finite result");
  return v;
}

double soft_spike(double v, const LifParams& p) {
  using std::numbers::pi;
  return std::atan(0.5 * pi * p.alpha * (v - p.v_th)) / pi + 0.5;
}

double soft_spike_grad(double v, const LifParams& p) {
  using std::numbers::pi;
  const double z = 0.5 * pi * p.alpha * (v - p.v_th);
  return 0.5 * p.alpha / (1.0 + z * z);
}

SpikeHistory::SpikeHistory(std::size_t capacity) : buf_(capacity == 0 ? 1 : capacity, 0.0) {}

void SpikeHistory::push(double s) {
  ++count_;
  buf_[count_ % buf_.size()] = s;
}

double SpikeHistory::at_delay(std::size_t d) const {
  const std::size_t t = count_ + 1;
  if (d == 0 || d >= t || d > buf_.size()) return 0.0;
  return buf_[(t - d) % buf_.size()];
}

void SpikeHistory::clear() {
  std::fill(buf_.begin(), buf_.end(), 0.0);
  count_ = 0;
}

double autapse_current(const SpikeHistory& history, std::span<const std::pair<std::size_t, double>> weights,
                       std::size_t t) {
  if (t != history.pushed() + 1) throw InvalidInput("autapse_current: history is not positioned at node t");
  double acc = 0.0;
  for (const auto& [d, w] : weights) {
    if (d >= 1 && d < t) acc += w * history.at_delay(d);
  }
  return acc;
}

}  // namespace tda
