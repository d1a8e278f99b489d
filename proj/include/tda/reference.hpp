#pragma once

#include <span>
#include <vector>

#include "tda/engine.hpp"

namespace tda {

/// Serial per-node reference forward: a spike ring buffer and the per-node
/// (delay, weight) list, no CSR traversal and no projection reuse. Kept as
/// an oracle for the optimized kernels.
NeuronTrace reference_forward(const TdaConfig& config, std::span<const double> x);

/// reference_forward over every sample of a batch, one after another.
std::vector<NeuronTrace> reference_forward_batch(const TdaConfig& config, std::span<const double> inputs,
                                                 std::size_t batch);

}  // namespace tda
