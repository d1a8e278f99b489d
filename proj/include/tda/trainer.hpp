#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tda/data.hpp"
#include "tda/learning.hpp"

namespace tda {

/// Builds a model with seeded initial parameters: input and autapse weights
/// uniform in +-1/sqrt(fan-in), prototype logits uniform in [0, 1].
TdaModel initialize_model(std::shared_ptr<const AutapseTopology> topology, const LifParams& lif, std::size_t external_T,
                          Dynamics dynamics, std::size_t input_dim, std::size_t n_classes, std::uint64_t seed,
                          double lambda = 0.001);

struct TrainOptions {
  std::size_t batch_size = 512;
  std::uint64_t shuffle_seed = 1;
  bool train_input = true;
  bool train_autapse = true;
  bool train_prototypes = true;
};

struct EpochMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t n_samples = 0;
};

/// Mean loss, correct-prediction count and mean gradients of one batch.
/// Samples run in parallel; every reduction sums samples in batch order, so
/// the result does not depend on the thread count.
struct BatchResult {
  GradientBundle grads;
  std::vector<double> losses;
  std::vector<std::size_t> predictions;
};

BatchResult batch_gradients(const TdaModel& model, const EncodedBatch& batch, const TrainOptions& opt = {});

/// One pass over `data` in a seeded order (seed mixed with the epoch), one
/// optimizer step per batch, then advances the optimizer's epoch counter.
/// Loss and accuracy are those of the forward passes made during the epoch.
EpochMetrics train_epoch(TdaModel& model, const Dataset& data, OptimState& optim, const TrainOptions& opt);

/// Nearest-prototype accuracy and mean loss with the hard forward pass.
EpochMetrics evaluate(const TdaModel& model, const Dataset& data, std::size_t batch_size = 512);

struct CheckpointHeader {
  std::uint64_t config_hash = 0;
  std::uint32_t epoch = 0;
  std::uint64_t step = 0;
};

/// "TDACKPT1", u64 config hash, u32 epoch, u64 step, then u64 length + raw
/// f64 values for input weights, autapse weights and prototype logits.
void save_checkpoint(const std::filesystem::path& path, const TdaModel& model, const CheckpointHeader& header);
CheckpointHeader load_checkpoint(const std::filesystem::path& path, TdaModel& model);

}  // namespace tda
