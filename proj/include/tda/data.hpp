#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tda/tensor.hpp"

namespace tda {

/// Samples as rows of a matrix with features normalized to [0, 1].
struct Dataset {
  Matrix samples;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;
  /// Image geometry when the data came from IDX files (0 otherwise).
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Raw value -> feature scale applied at load time (1/255 for IDX).
  double feature_scale = 1.0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return samples.cols; }
  std::span<const double> sample(std::size_t i) const { return samples.row(i); }
  void validate() const;
};

/// Reads an IDX pair (images magic 2051, labels magic 2049), scaling pixels by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
/// Inverse of load_idx (features are rounded back to bytes).
void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);

/// Data directory: explicit value if non-empty, else $TDA_DATA_DIR, else "data".
std::filesystem::path resolve_data_dir(const std::string& configured);
/// `<dir>/{train,t10k}-{images-idx3,labels-idx1}-ubyte`; `split` is "train" or "test".
Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& split);

/// The sample repeated on each of external_T rows.
std::vector<double> encode_direct(std::span<const double> sample, std::size_t external_T);

/// Inputs for a set of samples, batch x T x feature_dim, plus labels.
struct EncodedBatch {
  std::vector<double> inputs;
  std::vector<std::size_t> labels;
  std::size_t batch = 0;
  std::size_t external_T = 0;
  std::size_t input_dim = 0;

  std::span<const double> input(std::size_t b) const {
    return {inputs.data() + b * external_T * input_dim, external_T * input_dim};
  }
};

EncodedBatch encode_batch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t external_T);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);
/// Disjoint, exhaustive split after a seeded shuffle; first part gets
/// round(train_fraction * n) samples.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Layout of the delayed cue-conditioned recall task.
///
/// A sequence of `seq_len` binary values carries one of C key patterns on
/// positions [0, key_len), then `gap` silent positions, then a cue bit. The
/// label is (key id + cue) mod C, so the key has to be combined with a cue
/// that arrives `gap` positions after the key finishes. Every other position
/// carries a distractor spike with probability `distractor_rate`.
struct DelayedPatternTask {
  std::size_t seq_len = 40;
  std::size_t n_classes = 4;
  std::size_t gap = 20;
  std::size_t key_len = 8;
  double distractor_rate = 0.0;
  std::vector<std::vector<double>> keys;

  std::size_t cue_position() const { return key_len + gap; }
};

std::pair<Dataset, DelayedPatternTask> make_delayed_pattern_task(std::size_t n_samples, std::size_t seq_len,
                                                                 std::size_t n_classes, std::size_t gap,
                                                                 std::uint64_t seed, std::size_t key_len = 8,
                                                                 double distractor_rate = 0.0);

}  // namespace tda
