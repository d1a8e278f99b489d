#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tda/data.hpp"
#include "tda/trainer.hpp"

namespace tda {

/// Everything one command needs. Defaults are the MNIST settings.
struct RunConfig {
  // [data]
  std::string dataset = "mnist";  // mnist | fmnist | delayed
  std::string data_dir;           // empty: $TDA_DATA_DIR, then ./data
  std::size_t train_limit = 0;    // 0 = whole split
  std::size_t test_limit = 0;
  std::size_t task_samples = 2000;
  std::size_t task_seq_len = 40;
  std::size_t task_classes = 4;
  std::size_t task_gap = 20;
  std::size_t task_key_len = 8;
  double task_distractor = 0.0;
  double task_train_fraction = 0.8;
  std::uint64_t task_seed = 7;

  // [model]
  Mode mode = Mode::MLP;
  std::vector<std::size_t> nodes = {64, 64};  // RC: single entry
  std::string delays = "full";                // full | mc:N | rd:N | tinv:N | list:a,b,...
  std::uint64_t delay_seed = 1;
  Dynamics dynamics = Dynamics::PAPER;
  std::size_t external_T = 4;
  double tau = 0.5;
  double v_th = 0.3;
  double alpha = 2.0;
  std::string input = "learned";  // learned | diagonal (fixed x_p -> node p+1 mask)
  double input_gain = 1.0;
  std::size_t conv_height = 8, conv_width = 8, conv_kernel = 3, conv_stride = 1, conv_padding = 1;
  std::size_t conv_c_in = 1, conv_c_out = 1;

  // [train]
  std::size_t batch_size = 512;
  double lr = 0.002;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  double lambda = 0.001;
  bool train_input = true;
  bool train_autapse = true;
  bool train_prototypes = true;

  // [run] (not part of the hash)
  std::string output_dir = "runs";
  int threads = 0;  // 0: OpenMP default

  /// Sorted `section.key=value` lines of every hashed field.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
  void validate() const;
};

/// Applies one `key = value` setting (key may be `section.key` or bare).
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
/// Flat `key = value` file with optional `[section]` headers and `#` comments.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

/// Parses `full`, `mc:N`, `rd:N`, `tinv:N` or `list:a,b,...`.
DelaySpec parse_delay_spec(const std::string& s, std::uint64_t seed);
std::vector<std::size_t> parse_size_list(const std::string& s);

std::shared_ptr<const AutapseTopology> build_topology(const RunConfig& cfg);
/// Initialized model for data with `input_dim` features and `n_classes` classes.
TdaModel build_model(const RunConfig& cfg, std::size_t input_dim, std::size_t n_classes);
TrainOptions train_options(const RunConfig& cfg);
AdamParams adam_params(const RunConfig& cfg);

struct Splits {
  Dataset train;
  Dataset test;
};
/// Train and test data for cfg.dataset (limits applied as prefixes).
Splits load_splits(const RunConfig& cfg);

}  // namespace tda
