#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tda/baseline.hpp"
#include "tda/engine.hpp"

namespace tda {

/// Per-layer cost of one model. For TDA models `flops`/`params` describe the
/// autaptic layer(s); the external projection is reported separately.
struct ComplexityReport {
  std::string model;  // "TDA-SNN" or "STD-SNN"
  std::string arch;   // "RC", "MLP", "Conv"
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  std::uint64_t n_neurons = 0;
  std::uint64_t input_flops = 0;
  std::uint64_t input_params = 0;
};

/// TDA closed forms with N_d the realized edge count at delay d:
/// RC/MLP flops = sum_d N_d T, params = weight slots (sum_d N_d unless
/// shared); CONV flops = 2 sum_d N_d T, params = c_in c_out k^2; neurons = 1.
ComplexityReport count_complexity(const TdaConfig& config);
/// STD closed forms: RESERVOIR N^2 T / N^2 / N; DENSE N_in N_out T /
/// N_in N_out / N_out; CONV 2 c_in c_out k^2 W' H' T / c_in c_out k^2 / c_out W' H'.
ComplexityReport count_complexity(const StdLayer& layer, std::size_t T);

struct CapacityReport {
  double accuracy = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_classes = 0;
  std::uint64_t n_neurons = 1;
  double bits_per_neuron = 0.0;
};

/// acc * n_samples * log2(C) / n_neurons.
double info_content(double accuracy, std::uint64_t n_samples, std::uint64_t n_classes, std::uint64_t n_neurons);
CapacityReport capacity_report(double accuracy, std::uint64_t n_samples, std::uint64_t n_classes,
                               std::uint64_t n_neurons);

struct MetricRecord {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double acc = 0.0;
  std::string config_hash;  // omitted from the line when empty
};

/// JSON-lines `{"epoch":..,"split":..,"loss":..,"acc":..,"config_hash":..}`.
std::string metric_json_line(const MetricRecord& m);
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);
/// `epoch,split,loss,acc` rows with a header.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRecord>& metrics);

struct RunReport {
  std::uint64_t config_hash = 0;
  std::string timestamp;
  std::vector<MetricRecord> metrics;
  ComplexityReport complexity;
  std::vector<CapacityReport> capacity;  // one per reported (split) choice
  std::vector<std::string> capacity_labels;
};

/// JSON object with fields in a fixed order.
std::string report_json(const RunReport& r);
std::string report_table(const RunReport& r);
/// Writes `<stem>.json` and `<stem>.txt`.
void emit_report(const std::filesystem::path& stem, const RunReport& r);

}  // namespace tda
