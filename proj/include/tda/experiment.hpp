#pragma once

#include <functional>
#include <vector>

#include "tda/analysis.hpp"
#include "tda/config.hpp"

namespace tda {

struct RunResult {
  TdaModel model;
  OptimState optim;
  std::vector<MetricRecord> metrics;  // train then test, per epoch
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_classes = 0;

  /// Test accuracy of the last epoch.
  double final_test_accuracy() const;
};

/// Called after each epoch with its train and test records and wall seconds.
using EpochCallback = std::function<void(const MetricRecord&, const MetricRecord&, double)>;

/// Loads the data, builds the model and trains for cfg.epochs, evaluating
/// the test split after every epoch.
RunResult run_training(const RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Report for a finished run; capacity uses the final accuracy of each split.
RunReport make_run_report(const RunConfig& cfg, const RunResult& run, const std::string& timestamp);

}  // namespace tda
