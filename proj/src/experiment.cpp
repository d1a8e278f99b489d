#include "tda/experiment.hpp"

#include <chrono>

#include "tda/error.hpp"

namespace tda {

double RunResult::final_test_accuracy() const {
  for (auto it = metrics.rbegin(); it != metrics.rend(); ++it)
    if (it->split == "test") return it->acc;
  throw InvalidInput("run has no test metrics");
}

RunResult run_training(const RunConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const Splits data = load_splits(cfg);
  RunResult r{build_model(cfg, data.train.feature_dim(), data.train.n_classes), {}, {}, data.train.size(),
              data.test.size(), data.train.n_classes};
  r.optim.params = adam_params(cfg);
  r.optim.init(r.model);
  const TrainOptions opts = train_options(cfg);
  const std::string hash = hash_hex(cfg.hash());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochMetrics tr = train_epoch(r.model, data.train, r.optim, opts);
    const EpochMetrics te = evaluate(r.model, data.test, cfg.batch_size);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.metrics.push_back({epoch, "train", tr.loss, tr.accuracy, hash});
    r.metrics.push_back({epoch, "test", te.loss, te.accuracy, hash});
    if (on_epoch) on_epoch(r.metrics[r.metrics.size() - 2], r.metrics.back(), secs);
  }
  return r;
}

RunReport make_run_report(const RunConfig& cfg, const RunResult& run, const std::string& timestamp) {
  RunReport r;
  r.config_hash = cfg.hash();
  r.timestamp = timestamp;
  r.metrics = run.metrics;
  r.complexity = count_complexity(run.model.config);
  for (const auto& [split, n] : {std::pair<std::string, std::size_t>{"test", run.n_test}, {"train", run.n_train}}) {
    for (auto it = run.metrics.rbegin(); it != run.metrics.rend(); ++it) {
      if (it->split != split || n == 0) continue;
      r.capacity.push_back(capacity_report(it->acc, n, run.n_classes, 1));
      r.capacity_labels.push_back(split);
      break;
    }
  }
  return r;
}

}  // namespace tda
