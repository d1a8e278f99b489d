// tda: train, evaluate, verify and inspect single-neuron TDA-LIF models.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "tda/analysis.hpp"
#include "tda/config.hpp"
#include "tda/experiment.hpp"
#include "tda/error.hpp"
#include "tda/harness.hpp"

namespace fs = std::filesystem;
using namespace tda;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> dataset, data_dir, mode, nodes, delays, dynamics, out;
  std::optional<std::size_t> T, epochs, batch_size, train_limit, test_limit;
  std::optional<std::uint64_t> seed, delay_seed;
  std::optional<double> lr, tau, v_th;
  int threads = 0;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--config", a.config_file, "key = value config file");
  app->add_option("--set", a.sets, "override as key=value (repeatable)");
  app->add_option("--dataset", a.dataset, "mnist | fmnist | delayed");
  app->add_option("--data-dir", a.data_dir, "IDX directory (default $TDA_DATA_DIR)");
  app->add_option("--mode", a.mode, "rc | mlp | conv");
  app->add_option("--nodes", a.nodes, "segment sizes, e.g. 64,64");
  app->add_option("--delays", a.delays, "full | mc:N | rd:N | tinv:N | list:a,b,..");
  app->add_option("--delay-seed", a.delay_seed);
  app->add_option("--dynamics", a.dynamics, "paper | strict");
  app->add_option("--T", a.T, "external steps");
  app->add_option("--tau", a.tau);
  app->add_option("--vth", a.v_th);
  app->add_option("--epochs", a.epochs);
  app->add_option("--batch-size", a.batch_size);
  app->add_option("--lr", a.lr);
  app->add_option("--seed", a.seed);
  app->add_option("--train-limit", a.train_limit);
  app->add_option("--test-limit", a.test_limit);
  app->add_option("--out", a.out, "output directory");
  app->add_option("--threads", a.threads, "OpenMP threads (0: all cores)");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg;
  if (!a.config_file.empty()) load_config_file(cfg, a.config_file);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  auto set = [&](const char* key, const auto& opt) {
    if (!opt) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, std::string>)
      apply_setting(cfg, key, *opt);
    else
      apply_setting(cfg, key, std::to_string(*opt));
  };
  set("dataset", a.dataset);
  set("data_dir", a.data_dir);
  set("mode", a.mode);
  set("nodes", a.nodes);
  set("delays", a.delays);
  set("delay_seed", a.delay_seed);
  set("dynamics", a.dynamics);
  set("T", a.T);
  set("epochs", a.epochs);
  set("batch_size", a.batch_size);
  set("train_limit", a.train_limit);
  set("test_limit", a.test_limit);
  set("seed", a.seed);
  set("output_dir", a.out);
  if (a.lr) cfg.lr = *a.lr;
  if (a.tau) cfg.tau = *a.tau;
  if (a.v_th) cfg.v_th = *a.v_th;
  cfg.threads = a.threads;
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  cfg.validate();
  return cfg;
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void log(const std::string& msg) { std::cerr << "[tda] " << msg << std::endl; }

int cmd_train(const RunConfig& cfg) {
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  {
    std::ofstream cf(out / "config.txt");
    cf << cfg.canonical();
  }
  std::ofstream metrics_os(out / "metrics.jsonl", std::ios::trunc);
  if (!metrics_os) throw IoError("cannot write " + (out / "metrics.jsonl").string());

  log("config hash " + hash_hex(cfg.hash()));
  const RunResult run = run_training(cfg, [&](const MetricRecord& tr, const MetricRecord& te, double secs) {
    metrics_os << metric_json_line(tr) << "\n" << metric_json_line(te) << "\n";
    metrics_os.flush();
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu: train loss %.4f acc %.4f | test loss %.4f acc %.4f (%.1fs)", tr.epoch,
                  tr.loss, tr.acc, te.loss, te.acc, secs);
    log(line);
  });
  log("trained on " + std::to_string(run.n_train) + " samples, tested on " + std::to_string(run.n_test));
  save_checkpoint(out / "checkpoint.bin", run.model,
                  {cfg.hash(), static_cast<std::uint32_t>(run.optim.epoch), run.optim.step});
  emit_report(out / "report", make_run_report(cfg, run, now_utc()));
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
  const Splits data = load_splits(cfg);
  TdaModel model = build_model(cfg, data.test.feature_dim(), data.test.n_classes);
  const auto header = load_checkpoint(checkpoint, model);
  if (header.config_hash != cfg.hash()) {
    log("checkpoint hash " + hash_hex(header.config_hash) + " does not match config hash " + hash_hex(cfg.hash()));
    return kUsage;
  }
  const EpochMetrics te = evaluate(model, data.test, cfg.batch_size);
  std::cout << metric_json_line({header.epoch, "test", te.loss, te.accuracy, hash_hex(cfg.hash())}) << std::endl;
  return kOk;
}

int cmd_verify(const CommonArgs& a, const std::string& suite, std::size_t seeds, std::uint64_t seed0, bool fault) {
  if (a.dynamics && *a.dynamics != "strict") {
    log("verify: the layered equivalence holds only for strict dynamics; paper dynamics carry the membrane "
        "across nodes of different segments");
    return kUsage;
  }
  std::vector<VerifyCase> cases;
  if (suite == "mlp") {
    for (std::size_t i = 0; i < seeds; ++i) cases.push_back(random_mlp_case(seed0 + i));
  } else if (suite == "conv") {
    const ConvMapSpec toy{8, 8, 3, 1, 1, 1, 1};
    for (std::size_t i = 0; i < seeds; ++i) cases.push_back(random_conv_case(seed0 + i, toy));
  } else {
    log("verify: unknown suite '" + suite + "' (rc has no layered equivalent; use mlp or conv)");
    return kUsage;
  }
  VerifyOptions opt;
  opt.inject_fault = fault;
  const VerifyReport r = verify_suite(cases, opt);
  std::cout << to_json(r) << std::endl;
  for (const auto& res : r.results) {
    if (res.identical) continue;
    const Divergence& d = *res.first;
    log("seed " + std::to_string(res.seed) + ": first divergence at node " + std::to_string(d.node) + ", step " +
        std::to_string(d.step) + " (engine spike " + std::to_string(d.engine_spike) + ", baseline " +
        std::to_string(d.baseline_spike) + ")");
  }
  return r.passed() ? kOk : kFail;
}

int cmd_gradcheck(std::size_t seeds, std::uint64_t seed0, double tol, std::optional<std::size_t> nodes,
                  std::optional<std::size_t> T) {
  GradcheckOptions opt;
  opt.tolerance = tol;
  GradcheckReport r;
  if (nodes || T) {
    // Explicit RC shape over the requested seeds.
    const std::size_t n = nodes.value_or(8), t = T.value_or(2);
    check_gradcheck_bounds(n, t);
    r.passed = true;
    for (std::size_t i = 0; i < seeds; ++i) {
      GradcheckCase c = random_gradcheck_case(seed0 + i);
      c.mode = Mode::RC;
      c.sizes = {n};
      c.external_T = t;
      c.delays.count = std::min(c.delays.count, n - 1);
      const GradcheckReport one = gradcheck_case(c, opt);
      ++r.n_cases;
      r.n_checked += one.n_checked;
      if (r.n_cases == 1 || one.max_rel_error > r.max_rel_error) {
        r.max_rel_error = one.max_rel_error;
        r.worst = one.worst;
      }
    }
    r.passed = r.max_rel_error <= tol;
  } else {
    r = gradcheck_suite(seed0, seeds, opt);
  }
  std::cout << to_json(r) << std::endl;
  if (!r.passed)
    log("gradcheck failed: worst seed " + std::to_string(r.worst.seed) + " " + r.worst.tensor + "[" +
        std::to_string(r.worst.index) + "] rel. error " + std::to_string(r.worst.rel_error));
  return r.passed ? kOk : kFail;
}

int cmd_report(const RunConfig& cfg, const std::string& metrics_path, const std::string& csv, std::size_t n_samples,
               std::size_t n_train, std::size_t n_classes) {
  const auto metrics = metrics_path.empty() ? std::vector<MetricRecord>{} : read_metrics(metrics_path);
  // Input dimension only affects the input projection count.
  const std::size_t dim = cfg.dataset == "delayed" ? cfg.task_seq_len : 784;
  const RunResult run{build_model(cfg, dim, std::max<std::size_t>(n_classes, 2)), {}, metrics, n_train, n_samples,
                      n_classes};
  const RunReport r = make_run_report(cfg, run, now_utc());
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  emit_report(out / "report", r);
  if (!csv.empty()) write_metrics_csv(csv, metrics);
  std::cout << report_json(r);
  return kOk;
}

int cmd_dump_topology(const RunConfig& cfg, const std::string& path) {
  const auto topo = build_topology(cfg);
  if (path.empty() || path == "-") {
    write_topology(std::cout, *topo);
  } else {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    write_topology(os, *topo);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-neuron TDA-LIF networks"};
  app.require_subcommand(1);

  CommonArgs common;
  auto* train = app.add_subcommand("train", "train a model, write metrics, checkpoint and report");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  auto* verify = app.add_subcommand("verify", "bit-exact strict-mode equivalence against baseline layers");
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient check on small models");
  auto* report = app.add_subcommand("report", "complexity and capacity report for a config");
  auto* dump = app.add_subcommand("dump-topology", "write the autapse edge list");
  for (auto* sub : {train, eval, report, dump}) add_common(sub, common);

  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint)->required();

  std::string suite = "mlp";
  std::size_t seeds = 0;
  std::uint64_t seed0 = 1;
  bool fault = false;
  verify->add_option("--suite", suite, "mlp | conv");
  verify->add_option("--seeds", seeds, "number of seeded cases (default 100 mlp, 50 conv)");
  verify->add_option("--seed0", seed0);
  verify->add_flag("--inject-fault", fault, "corrupt one exported weight row");
  verify->add_option("--dynamics", common.dynamics, "must be strict");
  verify->add_option("--threads", common.threads);

  double tol = 1e-4;
  std::optional<std::size_t> g_nodes, g_T;
  grad->add_option("--seeds", seeds, "number of seeded cases (default 50)");
  grad->add_option("--seed0", seed0);
  grad->add_option("--tolerance", tol);
  grad->add_option("--nodes", g_nodes, "explicit RC node count");
  grad->add_option("--T", g_T, "explicit external steps");
  grad->add_option("--threads", common.threads);

  std::string metrics_path, csv;
  std::size_t n_samples = 10000, n_train_samples = 60000, n_classes = 10;
  report->add_option("--metrics", metrics_path, "metrics.jsonl of a run");
  report->add_option("--csv", csv, "also export epochs as CSV");
  report->add_option("--samples", n_samples, "test sample count for the capacity figure");
  report->add_option("--train-samples", n_train_samples, "train sample count for the capacity figure");
  report->add_option("--classes", n_classes);

  std::string topo_out;
  dump->add_option("-o,--output", topo_out, "file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (common.threads > 0) omp_set_num_threads(common.threads);
    if (*train) return cmd_train(resolve(common));
    if (*eval) return cmd_eval(resolve(common), checkpoint);
    if (*verify) return cmd_verify(common, suite, seeds ? seeds : (suite == "conv" ? 50 : 100), seed0, fault);
    if (*grad) return cmd_gradcheck(seeds ? seeds : 50, seed0, tol, g_nodes, g_T);
    if (*report) return cmd_report(resolve(common), metrics_path, csv, n_samples, n_train_samples, n_classes);
    if (*dump) return cmd_dump_topology(resolve(common), topo_out);
  } catch (const IoError& e) {
    log(std::string("I/O error: ") + e.what());
    return kIo;
  } catch (const NumericError& e) {
    log(std::string("numeric error: ") + e.what());
    return kFail;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return kUsage;
  }
  return kUsage;
}
