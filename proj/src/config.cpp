#include "tda/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "tda/error.hpp"

namespace tda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ParseError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(key + ": expected a boolean, got '" + v + "'");
}

std::string fmt_double(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;
};

#define TDA_SIZE(sec, name, member)                                                      \
  {sec "." name,                                                                         \
   {[](RunConfig& c, const std::string& v) { c.member = to_size(name, v); },             \
    [](const RunConfig& c) { return std::to_string(c.member); }}}
#define TDA_DOUBLE(sec, name, member)                                                    \
  {sec "." name,                                                                         \
   {[](RunConfig& c, const std::string& v) { c.member = to_double(name, v); },           \
    [](const RunConfig& c) { return fmt_double(c.member); }}}
#define TDA_BOOL(sec, name, member)                                                      \
  {sec "." name,                                                                         \
   {[](RunConfig& c, const std::string& v) { c.member = to_bool(name, v); },             \
    [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}}
#define TDA_STRING(sec, name, member)                                                    \
  {sec "." name, {[](RunConfig& c, const std::string& v) { c.member = v; },              \
                  [](const RunConfig& c) { return c.member; }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      TDA_STRING("data", "dataset", dataset),
      {"data.data_dir",
       {[](RunConfig& c, const std::string& v) { c.data_dir = v; }, [](const RunConfig& c) { return c.data_dir; },
        false}},
      TDA_SIZE("data", "train_limit", train_limit),
      TDA_SIZE("data", "test_limit", test_limit),
      TDA_SIZE("data", "task_samples", task_samples),
      TDA_SIZE("data", "task_seq_len", task_seq_len),
      TDA_SIZE("data", "task_classes", task_classes),
      TDA_SIZE("data", "task_gap", task_gap),
      TDA_SIZE("data", "task_key_len", task_key_len),
      TDA_DOUBLE("data", "task_distractor", task_distractor),
      TDA_DOUBLE("data", "task_train_fraction", task_train_fraction),
      TDA_SIZE("data", "task_seed", task_seed),
      {"model.mode",
       {[](RunConfig& c, const std::string& v) { c.mode = parse_mode(v); },
        [](const RunConfig& c) { return to_string(c.mode); }}},
      {"model.nodes",
       {[](RunConfig& c, const std::string& v) { c.nodes = parse_size_list(v); },
        [](const RunConfig& c) { return join(c.nodes); }}},
      TDA_STRING("model", "delays", delays),
      TDA_SIZE("model", "delay_seed", delay_seed),
      {"model.dynamics",
       {[](RunConfig& c, const std::string& v) { c.dynamics = parse_dynamics(v); },
        [](const RunConfig& c) { return to_string(c.dynamics); }}},
      TDA_SIZE("model", "T", external_T),
      TDA_DOUBLE("model", "tau", tau),
      TDA_DOUBLE("model", "v_th", v_th),
      TDA_DOUBLE("model", "alpha", alpha),
      TDA_STRING("model", "input", input),
      TDA_DOUBLE("model", "input_gain", input_gain),
      TDA_SIZE("model", "conv_height", conv_height),
      TDA_SIZE("model", "conv_width", conv_width),
      TDA_SIZE("model", "conv_kernel", conv_kernel),
      TDA_SIZE("model", "conv_stride", conv_stride),
      TDA_SIZE("model", "conv_padding", conv_padding),
      TDA_SIZE("model", "conv_c_in", conv_c_in),
      TDA_SIZE("model", "conv_c_out", conv_c_out),
      TDA_SIZE("train", "batch_size", batch_size),
      TDA_DOUBLE("train", "lr", lr),
      TDA_SIZE("train", "epochs", epochs),
      TDA_SIZE("train", "seed", seed),
      TDA_DOUBLE("train", "lambda", lambda),
      TDA_BOOL("train", "train_input", train_input),
      TDA_BOOL("train", "train_autapse", train_autapse),
      TDA_BOOL("train", "train_prototypes", train_prototypes),
      {"run.output_dir",
       {[](RunConfig& c, const std::string& v) { c.output_dir = v; }, [](const RunConfig& c) { return c.output_dir; },
        false}},
      {"run.threads",
       {[](RunConfig& c, const std::string& v) { c.threads = static_cast<int>(to_size("threads", v)); },
        [](const RunConfig& c) { return std::to_string(c.threads); }, false}},
  };
  return table;
}

#undef TDA_SIZE
#undef TDA_DOUBLE
#undef TDA_BOOL
#undef TDA_STRING

}  // namespace

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [key, f] : fields())
    if (f.hashed) out += key + "=" + f.get(*this) + "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

void RunConfig::validate() const {
  if (dataset != "mnist" && dataset != "fmnist" && dataset != "delayed")
    throw InvalidSpec("dataset must be mnist, fmnist or delayed");
  if (input != "learned" && input != "diagonal") throw InvalidSpec("input must be learned or diagonal");
  if (nodes.empty()) throw InvalidSpec("nodes: at least one size required");
  if (mode == Mode::RC && nodes.size() != 1) throw InvalidSpec("rc mode takes a single node count");
  if (mode == Mode::MLP && nodes.size() < 2) throw InvalidSpec("mlp mode needs at least two segment sizes");
  if (batch_size == 0) throw InvalidSpec("batch_size must be >= 1");
  if (external_T == 0) throw InvalidSpec("T must be >= 1");
  if (!(lr >= 0.0)) throw InvalidSpec("lr must be >= 0");
  LifParams{tau, v_th, alpha}.validate();
}

void apply_setting(RunConfig& cfg, const std::string& key_in, const std::string& value) {
  const std::string key = trim(key_in);
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) {
    // Bare key: unique suffix match.
    for (auto jt = table.begin(); jt != table.end(); ++jt) {
      const auto dot = jt->first.find('.');
      if (jt->first.substr(dot + 1) == key) {
        it = jt;
        break;
      }
    }
  }
  if (it == table.end()) throw ParseError("unknown config key '" + key + "'");
  it->second.set(cfg, trim(value));
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    apply_setting(cfg, section.empty() ? key : section + "." + key, line.substr(eq + 1));
  }
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size("list", trim(item)));
  if (out.empty()) throw ParseError("empty list '" + s + "'");
  return out;
}

DelaySpec parse_delay_spec(const std::string& s, std::uint64_t seed) {
  DelaySpec spec;
  spec.seed = seed;
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (name == "list") {
    spec.explicit_delays = parse_size_list(arg);
    return spec;
  }
  spec.strategy = parse_strategy(name);
  if (spec.strategy != DelayStrategy::FULL) {
    if (arg.empty()) throw ParseError("delay spec '" + s + "' needs a count");
    spec.count = to_size("delays", arg);
  }
  return spec;
}

std::shared_ptr<const AutapseTopology> build_topology(const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::RC:
      return std::make_shared<const AutapseTopology>(
          build_rc_topology(cfg.nodes.at(0), parse_delay_spec(cfg.delays, cfg.delay_seed)));
    case Mode::MLP:
      return std::make_shared<const AutapseTopology>(
          build_mlp_topology(cfg.nodes, parse_delay_spec(cfg.delays, cfg.delay_seed)));
    case Mode::CONV: {
      ConvMapSpec c{cfg.conv_height, cfg.conv_width, cfg.conv_kernel, cfg.conv_stride,
                    cfg.conv_padding, cfg.conv_c_in, cfg.conv_c_out};
      return std::make_shared<const AutapseTopology>(build_conv_topology(c));
    }
  }
  throw InvalidSpec("unknown mode");
}

TdaModel build_model(const RunConfig& cfg, std::size_t input_dim, std::size_t n_classes) {
  cfg.validate();
  TdaModel model = initialize_model(build_topology(cfg), LifParams{cfg.tau, cfg.v_th, cfg.alpha}, cfg.external_T,
                                    cfg.dynamics, input_dim, n_classes, cfg.seed, cfg.lambda);
  if (cfg.input == "diagonal") {
    Matrix& W = model.config.input_weights;
    std::fill(W.data.begin(), W.data.end(), 0.0);
    for (std::size_t p = 0; p < std::min(W.rows, W.cols); ++p) W(p, p) = cfg.input_gain;
  }
  return model;
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions o;
  o.batch_size = cfg.batch_size;
  o.shuffle_seed = cfg.seed;
  o.train_input = cfg.train_input;
  o.train_autapse = cfg.train_autapse;
  o.train_prototypes = cfg.train_prototypes;
  return o;
}

AdamParams adam_params(const RunConfig& cfg) {
  AdamParams p;
  p.base_lr = cfg.lr;
  p.total_epochs = cfg.epochs;
  return p;
}

namespace {

Dataset prefix(const Dataset& ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  std::vector<std::size_t> idx(limit);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(ds, idx);
}

}  // namespace

Splits load_splits(const RunConfig& cfg) {
  if (cfg.dataset == "delayed") {
    auto [ds, task] = make_delayed_pattern_task(cfg.task_samples, cfg.task_seq_len, cfg.task_classes, cfg.task_gap,
                                                cfg.task_seed, cfg.task_key_len, cfg.task_distractor);
    auto [train, test] = split_dataset(ds, cfg.task_train_fraction, cfg.task_seed + 1);
    return {prefix(train, cfg.train_limit), prefix(test, cfg.test_limit)};
  }
  auto dir = resolve_data_dir(cfg.data_dir);
  if (cfg.dataset == "fmnist" && std::filesystem::exists(dir / "fashion")) dir /= "fashion";
  return {prefix(load_mnist_split(dir, "train"), cfg.train_limit),
          prefix(load_mnist_split(dir, "test"), cfg.test_limit)};
}

}  // namespace tda
