#include "tda/analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "tda/error.hpp"

namespace tda {

ComplexityReport count_complexity(const TdaConfig& config) {
  const AutapseTopology& topo = *config.topology;
  ComplexityReport r;
  r.model = "TDA-SNN";
  const std::uint64_t T = config.external_T;
  std::uint64_t edges = 0;
  for (std::size_t c : topo.edges_per_delay()) edges += c;
  switch (topo.mode) {
    case Mode::RC:
    case Mode::MLP:
      r.arch = topo.mode == Mode::RC ? "RC" : "MLP";
      r.flops = edges * T;
      break;
    case Mode::CONV:
      r.arch = "Conv";
      r.flops = 2 * edges * T;
      break;
  }
  r.params = topo.n_weight_slots;
  r.n_neurons = 1;
  r.input_params = config.input_weights.size();
  r.input_flops = r.input_params * T;
  return r;
}

ComplexityReport count_complexity(const StdLayer& layer, std::size_t T) {
  ComplexityReport r;
  r.model = "STD-SNN";
  const std::uint64_t t = T;
  switch (layer.kind) {
    case LayerKind::RESERVOIR: {
      const std::uint64_t n = layer.n_neurons();
      r.arch = "RC";
      r.flops = n * n * t;
      r.params = n * n;
      r.n_neurons = n;
      r.input_params = layer.weights.size();
      r.input_flops = r.input_params * t;
      break;
    }
    case LayerKind::DENSE: {
      r.arch = "MLP";
      r.params = std::uint64_t{layer.weights.rows} * layer.weights.cols;
      r.flops = r.params * t;
      r.n_neurons = layer.weights.rows;
      break;
    }
    case LayerKind::CONV: {
      const ConvMapSpec& c = layer.conv;
      r.arch = "Conv";
      r.params = std::uint64_t{c.c_in} * c.c_out * c.kernel * c.kernel;
      r.flops = 2 * r.params * c.out_width() * c.out_height() * t;
      r.n_neurons = std::uint64_t{c.c_out} * c.out_width() * c.out_height();
      break;
    }
  }
  return r;
}

double info_content(double accuracy, std::uint64_t n_samples, std::uint64_t n_classes, std::uint64_t n_neurons) {
  if (n_classes < 2) throw InvalidSpec("info_content: need at least 2 classes");
  if (n_neurons < 1) throw InvalidSpec("info_content: need at least 1 neuron");
  return accuracy * static_cast<double>(n_samples) * std::log2(static_cast<double>(n_classes)) /
         static_cast<double>(n_neurons);
}

CapacityReport capacity_report(double accuracy, std::uint64_t n_samples, std::uint64_t n_classes,
                               std::uint64_t n_neurons) {
  return {accuracy, n_samples, n_classes, n_neurons, info_content(accuracy, n_samples, n_classes, n_neurons)};
}

std::string metric_json_line(const MetricRecord& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["split"] = m.split;
  j["loss"] = m.loss;
  j["acc"] = m.acc;
  if (!m.config_hash.empty()) j["config_hash"] = m.config_hash;
  return j.dump();
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open metrics " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("epoch").get<std::size_t>(), j.at("split").get<std::string>(), j.at("loss").get<double>(),
                     j.at("acc").get<double>(), j.value("config_hash", std::string{})});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("metrics: " + std::string(e.what()));
    }
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRecord>& metrics) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "epoch,split,loss,acc\n" << std::setprecision(17);
  for (const auto& m : metrics) os << m.epoch << ',' << m.split << ',' << m.loss << ',' << m.acc << '\n';
}

namespace {

nlohmann::ordered_json complexity_json(const ComplexityReport& c) {
  nlohmann::ordered_json j;
  j["model"] = c.model;
  j["arch"] = c.arch;
  j["flops"] = c.flops;
  j["params"] = c.params;
  j["n_neurons"] = c.n_neurons;
  j["input_flops"] = c.input_flops;
  j["input_params"] = c.input_params;
  return j;
}

}  // namespace

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << r.config_hash;
  j["config_hash"] = hash.str();
  j["timestamp"] = r.timestamp;
  j["complexity"] = complexity_json(r.complexity);
  auto caps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.capacity.size(); ++i) {
    const auto& c = r.capacity[i];
    nlohmann::ordered_json cj;
    cj["basis"] = i < r.capacity_labels.size() ? r.capacity_labels[i] : "";
    cj["accuracy"] = c.accuracy;
    cj["n_samples"] = c.n_samples;
    cj["n_classes"] = c.n_classes;
    cj["n_neurons"] = c.n_neurons;
    cj["bits_per_neuron"] = c.bits_per_neuron;
    caps.push_back(cj);
  }
  j["capacity"] = caps;
  auto mets = nlohmann::ordered_json::array();
  for (const auto& m : r.metrics) mets.push_back(nlohmann::ordered_json::parse(metric_json_line(m)));
  j["metrics"] = mets;
  return j.dump(2) + "\n";
}

std::string report_table(const RunReport& r) {
  std::ostringstream os;
  const auto& c = r.complexity;
  os << "model      arch   flops          params       neurons\n";
  os << std::left << std::setw(11) << c.model << std::setw(7) << c.arch << std::setw(15) << c.flops << std::setw(13)
     << c.params << c.n_neurons << "\n";
  if (c.input_params) os << "input projection: " << c.input_params << " params, " << c.input_flops << " flops\n";
  for (std::size_t i = 0; i < r.capacity.size(); ++i) {
    const auto& cap = r.capacity[i];
    os << "S[" << (i < r.capacity_labels.size() ? r.capacity_labels[i] : "") << "] = " << std::fixed
       << std::setprecision(2) << cap.bits_per_neuron << " bits/neuron (acc " << std::setprecision(4) << cap.accuracy
       << ", " << cap.n_samples << " samples, C=" << cap.n_classes << ")\n";
    os.unsetf(std::ios::fixed);
  }
  if (!r.metrics.empty()) {
    const auto& last = r.metrics.back();
    os << "last metric: epoch " << last.epoch << " " << last.split << " loss " << last.loss << " acc " << last.acc
       << "\n";
  }
  return os.str();
}

void emit_report(const std::filesystem::path& stem, const RunReport& r) {
  auto json_path = stem;
  json_path += ".json";
  auto txt_path = stem;
  txt_path += ".txt";
  std::ofstream js(json_path), tx(txt_path);
  if (!js || !tx) throw IoError("cannot write report " + stem.string());
  js << report_json(r);
  tx << report_table(r);
  if (!js || !tx) throw IoError("report write failed");
}

}  // namespace tda
