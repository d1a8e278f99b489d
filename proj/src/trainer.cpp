#include "tda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <random>

#include "tda/error.hpp"

namespace tda {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

TdaModel initialize_model(std::shared_ptr<const AutapseTopology> topology, const LifParams& lif, std::size_t external_T,
                          Dynamics dynamics, std::size_t input_dim, std::size_t n_classes, std::uint64_t seed,
                          double lambda) {
  if (n_classes < 2) throw InvalidSpec("model: need at least 2 classes");
  TdaModel model;
  TdaConfig& cfg = model.config;
  cfg.topology = std::move(topology);
  cfg.lif = lif;
  cfg.external_T = external_T;
  cfg.dynamics = dynamics;
  cfg.input_dim = input_dim;
  const AutapseTopology& topo = *cfg.topology;

  std::mt19937_64 rng(seed);
  cfg.input_weights = Matrix(topo.input_nodes(), input_dim);
  const double wb = input_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(input_dim)) : 0.0;
  for (double& x : cfg.input_weights.data) x = uniform(rng, -wb, wb);

  cfg.autapse_weights.assign(topo.n_weight_slots, 0.0);
  std::vector<std::size_t> slot_fan_in(topo.n_weight_slots, 0);
  for (const Edge& e : topo.edges)
    if (slot_fan_in[e.slot] == 0) slot_fan_in[e.slot] = topo.in_offsets[e.dst + 1] - topo.in_offsets[e.dst];
  for (std::size_t s = 0; s < topo.n_weight_slots; ++s) {
    const double b = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, slot_fan_in[s])));
    cfg.autapse_weights[s] = uniform(rng, -b, b);
  }

  model.prototypes.lambda = lambda;
  model.prototypes.logits = Matrix(n_classes, cfg.readout_length());
  for (double& x : model.prototypes.logits.data) x = uniform(rng, 0.0, 1.0);
  cfg.validate();
  return model;
}

BatchResult batch_gradients(const TdaModel& model, const EncodedBatch& batch, const TrainOptions& opt) {
  const TdaConfig& cfg = model.config;
  const AutapseTopology& topo = *cfg.topology;
  const std::size_t B = batch.batch;
  const std::size_t T = cfg.external_T;
  const std::size_t n = topo.n_nodes;
  const std::size_t n_in = topo.input_nodes();
  const std::size_t dim = cfg.input_dim;
  const std::size_t n_slots = topo.n_weight_slots;
  const Matrix K = model.prototypes.binarized();
  const std::size_t proto_size = K.size();
  if (batch.external_T != T || batch.input_dim != dim) throw InvalidInput("batch: encoding does not match model");

  BatchResult res;
  res.losses.assign(B, 0.0);
  res.predictions.assign(B, 0);
  // Per-sample partials, reduced afterwards in sample order.
  std::vector<double> aut(opt.train_autapse ? B * n_slots : 0);
  std::vector<double> proto(opt.train_prototypes ? B * proto_size : 0);
  std::vector<double> g_in(opt.train_input ? B * T * n_in : 0);
  // For each sample and external step: the step whose input row it repeats.
  std::vector<std::size_t> row_owner(B * T);
  std::vector<std::exception_ptr> errors(B);

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(B); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    try {
      const auto x = batch.input(b);
      const NeuronTrace trace = forward(cfg, x);
      const auto f = readout(trace, cfg);
      const auto d = prototype_distances(f, K);
      res.losses[b] = prototype_loss(d, batch.labels[b], model.prototypes.lambda);
      res.predictions[b] = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
      const auto gd = prototype_loss_grad(d, batch.labels[b], model.prototypes.lambda);
      const auto gf = readout_grad(f, K, gd);
      const auto gv = membrane_gradients(cfg, trace, gf);

      if (opt.train_autapse) {
        double* a = aut.data() + b * n_slots;
        for (std::size_t te = 0; te < T; ++te)
          for (const Edge& e : topo.edges) a[e.slot] += gv[te * n + e.dst - 1] * trace.s(te, e.src - 1);
      }
      if (opt.train_prototypes) {
        const Matrix gp = prototype_backward(f, K, model.prototypes.logits, d, batch.labels[b],
                                             model.prototypes.lambda, cfg.lif.alpha);
        std::copy(gp.data.begin(), gp.data.end(), proto.begin() + static_cast<std::ptrdiff_t>(b * proto_size));
      }
      if (opt.train_input) {
        // Steps with an identical input row fold their node gradients into
        // the first such step; grad_W then needs one outer product per row.
        for (std::size_t te = 0; te < T; ++te) {
          std::size_t owner = te;
          if (te > 0) {
            const std::size_t prev = row_owner[b * T + te - 1];
            if (std::memcmp(x.data() + te * dim, x.data() + prev * dim, dim * sizeof(double)) == 0) owner = prev;
          }
          row_owner[b * T + te] = owner;
          double* dst = g_in.data() + (b * T + owner) * n_in;
          for (std::size_t r = 0; r < n_in; ++r) dst[r] += gv[te * n + r];
        }
      }
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const double inv_b = 1.0 / static_cast<double>(B);
  if (opt.train_autapse) {
    res.grads.grad_autapse.assign(n_slots, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n_slots); ++si) {
      const auto s = static_cast<std::size_t>(si);
      double acc = 0.0;
      for (std::size_t b = 0; b < B; ++b) acc += aut[b * n_slots + s];
      res.grads.grad_autapse[s] = acc * inv_b;
    }
  }
  if (opt.train_prototypes) {
    res.grads.grad_prototype_logits = Matrix(K.rows, K.cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(proto_size); ++pi) {
      const auto p = static_cast<std::size_t>(pi);
      double acc = 0.0;
      for (std::size_t b = 0; b < B; ++b) acc += proto[b * proto_size + p];
      res.grads.grad_prototype_logits.data[p] = acc * inv_b;
    }
  }
  if (opt.train_input) {
    res.grads.grad_W = Matrix(n_in, dim);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(n_in); ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      double* row = res.grads.grad_W.data.data() + r * dim;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t te = 0; te < T; ++te) {
          if (row_owner[b * T + te] != te) continue;
          const double g = g_in[(b * T + te) * n_in + r];
          if (g == 0.0) continue;
          const double* xt = batch.input(b).data() + te * dim;
          for (std::size_t j = 0; j < dim; ++j) row[j] += g * xt[j];
        }
      for (std::size_t j = 0; j < dim; ++j) row[j] *= inv_b;
    }
  }
  return res;
}

EpochMetrics train_epoch(TdaModel& model, const Dataset& data, OptimState& optim, const TrainOptions& opt) {
  if (data.size() == 0) throw InvalidInput("train_epoch: empty dataset");
  if (opt.batch_size == 0) throw InvalidSpec("train_epoch: batch size must be positive");
  const auto order = seeded_permutation(data.size(), opt.shuffle_seed * 0x9E3779B97F4A7C15ull + optim.epoch);
  std::vector<double> losses(data.size(), 0.0);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
    const std::size_t count = std::min(opt.batch_size, order.size() - start);
    const std::span<const std::size_t> idx(order.data() + start, count);
    const EncodedBatch batch = encode_batch(data, idx, model.config.external_T);
    BatchResult r = batch_gradients(model, batch, opt);
    for (std::size_t k = 0; k < count; ++k) {
      losses[idx[k]] = r.losses[k];
      if (r.predictions[k] == batch.labels[k]) ++correct;
    }
    optimizer_step(model, r.grads, optim);
  }
  ++optim.epoch;
  // Summed in dataset order so the mean is independent of the shuffle.
  double total = 0.0;
  for (double l : losses) total += l;
  return {total / static_cast<double>(data.size()), static_cast<double>(correct) / static_cast<double>(data.size()),
          data.size()};
}

EpochMetrics evaluate(const TdaModel& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw InvalidInput("evaluate: empty dataset");
  const Matrix K = model.prototypes.binarized();
  const std::size_t T = model.config.external_T;
  std::vector<double> losses(data.size(), 0.0);
  std::vector<unsigned char> hit(data.size(), 0);
  std::vector<std::exception_ptr> errors(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - start);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t ki = 0; ki < static_cast<std::ptrdiff_t>(count); ++ki) {
      const std::size_t i = start + static_cast<std::size_t>(ki);
      try {
        const auto x = encode_direct(data.sample(i), T);
        const auto f = readout(forward(model.config, x), model.config);
        const auto d = prototype_distances(f, K);
        losses[i] = prototype_loss(d, data.labels[i], model.prototypes.lambda);
        hit[i] = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()) == data.labels[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += losses[i];
    correct += hit[i];
  }
  return {total / static_cast<double>(data.size()), static_cast<double>(correct) / static_cast<double>(data.size()),
          data.size()};
}

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'D', 'A', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("checkpoint: truncated");
  return v;
}

void put_tensor(std::ostream& os, std::span<const double> values) {
  put<std::uint64_t>(os, values.size());
  os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void get_tensor(std::istream& is, std::span<double> values, const char* name) {
  if (get<std::uint64_t>(is) != values.size())
    throw ParseError(std::string("checkpoint: tensor '") + name + "' does not match the model");
  if (!is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double))))
    throw ParseError("checkpoint: truncated");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TdaModel& model, const CheckpointHeader& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put(os, header.config_hash);
  put(os, header.epoch);
  put(os, header.step);
  put_tensor(os, model.config.input_weights.data);
  put_tensor(os, model.config.autapse_weights);
  put_tensor(os, model.prototypes.logits.data);
  if (!os) throw IoError("checkpoint write failed");
}

CheckpointHeader load_checkpoint(const std::filesystem::path& path, TdaModel& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw ParseError("checkpoint: bad magic");
  CheckpointHeader h;
  h.config_hash = get<std::uint64_t>(is);
  h.epoch = get<std::uint32_t>(is);
  h.step = get<std::uint64_t>(is);
  get_tensor(is, model.config.input_weights.data, "input_weights");
  get_tensor(is, model.config.autapse_weights, "autapse_weights");
  get_tensor(is, model.prototypes.logits.data, "prototype_logits");
  return h;
}

}  // namespace tda
