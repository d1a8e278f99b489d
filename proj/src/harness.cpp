#include "tda/harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "tda/error.hpp"
#include "tda/trainer.hpp"

namespace tda {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

}  // namespace

std::size_t GradcheckCase::n_nodes() const {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  return n;
}

GradcheckCase random_gradcheck_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x6772616463686bULL);
  GradcheckCase c;
  c.seed = seed;
  c.mode = rng() % 2 ? Mode::MLP : Mode::RC;
  if (c.mode == Mode::RC) {
    c.sizes = {pick(rng, 2, 16)};
  } else {
    const std::size_t n_seg = pick(rng, 2, 3);
    for (std::size_t k = 0; k < n_seg; ++k) c.sizes.push_back(pick(rng, 1, 16 / n_seg));
  }
  const std::size_t d_max = c.mode == Mode::RC ? c.sizes[0] - 1 : c.sizes[0] + c.sizes[1] - 1;
  switch (rng() % 4) {
    case 0: c.delays.strategy = DelayStrategy::FULL; break;
    case 1: c.delays.strategy = DelayStrategy::MC; break;
    case 2: c.delays.strategy = DelayStrategy::RD; break;
    default: c.delays.strategy = DelayStrategy::T_INV; break;
  }
  c.delays.count = pick(rng, 1, std::max<std::size_t>(1, std::min<std::size_t>(d_max, 4)));
  c.delays.seed = seed;
  if (c.mode == Mode::MLP && c.delays.strategy != DelayStrategy::FULL) {
    // Later boundaries may admit fewer delays; keep the count feasible.
    for (std::size_t b = 1; b + 1 < c.sizes.size(); ++b)
      c.delays.count = std::min(c.delays.count, c.sizes[b] + c.sizes[b + 1] - 1);
  }
  c.dynamics = rng() % 2 ? Dynamics::STRICT : Dynamics::PAPER;
  c.external_T = pick(rng, 1, 3);
  c.input_dim = pick(rng, 1, 8);
  c.n_classes = pick(rng, 2, 3);
  return c;
}

TdaModel gradcheck_model(const GradcheckCase& c) {
  auto topo = std::make_shared<const AutapseTopology>(c.mode == Mode::RC ? build_rc_topology(c.sizes[0], c.delays)
                                                                         : build_mlp_topology(c.sizes, c.delays));
  LifParams lif;
  TdaModel m = initialize_model(topo, lif, c.external_T, c.dynamics, c.input_dim, c.n_classes, c.seed);
  // Wider weights so membranes range across the threshold.
  for (double& w : m.config.input_weights.data) w *= 2.0;
  for (double& w : m.config.autapse_weights) w *= 2.0;
  return m;
}

void check_gradcheck_bounds(std::size_t n_nodes, std::size_t external_T) {
  if (n_nodes > 32 || external_T > 4)
    throw InvalidSpec("gradcheck: configuration too large (n_nodes " + std::to_string(n_nodes) + " > 32 or T " +
                      std::to_string(external_T) + " > 4)");
}

GradcheckReport gradcheck_model(const TdaModel& model, std::span<const double> x, std::size_t label,
                                const GradcheckOptions& opt, std::uint64_t seed) {
  check_gradcheck_bounds(model.config.n_nodes(), model.config.external_T);
  const SampleResult analytic = sample_loss_and_grad(model, x, label, true);
  TdaModel probe = model;
  GradcheckReport r;
  r.n_cases = 1;

  auto check = [&](const char* name, std::vector<double>& params, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + opt.h;
      const double up = sample_loss(probe, x, label, true);
      params[i] = keep - opt.h;
      const double down = sample_loss(probe, x, label, true);
      params[i] = keep;
      const double numeric = (up - down) / (2.0 * opt.h);
      const double a = grads[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
      ++r.n_checked;
      if (rel > r.max_rel_error || r.n_checked == 1) {
        r.max_rel_error = std::max(r.max_rel_error, rel);
        r.worst = {seed, name, i, a, numeric, rel};
      }
    }
  };
  check("W", probe.config.input_weights.data, analytic.grads.grad_W.data);
  check("autapse", probe.config.autapse_weights, analytic.grads.grad_autapse);
  check("prototypes", probe.prototypes.logits.data, analytic.grads.grad_prototype_logits.data);
  r.passed = r.max_rel_error <= opt.tolerance;
  return r;
}

GradcheckReport gradcheck_case(const GradcheckCase& c, const GradcheckOptions& opt) {
  check_gradcheck_bounds(c.n_nodes(), c.external_T);
  const TdaModel m = gradcheck_model(c);
  std::mt19937_64 rng(c.seed ^ 0x78696e707574ULL);
  std::vector<double> x(c.external_T * c.input_dim);
  for (double& v : x) v = unit(rng);
  const std::size_t label = static_cast<std::size_t>(rng() % c.n_classes);
  return gradcheck_model(m, x, label, opt, c.seed);
}

GradcheckReport gradcheck_suite(std::uint64_t seed0, std::size_t n, const GradcheckOptions& opt) {
  GradcheckReport total;
  total.passed = true;
  for (std::size_t i = 0; i < n; ++i) {
    const GradcheckReport r = gradcheck_case(random_gradcheck_case(seed0 + i), opt);
    ++total.n_cases;
    total.n_checked += r.n_checked;
    if (total.n_cases == 1 || r.max_rel_error > total.max_rel_error) {
      total.max_rel_error = r.max_rel_error;
      total.worst = r.worst;
    }
  }
  total.passed = total.max_rel_error <= opt.tolerance;
  return total;
}

std::string to_json(const GradcheckReport& r) {
  nlohmann::ordered_json j;
  j["passed"] = r.passed;
  j["n_cases"] = r.n_cases;
  j["n_checked"] = r.n_checked;
  j["max_rel_error"] = r.max_rel_error;
  j["worst"] = {{"seed", r.worst.seed},
                {"tensor", r.worst.tensor},
                {"index", r.worst.index},
                {"analytic", r.worst.analytic},
                {"numeric", r.worst.numeric},
                {"rel_error", r.worst.rel_error}};
  return j.dump();
}

namespace {

void randomize(TdaConfig& cfg, std::mt19937_64& rng) {
  const double wb = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
  for (double& w : cfg.input_weights.data) w = uniform(rng, -wb, 2.0 * wb);
  const AutapseTopology& topo = *cfg.topology;
  std::vector<std::size_t> fan(topo.n_weight_slots, 1);
  for (const Edge& e : topo.edges) fan[e.slot] = std::max<std::size_t>(1, topo.in_offsets[e.dst + 1] - topo.in_offsets[e.dst]);
  for (std::size_t s = 0; s < topo.n_weight_slots; ++s) {
    const double b = 1.5 / std::sqrt(static_cast<double>(fan[s]));
    cfg.autapse_weights[s] = uniform(rng, -b, 1.5 * b);
  }
}

VerifyCase make_case(std::uint64_t seed, std::shared_ptr<const AutapseTopology> topo, std::size_t input_dim,
                     std::size_t T, std::mt19937_64& rng) {
  VerifyCase c;
  c.seed = seed;
  TdaConfig& cfg = c.config;
  cfg.topology = std::move(topo);
  cfg.dynamics = Dynamics::STRICT;
  cfg.external_T = T;
  cfg.input_dim = input_dim;
  cfg.input_weights = Matrix(cfg.topology->input_nodes(), input_dim);
  cfg.autapse_weights.assign(cfg.topology->n_weight_slots, 0.0);
  randomize(cfg, rng);
  cfg.validate();
  c.x.resize(T * input_dim);
  for (double& v : c.x) v = unit(rng);
  return c;
}

}  // namespace

VerifyCase random_mlp_case(std::uint64_t seed, std::size_t max_size, std::size_t max_T) {
  std::mt19937_64 rng(seed ^ 0x6d6c70ULL);
  const std::size_t a = pick(rng, 1, max_size), b = pick(rng, 1, max_size);
  DelaySpec spec;
  const std::size_t d_max = a + b - 1;
  switch (rng() % 4) {
    case 0: spec.strategy = DelayStrategy::FULL; break;
    case 1: spec.strategy = DelayStrategy::MC; break;
    case 2: spec.strategy = DelayStrategy::RD; break;
    default: spec.strategy = DelayStrategy::T_INV; break;
  }
  spec.count = pick(rng, 1, d_max);
  spec.seed = seed;
  auto topo = std::make_shared<const AutapseTopology>(build_mlp_topology({a, b}, spec));
  const std::size_t T = pick(rng, 1, max_T);
  const std::size_t dim = pick(rng, 1, 16);
  return make_case(seed, std::move(topo), dim, T, rng);
}

VerifyCase random_conv_case(std::uint64_t seed, const ConvMapSpec& geometry, std::size_t max_T) {
  std::mt19937_64 rng(seed ^ 0x636f6e76ULL);
  auto topo = std::make_shared<const AutapseTopology>(build_conv_topology(geometry));
  const std::size_t T = pick(rng, 1, max_T);
  return make_case(seed, std::move(topo), geometry.input_nodes(), T, rng);
}

VerifyResult verify_case(const VerifyCase& c, const VerifyOptions& opt) {
  const TdaConfig& cfg = c.config;
  if (cfg.dynamics != Dynamics::STRICT)
    throw InvalidSpec("verify: equivalence holds only with strict dynamics (membrane carry across nodes breaks it)");
  if (cfg.mode() == Mode::RC) throw InvalidSpec("verify: rc topologies have no layered equivalent");
  const AutapseTopology& topo = *cfg.topology;
  const NeuronTrace tr = forward(cfg, c.x);
  std::vector<StdLayer> layers = equivalent_std_network(cfg);
  const std::size_t n = topo.n_nodes;

  VerifyResult res;
  res.seed = c.seed;
  for (Spike s : tr.spikes) res.n_spikes += s;

  if (opt.inject_fault) {
    // Earliest engine spike (step, node); silencing its row guarantees a
    // visible mismatch because all layer inputs are non-negative.
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < tr.spikes.size() && !hit; ++i)
      if (tr.spikes[i]) hit = i % n;
    const std::size_t node0 = hit.value_or(0);
    std::size_t k = 0;
    while (topo.segments[k + 1] <= node0) ++k;
    StdLayer& layer = layers[k];
    const std::size_t local = node0 - topo.segments[k];
    const double bad = hit ? -1e3 : 1e3;
    if (layer.kind == LayerKind::DENSE) {
      for (std::size_t j = 0; j < layer.weights.cols; ++j) layer.weights(local, j) = bad;
    } else {
      const std::size_t per_channel = layer.conv.out_height() * layer.conv.out_width();
      const std::size_t co = local / per_channel;
      for (std::size_t j = 0; j < layer.weights.cols; ++j) layer.weights(co, j) = bad;
    }
  }

  std::vector<LayerTrace> outs;
  std::vector<double> in = c.x;
  for (const StdLayer& layer : layers) {
    outs.push_back(run_layer(layer, in, cfg.external_T));
    in = outs.back().spikes_as_double();
  }

  for (std::size_t te = 0; te < tr.T && !res.first; ++te) {
    for (std::size_t k = 0; k < outs.size() && !res.first; ++k) {
      const LayerTrace& lt = outs[k];
      for (std::size_t i = 0; i < lt.n; ++i) {
        const std::size_t node0 = topo.segments[k] + i;
        const Spike es = tr.spikes[te * n + node0], bs = lt.spikes[te * lt.n + i];
        const double ev = tr.v[te * n + node0], bv = lt.v[te * lt.n + i];
        if (es != bs || ev != bv) {
          res.first = Divergence{te, node0 + 1, es, bs, ev, bv};
          break;
        }
      }
    }
  }
  res.identical = !res.first;
  return res;
}

VerifyReport verify_suite(const std::vector<VerifyCase>& cases, const VerifyOptions& opt) {
  VerifyReport r;
  r.results.resize(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  const auto nc = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nc; ++i) {
    try {
      r.results[static_cast<std::size_t>(i)] = verify_case(cases[static_cast<std::size_t>(i)], opt);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  r.n_cases = cases.size();
  for (const auto& res : r.results) r.n_mismatched += res.identical ? 0 : 1;
  return r;
}

std::string to_json(const VerifyReport& r) {
  nlohmann::ordered_json j;
  j["passed"] = r.passed();
  j["n_cases"] = r.n_cases;
  j["n_mismatched"] = r.n_mismatched;
  auto bad = nlohmann::ordered_json::array();
  for (const auto& res : r.results) {
    if (res.identical) continue;
    const Divergence& d = *res.first;
    bad.push_back({{"seed", res.seed},
                   {"step", d.step},
                   {"node", d.node},
                   {"engine_spike", d.engine_spike},
                   {"baseline_spike", d.baseline_spike},
                   {"engine_v", d.engine_v},
                   {"baseline_v", d.baseline_v}});
  }
  j["mismatches"] = bad;
  return j.dump();
}

}  // namespace tda
