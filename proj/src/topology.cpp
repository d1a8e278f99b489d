#include "tda/topology.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "tda/error.hpp"

namespace tda {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::RC: return "rc";
    case Mode::MLP: return "mlp";
    case Mode::CONV: return "conv";
  }
  return "?";
}

std::string to_string(DelayStrategy s) {
  switch (s) {
    case DelayStrategy::FULL: return "full";
    case DelayStrategy::MC: return "mc";
    case DelayStrategy::RD: return "rd";
    case DelayStrategy::T_INV: return "tinv";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "rc") return Mode::RC;
  if (s == "mlp") return Mode::MLP;
  if (s == "conv") return Mode::CONV;
  throw InvalidSpec("unknown mode '" + s + "'");
}

DelayStrategy parse_strategy(const std::string& s) {
  if (s == "full") return DelayStrategy::FULL;
  if (s == "mc") return DelayStrategy::MC;
  if (s == "rd") return DelayStrategy::RD;
  if (s == "tinv" || s == "t_inv") return DelayStrategy::T_INV;
  throw InvalidSpec("unknown delay strategy '" + s + "'");
}

void ConvMapSpec::validate() const {
  if (in_height == 0 || in_width == 0 || kernel == 0 || stride == 0 || c_in == 0 || c_out == 0)
    throw InvalidSpec("conv spec: sizes must be positive");
  if (in_height + 2 * padding < kernel || in_width + 2 * padding < kernel)
    throw InvalidSpec("conv spec: kernel larger than padded input");
}

std::size_t AutapseTopology::max_delay() const {
  std::size_t m = 0;
  for (const auto& e : edges) m = std::max(m, e.delay);
  return m;
}

std::size_t AutapseTopology::input_nodes() const {
  return mode == Mode::RC ? n_nodes : segment_size(0);
}

std::size_t AutapseTopology::readout_begin() const {
  return mode == Mode::RC ? 1 : segments[segments.size() - 2] + 1;
}

std::size_t AutapseTopology::readout_count() const {
  return mode == Mode::RC ? n_nodes : segment_size(n_segments() - 1);
}

std::vector<std::size_t> AutapseTopology::edges_per_delay() const {
  std::vector<std::size_t> counts(max_delay() + 1, 0);
  for (const auto& e : edges) ++counts[e.delay];
  return counts;
}

void AutapseTopology::finalize() {
  if (segments.empty()) segments = {0, n_nodes};
  if (segments.front() != 0 || segments.back() != n_nodes) throw InvalidSpec("topology: segments must span all nodes");
  for (const auto& e : edges) {
    if (e.src < 1 || e.dst > n_nodes || e.src >= e.dst) throw InvalidSpec("topology: edge must satisfy 1 <= src < dst <= n");
    if (e.delay != e.dst - e.src) throw InvalidSpec("topology: edge delay must equal dst - src");
    if (e.slot >= n_weight_slots) throw InvalidSpec("topology: weight slot out of range");
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.dst != b.dst ? a.dst < b.dst : a.src < b.src; });

  in_offsets.assign(n_nodes + 2, 0);
  out_offsets.assign(n_nodes + 2, 0);
  for (const auto& e : edges) {
    ++in_offsets[e.dst + 1];
    ++out_offsets[e.src + 1];
  }
  std::partial_sum(in_offsets.begin(), in_offsets.end(), in_offsets.begin());
  std::partial_sum(out_offsets.begin(), out_offsets.end(), out_offsets.begin());

  in_edges.resize(edges.size());
  out_edges.resize(edges.size());
  std::vector<std::size_t> in_fill(in_offsets.begin(), in_offsets.end() - 1);
  std::vector<std::size_t> out_fill(out_offsets.begin(), out_offsets.end() - 1);
  // Edges are sorted by (dst, src): incoming lists come out src-ascending and
  // outgoing lists dst-ascending.
  for (std::size_t i = 0; i < edges.size(); ++i) {
    in_edges[in_fill[edges[i].dst]++] = i;
    out_edges[out_fill[edges[i].src]++] = i;
  }
}

std::vector<std::size_t> build_delay_set(const DelaySpec& spec, std::size_t d_max) {
  if (spec.explicit_delays) {
    std::vector<std::size_t> out;
    for (std::size_t d : *spec.explicit_delays)
      if (d >= 1 && d <= d_max) out.push_back(d);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  if (spec.strategy == DelayStrategy::FULL) {
    std::vector<std::size_t> out(d_max);
    std::iota(out.begin(), out.end(), std::size_t{1});
    return out;
  }
  if (spec.count == 0) throw InvalidSpec("delay spec: count must be at least 1");
  if (spec.count > d_max)
    throw InvalidSpec("delay spec: count " + std::to_string(spec.count) + " exceeds maximum delay " +
                      std::to_string(d_max));
  if (spec.strategy == DelayStrategy::MC) {
    std::vector<std::size_t> out(spec.count);
    std::iota(out.begin(), out.end(), std::size_t{1});
    return out;
  }
  if (!spec.seed) throw InvalidSpec("delay spec: random delays require a seed");
  // Partial Fisher-Yates over {1..d_max}; std::uniform_int_distribution is
  // avoided so the draw is identical across standard libraries.
  std::vector<std::size_t> pool(d_max);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  std::mt19937_64 rng(*spec.seed);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t span = d_max - i;
    const std::size_t j = i + static_cast<std::size_t>(rng() % span);
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.count));
  std::sort(out.begin(), out.end());
  return out;
}

AutapseTopology build_rc_topology(std::size_t n_nodes, const std::vector<std::size_t>& delays, bool share_by_delay) {
  if (n_nodes < 2) throw InvalidSpec("rc topology: need at least 2 nodes");
  AutapseTopology topo;
  topo.mode = Mode::RC;
  topo.n_nodes = n_nodes;
  topo.segments = {0, n_nodes};
  std::map<std::size_t, std::size_t> slot_of_delay;
  for (std::size_t d : delays) {
    if (d < 1 || d >= n_nodes) throw InvalidSpec("rc topology: delay " + std::to_string(d) + " out of range");
    if (share_by_delay) slot_of_delay.emplace(d, slot_of_delay.size());
  }
  for (std::size_t t = 1; t <= n_nodes; ++t)
    for (std::size_t d : delays)
      if (d < t) topo.edges.push_back({t - d, t, d, 0});
  topo.n_weight_slots = share_by_delay ? slot_of_delay.size() : topo.edges.size();
  topo.finalize();
  for (std::size_t i = 0; i < topo.edges.size(); ++i)
    topo.edges[i].slot = share_by_delay ? slot_of_delay.at(topo.edges[i].delay) : i;
  return topo;
}

AutapseTopology build_rc_topology(std::size_t n_nodes, const DelaySpec& spec) {
  if (n_nodes < 2) throw InvalidSpec("rc topology: need at least 2 nodes");
  return build_rc_topology(n_nodes, build_delay_set(spec, n_nodes - 1), spec.shares_weights());
}

AutapseTopology build_mlp_topology(const std::vector<std::size_t>& layer_sizes, const DelaySpec& spec) {
  if (layer_sizes.size() < 2) throw InvalidSpec("mlp topology: need at least 2 layers");
  AutapseTopology topo;
  topo.mode = Mode::MLP;
  topo.segments = {0};
  for (std::size_t n : layer_sizes) {
    if (n == 0) throw InvalidSpec("mlp topology: empty layer");
    topo.segments.push_back(topo.segments.back() + n);
  }
  topo.n_nodes = topo.segments.back();

  std::size_t slot = 0;
  for (std::size_t b = 0; b + 1 < layer_sizes.size(); ++b) {
    const std::size_t lo = topo.segments[b], mid = topo.segments[b + 1], hi = topo.segments[b + 2];
    DelaySpec boundary_spec = spec;
    if (spec.seed) boundary_spec.seed = *spec.seed + b;
    const auto delays = build_delay_set(boundary_spec, hi - lo - 1);
    if (delays.empty()) throw InvalidSpec("mlp topology: no admissible delay at boundary " + std::to_string(b));

    std::map<std::size_t, std::size_t> slot_of_delay;
    std::vector<Edge> boundary;
    for (std::size_t dst = mid + 1; dst <= hi; ++dst) {
      for (std::size_t d : delays) {
        if (d >= dst) continue;
        const std::size_t src = dst - d;
        // Retain only sources in the preceding segment: within-segment and
        // segment-skipping autapses are pruned.
        if (src <= lo || src > mid) continue;
        boundary.push_back({src, dst, d, 0});
      }
    }
    std::sort(boundary.begin(), boundary.end(),
              [](const Edge& a, const Edge& c) { return a.dst != c.dst ? a.dst < c.dst : a.src < c.src; });
    for (auto& e : boundary) {
      if (spec.shares_weights()) {
        auto [it, inserted] = slot_of_delay.emplace(e.delay, slot);
        if (inserted) ++slot;
        e.slot = it->second;
      } else {
        e.slot = slot++;
      }
      topo.edges.push_back(e);
    }
  }
  topo.n_weight_slots = slot;
  topo.finalize();
  return topo;
}

AutapseTopology build_conv_topology(const ConvMapSpec& spec) {
  spec.validate();
  AutapseTopology topo;
  topo.mode = Mode::CONV;
  topo.conv = spec;
  const std::size_t n_in = spec.input_nodes();
  const std::size_t oh = spec.out_height(), ow = spec.out_width();
  topo.segments = {0, n_in, n_in + spec.output_nodes()};
  topo.n_nodes = topo.segments.back();
  const std::size_t k = spec.kernel;
  topo.n_weight_slots = spec.c_in * spec.c_out * k * k;

  for (std::size_t co = 0; co < spec.c_out; ++co)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t dst = n_in + (co * oh + i) * ow + j + 1;
        for (std::size_t ci = 0; ci < spec.c_in; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto y = static_cast<std::ptrdiff_t>(i * spec.stride + ky) - static_cast<std::ptrdiff_t>(spec.padding);
              const auto x = static_cast<std::ptrdiff_t>(j * spec.stride + kx) - static_cast<std::ptrdiff_t>(spec.padding);
              if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(spec.in_height) ||
                  x >= static_cast<std::ptrdiff_t>(spec.in_width))
                continue;  // padding: no source, no edge
              const std::size_t src =
                  (ci * spec.in_height + static_cast<std::size_t>(y)) * spec.in_width + static_cast<std::size_t>(x) + 1;
              if (src >= dst) throw InvalidSpec("conv topology: non-positive delay");
              const std::size_t slot = ((co * spec.c_in + ci) * k + ky) * k + kx;
              topo.edges.push_back({src, dst, dst - src, slot});
            }
      }
  topo.finalize();
  return topo;
}

std::vector<Matrix> export_equivalent_matrix(const AutapseTopology& topo, const std::vector<double>& weights) {
  if (weights.size() != topo.n_weight_slots)
    throw InvalidInput("export: expected " + std::to_string(topo.n_weight_slots) + " weights, got " +
                       std::to_string(weights.size()));
  std::vector<Matrix> out;
  switch (topo.mode) {
    case Mode::RC: {
      Matrix m(topo.n_nodes, topo.n_nodes);
      for (const auto& e : topo.edges) m(e.src - 1, e.dst - 1) = weights[e.slot];
      out.push_back(std::move(m));
      break;
    }
    case Mode::MLP: {
      for (std::size_t b = 0; b + 1 < topo.n_segments(); ++b)
        out.emplace_back(topo.segment_size(b + 1), topo.segment_size(b));
      for (const auto& e : topo.edges) {
        const auto seg = static_cast<std::size_t>(
            std::upper_bound(topo.segments.begin(), topo.segments.end(), e.src - 1) - topo.segments.begin() - 1);
        out[seg](e.dst - 1 - topo.segments[seg + 1], e.src - 1 - topo.segments[seg]) = weights[e.slot];
      }
      break;
    }
    case Mode::CONV: {
      const auto& c = *topo.conv;
      Matrix m(c.c_out, c.c_in * c.kernel * c.kernel);
      // Slot (co, ci, ky, kx) is exactly the row-major position in the tensor.
      for (std::size_t s = 0; s < topo.n_weight_slots; ++s) m.data[s] = weights[s];
      out.push_back(std::move(m));
      break;
    }
  }
  return out;
}

void write_topology(std::ostream& os, const AutapseTopology& topo) {
  os << to_string(topo.mode) << ' ' << topo.n_nodes << ' ' << topo.n_weight_slots << '\n';
  for (const auto& e : topo.edges) os << e.src << ' ' << e.dst << ' ' << e.delay << ' ' << e.slot << '\n';
}

AutapseTopology read_topology(std::istream& is) {
  AutapseTopology topo;
  std::string header;
  if (!std::getline(is, header)) throw ParseError("topology dump: missing header");
  std::istringstream hs(header);
  std::string mode;
  if (!(hs >> mode >> topo.n_nodes >> topo.n_weight_slots)) throw ParseError("topology dump: bad header");
  topo.mode = parse_mode(mode);
  Edge e;
  while (is >> e.src >> e.dst >> e.delay >> e.slot) topo.edges.push_back(e);
  if (!is.eof()) throw ParseError("topology dump: bad edge line");
  topo.finalize();
  return topo;
}

}  // namespace tda
