#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tda/tensor.hpp"

namespace tda {

enum class Mode { RC, MLP, CONV };
enum class DelayStrategy { FULL, MC, RD, T_INV };

std::string to_string(Mode m);
std::string to_string(DelayStrategy s);
Mode parse_mode(const std::string& s);
DelayStrategy parse_strategy(const std::string& s);

/// Which delays a topology realizes. `count` is ignored for FULL. RD and
/// T_INV draw `count` distinct delays with the seeded generator; T_INV also
/// makes edges of equal delay share a weight slot.
struct DelaySpec {
  DelayStrategy strategy = DelayStrategy::FULL;
  std::size_t count = 1;
  std::optional<std::uint64_t> seed;
  /// When set, overrides the strategy's selection (weight sharing still
  /// follows the strategy).
  std::optional<std::vector<std::size_t>> explicit_delays;

  bool shares_weights() const { return strategy == DelayStrategy::T_INV; }
};

struct Edge {
  std::size_t src = 0;  // 1-based node index
  std::size_t dst = 0;
  std::size_t delay = 0;
  std::size_t slot = 0;
  bool operator==(const Edge&) const = default;
};

struct ConvMapSpec {
  std::size_t in_height = 1;
  std::size_t in_width = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t c_in = 1;
  std::size_t c_out = 1;

  std::size_t out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  std::size_t input_nodes() const { return in_height * in_width * c_in; }
  std::size_t output_nodes() const { return out_height() * out_width() * c_out; }
  void validate() const;
};

/// Realized delayed-connection structure of the unfolded neuron.
///
/// Nodes are 1-based. `segments` holds cumulative boundaries: segment k spans
/// nodes (segments[k], segments[k+1]]; RC topologies have a single segment.
/// `in_offsets`/`in_edges` index edges by destination with sources ascending,
/// `out_offsets`/`out_edges` index them by source with destinations ascending.
struct AutapseTopology {
  Mode mode = Mode::RC;
  std::size_t n_nodes = 0;
  std::vector<std::size_t> segments;
  std::vector<Edge> edges;
  std::size_t n_weight_slots = 0;
  std::optional<ConvMapSpec> conv;

  std::vector<std::size_t> in_offsets;
  std::vector<std::size_t> in_edges;
  std::vector<std::size_t> out_offsets;
  std::vector<std::size_t> out_edges;

  std::size_t max_delay() const;
  std::size_t n_segments() const { return segments.size() - 1; }
  std::size_t segment_size(std::size_t k) const { return segments[k + 1] - segments[k]; }
  /// Nodes that receive the external projection W x.
  std::size_t input_nodes() const;
  /// First node (1-based) and count of the nodes read out for classification.
  std::size_t readout_begin() const;
  std::size_t readout_count() const;
  /// Number of realized edges per delay, indexed by delay.
  std::vector<std::size_t> edges_per_delay() const;

  /// Sorts edges, rebuilds the adjacency indices and checks every invariant.
  void finalize();
};

/// FULL -> {1..d_max}; MC -> {1..count}; RD/T_INV -> `count` distinct delays
/// drawn uniformly from {1..d_max}. Result is sorted ascending.
std::vector<std::size_t> build_delay_set(const DelaySpec& spec, std::size_t d_max);

AutapseTopology build_rc_topology(std::size_t n_nodes, const std::vector<std::size_t>& delays,
                                  bool share_by_delay = false);
AutapseTopology build_rc_topology(std::size_t n_nodes, const DelaySpec& spec);

/// Consecutive segments, one per layer; an edge exists only between adjacent
/// segments. Each boundary b draws its own delay set from {1..n_b + n_{b+1} - 1}
/// (RD seeds are offset by b).
AutapseTopology build_mlp_topology(const std::vector<std::size_t>& layer_sizes, const DelaySpec& spec);

AutapseTopology build_conv_topology(const ConvMapSpec& spec);

/// Dense views of a topology's weights. RC: one n x n strictly upper
/// triangular matrix (row = source, column = destination). MLP: one
/// (n_out x n_in) matrix per boundary. CONV: one (c_out, c_in, k, k) tensor
/// stored as a c_out x (c_in k k) matrix.
std::vector<Matrix> export_equivalent_matrix(const AutapseTopology& topo, const std::vector<double>& weights);

/// Writes `mode n_nodes n_slots` then one `src dst delay slot` line per edge.
void write_topology(std::ostream& os, const AutapseTopology& topo);
/// Reads the edge-list format back (adjacency rebuilt, segments not stored).
AutapseTopology read_topology(std::istream& is);

}  // namespace tda
