#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "tda/error.hpp"
#include "tda/topology.hpp"

using namespace tda;

namespace {

DelaySpec explicit_delays(std::vector<std::size_t> d) {
  DelaySpec s;
  s.explicit_delays = std::move(d);
  return s;
}

// (src, dst) pairs realized by brute force over every node pair.
std::set<std::pair<std::size_t, std::size_t>> rc_pairs(std::size_t n, const std::set<std::size_t>& delays) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t src = 1; src <= n; ++src)
    for (std::size_t dst = src + 1; dst <= n; ++dst)
      if (delays.count(dst - src)) out.insert({src, dst});
  return out;
}

std::set<std::pair<std::size_t, std::size_t>> edge_pairs(const AutapseTopology& t) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const Edge& e : t.edges) out.insert({e.src, e.dst});
  return out;
}

}  // namespace

TEST(DelaySet, Full) {
  DelaySpec s;
  const auto d = build_delay_set(s, 9);
  EXPECT_EQ(d, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(DelaySet, MaximumConnection) {
  DelaySpec s{DelayStrategy::MC, 3, {}, {}};
  EXPECT_EQ(build_delay_set(s, 9), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(DelaySet, RandomIsSeededAndDistinct) {
  DelaySpec s{DelayStrategy::RD, 3, 42, {}};
  const auto a = build_delay_set(s, 9);
  const auto b = build_delay_set(s, 9);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 3u);
  for (auto d : a) {
    EXPECT_GE(d, 1u);
    EXPECT_LE(d, 9u);
  }
  // Golden value frozen from the first run of the seeded draw.
  EXPECT_EQ(a, (std::vector<std::size_t>{2, 4, 8}));
  s.seed = 43;
  EXPECT_NE(build_delay_set(s, 9), a);
}

TEST(DelaySet, RandomCoversRangeUniformly) {
  std::vector<int> hits(11, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    DelaySpec s{DelayStrategy::RD, 1, seed, {}};
    ++hits[build_delay_set(s, 10)[0]];
  }
  for (std::size_t d = 1; d <= 10; ++d) EXPECT_NEAR(hits[d], 400, 80) << d;
}

TEST(DelaySet, Errors) {
  EXPECT_THROW(build_delay_set(DelaySpec{DelayStrategy::MC, 10, {}, {}}, 9), InvalidSpec);
  EXPECT_THROW(build_delay_set(DelaySpec{DelayStrategy::RD, 2, {}, {}}, 9), InvalidSpec);
  EXPECT_THROW(build_delay_set(DelaySpec{DelayStrategy::RD, 0, 1, {}}, 9), InvalidSpec);
}

TEST(RcTopology, TwoDiagonals) {
  const auto t = build_rc_topology(10, {3, 6});
  EXPECT_EQ(t.edges.size(), 11u);
  EXPECT_EQ(t.n_weight_slots, 11u);
}

TEST(RcTopology, FullSixtyFour) {
  DelaySpec s;
  const auto t = build_rc_topology(64, s);
  EXPECT_EQ(t.edges.size(), 2016u);
  EXPECT_EQ(t.n_weight_slots, 2016u);
  EXPECT_EQ(t.max_delay(), 63u);
}

TEST(RcTopology, Minimal) {
  const auto t = build_rc_topology(2, {1});
  ASSERT_EQ(t.edges.size(), 1u);
  EXPECT_EQ(t.edges[0].src, 1u);
  EXPECT_EQ(t.edges[0].dst, 2u);
  EXPECT_EQ(t.edges[0].delay, 1u);
}

TEST(RcTopology, DelayTooLarge) { EXPECT_THROW(build_rc_topology(5, {5}), InvalidSpec); }

// Property: edge set equals brute-force enumeration for n <= 128 and random
// delay subsets of size <= 8.
TEST(RcTopology, MatchesEnumeration) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 127;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(8, n - 1);
    std::set<std::size_t> d;
    while (d.size() < k) d.insert(1 + rng() % (n - 1));
    const auto t = build_rc_topology(n, std::vector<std::size_t>(d.begin(), d.end()));
    EXPECT_EQ(edge_pairs(t), rc_pairs(n, d));
    std::size_t closed = 0;
    for (auto x : d) closed += n - x;
    EXPECT_EQ(t.edges.size(), closed);
    for (const Edge& e : t.edges) EXPECT_EQ(e.delay, e.dst - e.src);
  }
}

TEST(RcTopology, TimeInvariantSharesPerDelay) {
  DelaySpec s{DelayStrategy::T_INV, 4, 9, {}};
  const auto t = build_rc_topology(20, s);
  EXPECT_EQ(t.n_weight_slots, 4u);
  std::map<std::size_t, std::set<std::size_t>> slots_of_delay;
  for (const Edge& e : t.edges) slots_of_delay[e.delay].insert(e.slot);
  EXPECT_EQ(slots_of_delay.size(), 4u);
  std::set<std::size_t> all;
  for (auto& [d, slots] : slots_of_delay) {
    EXPECT_EQ(slots.size(), 1u);
    all.insert(*slots.begin());
  }
  EXPECT_EQ(all.size(), 4u);
}

TEST(RcTopology, AdjacencyOrder) {
  const auto t = build_rc_topology(12, {1, 4, 7});
  for (std::size_t node = 1; node <= t.n_nodes; ++node) {
    std::size_t last = 0;
    for (std::size_t k = t.in_offsets[node]; k < t.in_offsets[node + 1]; ++k) {
      const Edge& e = t.edges[t.in_edges[k]];
      EXPECT_EQ(e.dst, node);
      EXPECT_GT(e.src, last);
      last = e.src;
    }
    last = 0;
    for (std::size_t k = t.out_offsets[node]; k < t.out_offsets[node + 1]; ++k) {
      const Edge& e = t.edges[t.out_edges[k]];
      EXPECT_EQ(e.src, node);
      EXPECT_GT(e.dst, last);
      last = e.dst;
    }
  }
}

TEST(MlpTopology, PruningExamples) {
  const auto t = build_mlp_topology({10, 10}, explicit_delays({2, 5, 7}));
  const auto p = edge_pairs(t);
  EXPECT_TRUE(p.count({7, 12}));
  EXPECT_FALSE(p.count({13, 15}));
}

TEST(MlpTopology, FigureTwoCount) {
  EXPECT_EQ(build_mlp_topology({5, 5}, explicit_delays({2, 5, 7})).edges.size(), 10u);
  EXPECT_EQ(build_mlp_topology({10, 10}, explicit_delays({2, 5, 7})).edges.size(), 14u);
}

TEST(MlpTopology, FullIsCompleteBipartite) {
  DelaySpec s;
  const auto t = build_mlp_topology({64, 64}, s);
  EXPECT_EQ(t.edges.size(), 64u * 64u);
  EXPECT_EQ(t.max_delay(), 127u);
  EXPECT_EQ(t.readout_begin(), 65u);
  EXPECT_EQ(t.readout_count(), 64u);
  EXPECT_EQ(t.input_nodes(), 64u);
}

// Property: every edge connects adjacent segments and the edge set equals the
// enumeration of cross-boundary pairs with admissible delays.
TEST(MlpTopology, PruningRuleMatchesEnumeration) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes(2 + rng() % 3);
    for (auto& s : sizes) s = 1 + rng() % 20;
    DelaySpec spec{DelayStrategy::RD, 1, trial, {}};
    std::size_t min_dmax = 1000;
    for (std::size_t b = 0; b + 1 < sizes.size(); ++b) min_dmax = std::min(min_dmax, sizes[b] + sizes[b + 1] - 1);
    spec.count = 1 + rng() % min_dmax;
    const auto t = build_mlp_topology(sizes, spec);

    std::set<std::pair<std::size_t, std::size_t>> want;
    std::size_t lo = 0;
    for (std::size_t b = 0; b + 1 < sizes.size(); ++b) {
      DelaySpec bs = spec;
      bs.seed = *spec.seed + b;
      const auto dv = build_delay_set(bs, sizes[b] + sizes[b + 1] - 1);
      const std::set<std::size_t> d(dv.begin(), dv.end());
      const std::size_t mid = lo + sizes[b], hi = mid + sizes[b + 1];
      for (std::size_t src = lo + 1; src <= mid; ++src)
        for (std::size_t dst = mid + 1; dst <= hi; ++dst)
          if (d.count(dst - src)) want.insert({src, dst});
      lo = mid;
    }
    EXPECT_EQ(edge_pairs(t), want) << trial;
    for (const Edge& e : t.edges) {
      std::size_t ks = 0, kd = 0;
      while (t.segments[ks + 1] < e.src) ++ks;
      while (t.segments[kd + 1] < e.dst) ++kd;
      EXPECT_EQ(kd, ks + 1);
    }
  }
}

TEST(MlpTopology, EmptyBoundaryRaises) {
  EXPECT_THROW(build_mlp_topology({3, 3}, explicit_delays({9})), InvalidSpec);
}

TEST(MlpTopology, TimeInvariantPerBoundary) {
  DelaySpec s{DelayStrategy::T_INV, 3, 5, {}};
  const auto t = build_mlp_topology({6, 6, 6}, s);
  EXPECT_EQ(t.n_weight_slots, 6u);
}

TEST(ConvTopology, ThreeByThree) {
  const ConvMapSpec c{3, 3, 3, 1, 1, 1, 1};
  const auto t = build_conv_topology(c);
  EXPECT_EQ(t.n_nodes, 18u);
  EXPECT_EQ(t.n_weight_slots, 9u);
  const auto in_degree = [&](std::size_t node) { return t.in_offsets[node + 1] - t.in_offsets[node]; };
  EXPECT_EQ(in_degree(9 + 5), 9u);  // center
  EXPECT_EQ(in_degree(9 + 1), 4u);  // corner
  EXPECT_EQ(in_degree(9 + 2), 6u);  // edge
  // Source displaced by (+1, +1) from the output position.
  for (const Edge& e : t.edges) {
    const std::size_t o = e.dst - 10, s = e.src - 1;
    if (s / 3 == o / 3 + 1 && s % 3 == o % 3 + 1) EXPECT_EQ(e.delay, 5u);
  }
}

// Property: brute-force direct convolution geometry gives the same edges and
// slots, and translation keeps the slot of a given kernel offset.
TEST(ConvTopology, MatchesGeometryAndShares) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    ConvMapSpec c;
    c.kernel = 1 + 2 * (rng() % 2);
    c.in_height = c.kernel + rng() % 6;
    c.in_width = c.kernel + rng() % 6;
    c.padding = rng() % (c.kernel / 2 + 1);
    c.stride = 1 + rng() % 2;
    c.c_in = 1 + rng() % 2;
    c.c_out = 1 + rng() % 2;
    const auto t = build_conv_topology(c);
    EXPECT_EQ(t.n_weight_slots, c.c_in * c.c_out * c.kernel * c.kernel);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> want;
    const std::size_t oh = c.out_height(), ow = c.out_width(), n_in = c.input_nodes();
    for (std::size_t co = 0; co < c.c_out; ++co)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
          for (std::size_t ci = 0; ci < c.c_in; ++ci)
            for (std::size_t ky = 0; ky < c.kernel; ++ky)
              for (std::size_t kx = 0; kx < c.kernel; ++kx) {
                const long y = static_cast<long>(i * c.stride + ky) - static_cast<long>(c.padding);
                const long x = static_cast<long>(j * c.stride + kx) - static_cast<long>(c.padding);
                if (y < 0 || x < 0 || y >= static_cast<long>(c.in_height) || x >= static_cast<long>(c.in_width))
                  continue;
                const std::size_t src = (ci * c.in_height + y) * c.in_width + x + 1;
                const std::size_t dst = n_in + (co * oh + i) * ow + j + 1;
                const std::size_t slot = ((co * c.c_in + ci) * c.kernel + ky) * c.kernel + kx;
                want.insert({src, dst, slot});
              }
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> got;
    for (const Edge& e : t.edges) {
      got.insert({e.src, e.dst, e.slot});
      EXPECT_GE(e.delay, 1u);
    }
    EXPECT_EQ(got, want) << trial;
  }
}

TEST(ExportMatrix, RcDiagonals) {
  const auto t = build_rc_topology(10, {3, 6});
  const auto M = export_equivalent_matrix(t, std::vector<double>(t.n_weight_slots, 1.0));
  ASSERT_EQ(M.size(), 1u);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 10; ++c) {
      const bool on = c > r && (c - r == 3 || c - r == 6);
      EXPECT_EQ(M[0](r, c), on ? 1.0 : 0.0);
    }
}

TEST(ExportMatrix, MlpZeroWeights) {
  DelaySpec s;
  const auto t = build_mlp_topology({4, 5, 3}, s);
  const auto M = export_equivalent_matrix(t, std::vector<double>(t.n_weight_slots, 0.0));
  ASSERT_EQ(M.size(), 2u);
  EXPECT_EQ(M[0].rows, 5u);
  EXPECT_EQ(M[0].cols, 4u);
  EXPECT_EQ(M[1].rows, 3u);
  for (const auto& m : M)
    for (double v : m.data) EXPECT_EQ(v, 0.0);
}

TEST(ExportMatrix, ConvKernelIsSlots) {
  const auto t = build_conv_topology({3, 3, 3, 1, 1, 1, 1});
  std::vector<double> w(9);
  for (std::size_t i = 0; i < 9; ++i) w[i] = 1.0 + i;
  const auto M = export_equivalent_matrix(t, w);
  ASSERT_EQ(M.size(), 1u);
  EXPECT_EQ(M[0].data, w);
}

TEST(ExportMatrix, LengthMismatch) {
  const auto t = build_rc_topology(5, {1});
  EXPECT_THROW(export_equivalent_matrix(t, {1.0}), InvalidInput);
}

// Property: edges -> matrix -> nonzero entries -> edges is the identity.
TEST(ExportMatrix, RoundTrip) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 30;
    DelaySpec s{DelayStrategy::RD, 1 + rng() % (n - 1), trial, {}};
    const auto t = build_rc_topology(n, s);
    std::vector<double> w(t.n_weight_slots);
    for (auto& x : w) x = u(rng);
    const auto M = export_equivalent_matrix(t, w)[0];
    std::set<std::pair<std::size_t, std::size_t>> back;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (M(r, c) != 0.0) back.insert({r + 1, c + 1});
    EXPECT_EQ(back, edge_pairs(t));

    const auto tm = build_mlp_topology({1 + rng() % 8, 1 + rng() % 8}, DelaySpec{});
    std::vector<double> wm(tm.n_weight_slots);
    for (auto& x : wm) x = u(rng);
    const auto Mm = export_equivalent_matrix(tm, wm)[0];
    std::set<std::pair<std::size_t, std::size_t>> back_m;
    const std::size_t n0 = tm.segment_size(0);
    for (std::size_t r = 0; r < Mm.rows; ++r)
      for (std::size_t c = 0; c < Mm.cols; ++c)
        if (Mm(r, c) != 0.0) back_m.insert({c + 1, n0 + r + 1});
    EXPECT_EQ(back_m, edge_pairs(tm));
  }
}

TEST(TopologyDump, RoundTrip) {
  DelaySpec s{DelayStrategy::T_INV, 5, 3, {}};
  const auto t = build_mlp_topology({7, 9}, s);
  std::stringstream ss;
  write_topology(ss, t);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "mlp 16 " + std::to_string(t.n_weight_slots));
  ss.seekg(0);
  const auto r = read_topology(ss);
  EXPECT_EQ(r.mode, t.mode);
  EXPECT_EQ(r.n_nodes, t.n_nodes);
  EXPECT_EQ(r.n_weight_slots, t.n_weight_slots);
  EXPECT_EQ(r.edges, t.edges);
}

TEST(TopologyDump, Malformed) {
  std::stringstream ss("rc 3 1\n2 1 1 0\n");
  EXPECT_THROW(read_topology(ss), Error);
}
