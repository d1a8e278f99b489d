#include <gtest/gtest.h>

#include "tda/error.hpp"
#include "tda/harness.hpp"

using namespace tda;

TEST(Gradcheck, RandomCasesAreSmall) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const GradcheckCase c = random_gradcheck_case(s);
    EXPECT_LE(c.n_nodes(), 16u);
    EXPECT_GE(c.external_T, 1u);
    EXPECT_LE(c.external_T, 3u);
    EXPECT_LE(c.input_dim, 8u);
    EXPECT_GE(c.n_classes, 2u);
    EXPECT_LE(c.n_classes, 3u);
  }
  EXPECT_EQ(random_gradcheck_case(5).sizes, random_gradcheck_case(5).sizes);
}

TEST(Gradcheck, SuitePassesDefaultTolerance) {
  const GradcheckReport r = gradcheck_suite(1000, 20, GradcheckOptions{});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.n_cases, 20u);
  EXPECT_GT(r.n_checked, 100u);
  EXPECT_LE(r.max_rel_error, 1e-4);
}

// Finite differences carry O(h^2) truncation error, so an absurd tolerance
// must produce a failure that names the worst parameter.
TEST(Gradcheck, TightToleranceReportsOffender) {
  GradcheckOptions opt;
  opt.tolerance = 1e-12;
  const GradcheckReport r = gradcheck_suite(0, 10, opt);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 1e-12);
  EXPECT_EQ(r.worst.rel_error, r.max_rel_error);
  EXPECT_TRUE(r.worst.tensor == "W" || r.worst.tensor == "autapse" || r.worst.tensor == "prototypes");
  EXPECT_NE(r.worst.analytic, r.worst.numeric);
  const std::string j = to_json(r);
  EXPECT_NE(j.find("\"passed\":false"), std::string::npos);
  EXPECT_NE(j.find(r.worst.tensor), std::string::npos);
}

TEST(Gradcheck, OversizeRefused) {
  EXPECT_THROW(check_gradcheck_bounds(1000, 1), InvalidSpec);
  EXPECT_THROW(check_gradcheck_bounds(8, 5), InvalidSpec);
  EXPECT_NO_THROW(check_gradcheck_bounds(32, 4));
}

TEST(Verify, MlpCasesIdentical) {
  std::vector<VerifyCase> cases;
  for (std::uint64_t s = 0; s < 10; ++s) cases.push_back(random_mlp_case(s));
  const VerifyReport r = verify_suite(cases);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.n_cases, 10u);
  EXPECT_EQ(r.n_mismatched, 0u);
  std::size_t spikes = 0;
  for (const auto& v : r.results) spikes += v.n_spikes;
  EXPECT_GT(spikes, 0u);
}

TEST(Verify, ConvCasesIdentical) {
  ConvMapSpec g;
  g.in_height = g.in_width = 8;
  g.kernel = 3;
  g.padding = 1;
  std::vector<VerifyCase> cases;
  for (std::uint64_t s = 0; s < 5; ++s) cases.push_back(random_conv_case(s, g));
  EXPECT_TRUE(verify_suite(cases).passed());
}

TEST(Verify, InjectedFaultNamesNode) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const VerifyResult r = verify_case(random_mlp_case(s), VerifyOptions{true});
    EXPECT_FALSE(r.identical) << s;
    ASSERT_TRUE(r.first.has_value()) << s;
    EXPECT_GE(r.first->node, 1u);
    EXPECT_TRUE(r.first->engine_spike != r.first->baseline_spike || r.first->engine_v != r.first->baseline_v);
  }
  std::vector<VerifyCase> cases = {random_mlp_case(1)};
  const VerifyReport r = verify_suite(cases, VerifyOptions{true});
  EXPECT_FALSE(r.passed());
  EXPECT_NE(to_json(r).find("\"node\""), std::string::npos);
}

TEST(Verify, RefusesNonStrictAndRc) {
  VerifyCase c = random_mlp_case(3);
  c.config.dynamics = Dynamics::PAPER;
  EXPECT_THROW(verify_case(c), InvalidSpec);
  VerifyCase rc = random_mlp_case(3);
  DelaySpec s;
  rc.config.topology = std::make_shared<const AutapseTopology>(build_rc_topology(4, s));
  EXPECT_THROW(verify_case(rc), InvalidSpec);
}
