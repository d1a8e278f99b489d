#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tda/baseline.hpp"
#include "tda/learning.hpp"

namespace tda {

// ---- gradient checking ------------------------------------------------

/// Shape of one randomly drawn gradient-check instance.
struct GradcheckCase {
  std::uint64_t seed = 0;
  Mode mode = Mode::RC;
  std::vector<std::size_t> sizes;  // RC: {n}; MLP: segment sizes
  DelaySpec delays;
  Dynamics dynamics = Dynamics::PAPER;
  std::size_t external_T = 1;
  std::size_t input_dim = 1;
  std::size_t n_classes = 2;
  std::size_t n_nodes() const;
};

/// Random small case: RC or MLP, n_nodes <= 16, T <= 3, N_in <= 8, C <= 3.
GradcheckCase random_gradcheck_case(std::uint64_t seed);
/// Model for a case, with weights scaled so soft spikes span their range.
TdaModel gradcheck_model(const GradcheckCase& c);

struct GradOffender {
  std::uint64_t seed = 0;
  std::string tensor;  // "W", "autapse", "prototypes"
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  std::size_t n_cases = 0;
  std::size_t n_checked = 0;
  double max_rel_error = 0.0;
  GradOffender worst;
  bool passed = false;
};

struct GradcheckOptions {
  double h = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

/// Refuses cases beyond n_nodes <= 32, T <= 4.
void check_gradcheck_bounds(std::size_t n_nodes, std::size_t external_T);
/// Central differences of the soft-forward loss against the analytic
/// gradient (reset path attached) for every parameter of one model.
GradcheckReport gradcheck_model(const TdaModel& model, std::span<const double> x, std::size_t label,
                                const GradcheckOptions& opt, std::uint64_t seed = 0);
GradcheckReport gradcheck_case(const GradcheckCase& c, const GradcheckOptions& opt);
/// Cases seed0 .. seed0 + n - 1, merged.
GradcheckReport gradcheck_suite(std::uint64_t seed0, std::size_t n, const GradcheckOptions& opt);
std::string to_json(const GradcheckReport& r);

// ---- structural equivalence -------------------------------------------

struct VerifyCase {
  std::uint64_t seed = 0;
  TdaConfig config;  // STRICT, MLP or CONV
  std::vector<double> x;
};

/// STRICT MLP with sizes drawn up to `max_size` per segment (2 segments),
/// T <= max_T, random weights and non-negative inputs.
VerifyCase random_mlp_case(std::uint64_t seed, std::size_t max_size = 64, std::size_t max_T = 8);
/// STRICT CONV over the given geometry, random kernel, T <= max_T.
VerifyCase random_conv_case(std::uint64_t seed, const ConvMapSpec& geometry, std::size_t max_T = 8);

struct Divergence {
  std::size_t step = 0;
  std::size_t node = 0;  // 1-based engine node
  int engine_spike = 0;
  int baseline_spike = 0;
  double engine_v = 0.0;
  double baseline_v = 0.0;
};

struct VerifyResult {
  std::uint64_t seed = 0;
  bool identical = false;
  std::optional<Divergence> first;
  std::size_t n_spikes = 0;  // engine spikes, for activity diagnostics
};

struct VerifyOptions {
  /// Corrupt one exported weight row before running the baseline.
  bool inject_fault = false;
};

/// Engine vs equivalent_std_network on one case: spikes and potentials
/// compared bit for bit on every segment.
VerifyResult verify_case(const VerifyCase& c, const VerifyOptions& opt = {});

struct VerifyReport {
  std::size_t n_cases = 0;
  std::size_t n_mismatched = 0;
  std::vector<VerifyResult> results;
  bool passed() const { return n_mismatched == 0; }
};

VerifyReport verify_suite(const std::vector<VerifyCase>& cases, const VerifyOptions& opt = {});
std::string to_json(const VerifyReport& r);

}  // namespace tda
