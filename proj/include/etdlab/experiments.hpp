#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "etdlab/config.hpp"

namespace etdlab {

// Options shared by every CLI command. A --seed flag overrides the config
// seed; --paper-scale restores the full run count on the sweep command.
struct RunOptions {
  Config config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool paper_scale = false;
};

// Full round-trip decimal formatting; infinities render as `inf`/-`inf`.
std::string format_double(double x);

// Fixed-point bias over a behavior-policy grid on the two-state aliased
// problem, with pole rows inserted where the one-step system is singular.
// CSV columns: p,td_error,etd_error,etd_error_f,etd_bound_f,optimal_error.
int cmd_kolter_bias(const RunOptions& opt, std::ostream& out);

// Seeded learning-error sweep over the trace decay grid; per-run rows then
// an aggregate block.
int cmd_beta_sweep(const RunOptions& opt, std::ostream& out);

// Weighted-norm tightness report on the two-state mismatch chain.
int cmd_example1(const RunOptions& opt, std::ostream& out);

// Follow-on trace statistics report on the two-state variance chain.
int cmd_example2(const RunOptions& opt, std::ostream& out);

// Multi-step contraction modulus over a (lambda, beta) grid.
// CSV columns: lambda,beta,value,contracts.
int cmd_moduli_surface(const RunOptions& opt, std::ostream& out);

}  // namespace etdlab
