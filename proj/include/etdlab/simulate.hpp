#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdlab/mdp.hpp"

namespace etdlab {

// Thrown when a learner's weights leave the trust region (infinity norm
// above 1e12 or non-finite); carries the step at which that happened.
struct NumericalDivergence : std::runtime_error {
  explicit NumericalDivergence(long at_step)
      : std::runtime_error("weights diverged at step " +
                           std::to_string(at_step)),
        step(at_step) {}
  long step;
};

// SplitMix64 scrambling; used to derive independent per-run streams from a
// base seed without correlated generator states.
std::uint64_t split_mix64(std::uint64_t x);

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

using Trajectory = std::vector<Transition>;

// Samples a behavior-policy trajectory with the initial state drawn from the
// stationary distribution. Fully reproducible from the seed.
Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& behavior,
                             long n_steps, std::uint64_t seed);

struct SimConfig {
  double alpha = 0.001;
  long n_steps = 10000;
  int n_runs = 500;
  std::uint64_t seed = 0;
  Eigen::VectorXd theta0;  // zero vector of the right size when empty
};

// Online learner state. F starts at one and the eligibility trace starts at
// zero; beta = 0 keeps F pinned at one, lambda = 1 keeps the emphasis M
// pinned at one.
struct TraceState {
  Eigen::VectorXd theta;
  double F = 1.0;
  Eigen::VectorXd e;
  double M = 1.0;
  long t = 0;
};

// Conditional follow-on trace statistics along one trajectory; the first
// 1000 steps are discarded as burn-in.
struct TraceStats {
  Eigen::VectorXd mean;    // E[F | s]
  Eigen::VectorXd second;  // E[F^2 | s]
  double time_average = 0.0;
  double avg_conditional_variance = 0.0;
};

struct RunResult {
  Eigen::VectorXd theta;       // final iterate
  Eigen::VectorXd tail_theta;  // average of the iterates over the last half
  TraceStats stats;
  TraceState trace;            // learner state after the last step
};

// Online one-step emphatic learner:
//   F_t = beta rho_{t-1} F_{t-1} + 1,   F_0 = 1
//   theta += alpha F_t rho_t (r + g theta'phi(s') - theta'phi(s)) phi(s).
RunResult run_etd0(const Trajectory& traj, const Eigen::MatrixXd& Phi,
                   double gamma, double beta, const Policy& behavior,
                   const Policy& target, const SimConfig& config);

// Full trace learner:
//   F_t = beta rho_{t-1} F_{t-1} + 1
//   M_t = lambda + (1 - lambda) F_t
//   e_t = rho_t (gamma lambda e_{t-1} + M_t phi(s)),   e_{-1} = 0
//   theta += alpha delta_t e_t.
RunResult run_etd_lambda(const Trajectory& traj, const Eigen::MatrixXd& Phi,
                         double gamma, double lambda, double beta,
                         const Policy& behavior, const Policy& target,
                         const SimConfig& config);

// Runs only the follow-on recursion along the trajectory.
TraceStats followon_stats(const Trajectory& traj, const Policy& behavior,
                          const Policy& target, double beta);

struct SweepRow {
  double beta = 0.0;
  double lambda = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  double final_error = 0.0;
  double tail_avg_error = 0.0;
  bool diverged = false;
};

struct SweepSummary {
  double beta = 0.0;
  double mean_final = 0.0;
  double se_final = 0.0;
  double mean_tail = 0.0;
  double se_tail = 0.0;
  int n_diverged = 0;
  int n_runs = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
};

// Independent seeded runs of the one-step learner for every grid beta;
// errors are measured against the exact values in the target-frequency norm
// scaled to mean one. Divergent runs are flagged and excluded from the
// means, never silently averaged. (beta, run) pairs execute concurrently on
// a pool capped by the ETD_LAB_THREADS environment variable; results land in
// preallocated slots so the output is independent of scheduling.
SweepResult mse_sweep(const TabularMdp& mdp, const Policy& behavior,
                      const Policy& target, const Eigen::MatrixXd& Phi,
                      const std::vector<double>& beta_grid,
                      const SimConfig& config);

}  // namespace etdlab
