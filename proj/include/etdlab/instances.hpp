#pragma once

#include <Eigen/Dense>

#include "etdlab/mdp.hpp"

namespace etdlab {

// Two-state, two-action MDP where action k moves to state k deterministically,
// so any pair of Bernoulli policies induces an arbitrary pair of chains.
// Rewards default to zero.
TabularMdp two_state_mdp(double gamma);

struct ProblemInstance {
  TabularMdp mdp;
  Policy behavior;
  Policy target;
  Eigen::MatrixXd features;
};

// Divergent-bias construction: uniform target policy, behavior picks state 0
// with probability p, true values (1, 1.05) baked into the rewards, and the
// single feature (1, 1.05 + epsilon) that is nearly but not exactly aligned
// with the true value function.
ProblemInstance kolter_instance(double gamma, double epsilon, double p);

// Contraction-tightness construction: behavior stays in state 0 with
// probability 1 - epsilon while the target does the opposite, giving a
// minimum visit ratio near zero.
ProblemInstance mismatch_instance(double gamma, double epsilon);

// Trace-variance construction: uniform behavior, target always picks state 1,
// so squared importance ratios are (0, 2) in every state.
ProblemInstance variance_instance(double gamma);

}  // namespace etdlab
