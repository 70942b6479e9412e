#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace etdlab {

// Thrown when a chain does not have a unique stationary distribution.
struct NonIrreducibleChain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the behavior policy assigns zero probability to an action the
// target policy can take.
struct UndefinedRatio : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a linear system is too ill-conditioned to trust.
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankDeficientFeatures : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite MDP with tabular transition kernels, one S x S matrix per action,
// and per state-action rewards. Discounting is carried here as well since
// every operator in the library needs it.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Eigen::MatrixXd> kernel;  // kernel[a](s, s') = p(s' | s, a)
  Eigen::MatrixXd reward;               // reward(s, a)
  double gamma = 0.0;

  // Checks shapes, row sums (1e-12), non-negativity and gamma in [0, 1).
  void validate() const;
};

struct Policy {
  Eigen::MatrixXd probs;  // probs(s, a)

  void validate(int n_states, int n_actions) const;
};

// Markov chain induced by running a policy on an MDP: transition matrix,
// expected one-step reward, the stationary distribution, and the discount
// inherited from the MDP.
struct InducedChain {
  Eigen::MatrixXd P;
  Eigen::VectorXd r;
  Eigen::VectorXd d;
  double gamma = 0.0;
};

// Unique stationary distribution of a row-stochastic matrix, computed by a
// direct linear solve. Uniqueness is checked through the multiplicity of the
// unit eigenvalue (tolerance 1e-8); failure raises NonIrreducibleChain.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);

InducedChain induce_chain(const TabularMdp& mdp, const Policy& policy);

// rho(s, a) = target(s, a) / behavior(s, a), with 0/0 treated as zero.
// Raises UndefinedRatio where the behavior support misses the target's.
Eigen::MatrixXd importance_ratios(const Policy& target, const Policy& behavior);

// Common row sum of lambda_matrix(P, a, b): b(1-a) / (1-ab).
double lambda_matrix_row_sum(double a, double b);

// The bootstrapped multi-step transition operator
//   I - (I - b a P)^{-1} (I - b P),
// equal to b(1-a) (I - b a P)^{-1} P. Entrywise non-negative with constant
// row sums lambda_matrix_row_sum(a, b). Requires a, b in [0, 1] with ab < 1.
Eigen::MatrixXd lambda_matrix(const Eigen::MatrixXd& P, double a, double b);

// Applies the lambda-weighted evaluation operator
//   v  ->  (I - gamma lambda P)^{-1} r + lambda_matrix(P, lambda, gamma) v,
// which for lambda = 0 is the one-step operator r + gamma P v.
Eigen::VectorXd bellman_apply(const InducedChain& chain, double lambda,
                              const Eigen::VectorXd& v);

// (I - gamma P)^{-1} r.
Eigen::VectorXd exact_value(const InducedChain& chain);

// sqrt(sum_s w(s) v(s)^2). Weights must be non-negative.
double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w);
double weighted_sq_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w);

// Validates a weighting usable for projections: finite and strictly positive.
void check_weight_vector(const Eigen::VectorXd& w);

}  // namespace etdlab
