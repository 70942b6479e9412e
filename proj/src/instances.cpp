#include "etdlab/instances.hpp"

namespace etdlab {

namespace {

Policy bernoulli_policy(double first_prob) {
  Policy pol;
  pol.probs.resize(2, 2);
  pol.probs << first_prob, 1.0 - first_prob, first_prob, 1.0 - first_prob;
  return pol;
}

}  // namespace

TabularMdp two_state_mdp(double gamma) {
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.kernel.resize(2);
  for (int a = 0; a < 2; ++a) {
    mdp.kernel[a] = Eigen::MatrixXd::Zero(2, 2);
    mdp.kernel[a].col(a).setOnes();
  }
  mdp.reward = Eigen::MatrixXd::Zero(2, 2);
  mdp.gamma = gamma;
  mdp.validate();
  return mdp;
}

ProblemInstance kolter_instance(double gamma, double epsilon, double p) {
  ProblemInstance inst;
  inst.mdp = two_state_mdp(gamma);
  inst.target = bernoulli_policy(0.5);
  inst.behavior = bernoulli_policy(p);

  // Rewards chosen so the target-policy value function is exactly (1, 1.05).
  Eigen::VectorXd v(2);
  v << 1.0, 1.05;
  const Eigen::MatrixXd P_target = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const Eigen::VectorXd r =
      (Eigen::MatrixXd::Identity(2, 2) - gamma * P_target) * v;
  inst.mdp.reward.col(0) = r;
  inst.mdp.reward.col(1) = r;

  inst.features.resize(2, 1);
  inst.features << 1.0, 1.05 + epsilon;
  return inst;
}

ProblemInstance mismatch_instance(double gamma, double epsilon) {
  ProblemInstance inst;
  inst.mdp = two_state_mdp(gamma);
  inst.behavior = bernoulli_policy(1.0 - epsilon);
  inst.target = bernoulli_policy(epsilon);
  inst.features = Eigen::MatrixXd::Identity(2, 2);
  return inst;
}

ProblemInstance variance_instance(double gamma) {
  ProblemInstance inst;
  inst.mdp = two_state_mdp(gamma);
  inst.behavior = bernoulli_policy(0.5);
  inst.target = bernoulli_policy(0.0);
  inst.features = Eigen::MatrixXd::Identity(2, 2);
  return inst;
}

}  // namespace etdlab
