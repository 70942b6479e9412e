#include "etdlab/mdp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace etdlab {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kUnitEigTol = 1e-8;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void TabularMdp::validate() const {
  require(n_states > 0 && n_actions > 0, "mdp: empty state or action set");
  require(gamma >= 0.0 && gamma < 1.0, "mdp: gamma must lie in [0, 1)");
  require(static_cast<int>(kernel.size()) == n_actions,
          "mdp: kernel must hold one matrix per action");
  for (const auto& K : kernel) {
    require(K.rows() == n_states && K.cols() == n_states,
            "mdp: kernel matrix has wrong shape");
    for (int s = 0; s < n_states; ++s) {
      require(K.row(s).minCoeff() >= -1e-15, "mdp: negative transition mass");
      require(std::abs(K.row(s).sum() - 1.0) <= kRowSumTol,
              "mdp: kernel rows must sum to one");
    }
  }
  require(reward.rows() == n_states && reward.cols() == n_actions,
          "mdp: reward table has wrong shape");
  require(reward.allFinite(), "mdp: rewards must be finite");
}

void Policy::validate(int n_states, int n_actions) const {
  require(probs.rows() == n_states && probs.cols() == n_actions,
          "policy: wrong shape");
  for (int s = 0; s < n_states; ++s) {
    require(probs.row(s).minCoeff() >= -1e-15, "policy: negative probability");
    require(std::abs(probs.row(s).sum() - 1.0) <= kRowSumTol,
            "policy: rows must sum to one");
  }
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const auto n = P.rows();
  require(P.cols() == n && n > 0, "stationary: matrix must be square");

  Eigen::EigenSolver<Eigen::MatrixXd> eig(P, /*computeEigenvectors=*/false);
  int at_one = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(eig.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) <
        kUnitEigTol)
      ++at_one;
  }
  if (at_one != 1)
    throw NonIrreducibleChain(
        "stationary distribution is not unique (unit eigenvalue multiplicity " +
        std::to_string(at_one) + ")");

  // d' (P - I) = 0 with the normalization sum(d) = 1 substituted for the
  // last equation.
  Eigen::MatrixXd A = (P.transpose() - Eigen::MatrixXd::Identity(n, n));
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd d = A.partialPivLu().solve(b);

  for (int i = 0; i < n; ++i) {
    if (d[i] < 0.0) {
      if (d[i] < -1e-9)
        throw NonIrreducibleChain("stationary solve produced negative mass");
      d[i] = 0.0;
    }
  }
  d /= d.sum();
  return d;
}

InducedChain induce_chain(const TabularMdp& mdp, const Policy& policy) {
  mdp.validate();
  policy.validate(mdp.n_states, mdp.n_actions);

  InducedChain out;
  out.gamma = mdp.gamma;
  out.P = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
  out.r = Eigen::VectorXd::Zero(mdp.n_states);
  for (int a = 0; a < mdp.n_actions; ++a)
    out.P += policy.probs.col(a).asDiagonal() * mdp.kernel[a];
  out.r = (policy.probs.array() * mdp.reward.array()).rowwise().sum();
  out.d = stationary_distribution(out.P);
  return out;
}

Eigen::MatrixXd importance_ratios(const Policy& target,
                                  const Policy& behavior) {
  require(target.probs.rows() == behavior.probs.rows() &&
              target.probs.cols() == behavior.probs.cols(),
          "importance ratios: shape mismatch");
  Eigen::MatrixXd rho(target.probs.rows(), target.probs.cols());
  for (int s = 0; s < rho.rows(); ++s) {
    for (int a = 0; a < rho.cols(); ++a) {
      const double mu = behavior.probs(s, a);
      const double pi = target.probs(s, a);
      if (mu <= 0.0) {
        if (pi > 0.0)
          throw UndefinedRatio("behavior policy excludes a target action at state " +
                               std::to_string(s));
        rho(s, a) = 0.0;
      } else {
        rho(s, a) = pi / mu;
      }
    }
  }
  return rho;
}

double lambda_matrix_row_sum(double a, double b) {
  return b * (1.0 - a) / (1.0 - a * b);
}

Eigen::MatrixXd lambda_matrix(const Eigen::MatrixXd& P, double a, double b) {
  require(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0 && a * b < 1.0,
          "lambda matrix: need a, b in [0, 1] with ab < 1");
  const auto n = P.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  return (I - a * b * P).partialPivLu().solve(b * (1.0 - a) * P);
}

Eigen::VectorXd bellman_apply(const InducedChain& chain, double lambda,
                              const Eigen::VectorXd& v) {
  const double gamma = chain.gamma;
  if (lambda == 0.0) return chain.r + gamma * (chain.P * v);
  const auto n = chain.P.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd r_lambda =
      (I - gamma * lambda * chain.P).partialPivLu().solve(chain.r);
  return r_lambda + lambda_matrix(chain.P, lambda, gamma) * v;
}

Eigen::VectorXd exact_value(const InducedChain& chain) {
  const auto n = chain.P.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  return (I - chain.gamma * chain.P).partialPivLu().solve(chain.r);
}

double weighted_sq_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  require(v.size() == w.size(), "weighted norm: size mismatch");
  require(w.minCoeff() >= 0.0, "weighted norm: negative weight");
  return (w.array() * v.array().square()).sum();
}

double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return std::sqrt(weighted_sq_norm(v, w));
}

void check_weight_vector(const Eigen::VectorXd& w) {
  if (!w.allFinite() || w.size() == 0 || w.minCoeff() <= 0.0)
    throw std::invalid_argument("weight vector must be finite and positive");
}

}  // namespace etdlab
