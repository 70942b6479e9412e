#include "etdlab/emphatic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace etdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCondLimit = 1e14;

// Solves M' x = rhs with an SVD so near-singular resolvents surface as
// SingularSystem instead of silently huge weights.
Eigen::VectorXd solve_transposed(const Eigen::MatrixXd& M,
                                 const Eigen::VectorXd& rhs) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kCondLimit) {
    throw SingularSystem("resolvent is singular or near singular");
  }
  return svd.solve(rhs);
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Eigen::VectorXd emphatic_f(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P, double beta) {
  require(P.rows() == P.cols(), "P must be square");
  require(d_mu.size() == P.rows(), "weight size must match P");
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(P.rows(), P.cols()) - beta * P;
  return solve_transposed(M, d_mu);
}

Eigen::VectorXd emphatic_m(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P, double lambda,
                                 double beta) {
  require(P.rows() == P.cols(), "P must be square");
  require(d_mu.size() == P.rows(), "weight size must match P");
  if (lambda * beta >= 1.0) {
    throw SingularSystem("lambda * beta must be below 1");
  }
  const Eigen::MatrixXd Plb = lambda_matrix(P, lambda, beta);
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(P.rows(), P.cols()) - Plb;
  return solve_transposed(M, d_mu);
}

double kappa(const Eigen::VectorXd& d_mu, const Eigen::VectorXd& f) {
  require(d_mu.size() == f.size(), "weight sizes must match");
  double kappa = kInf;
  bool any = false;
  for (Eigen::Index s = 0; s < f.size(); ++s) {
    require(f(s) >= 0.0 && d_mu(s) >= 0.0, "weights must be non-negative");
    if (f(s) > 0.0) {
      kappa = std::min(kappa, d_mu(s) / f(s));
      any = true;
    } else {
      require(d_mu(s) == 0.0, "zero visit weight with positive frequency");
    }
  }
  require(any, "all visit weights are zero");
  return kappa;
}

Modulus one_step_modulus(double gamma, double beta, double kappa) {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0, 1]");
  if (beta <= 0.0) return {kInf, false};
  const double value = std::sqrt(gamma * gamma * (1.0 - kappa) / beta);
  return {value, value < 1.0};
}

Modulus lambda_modulus(double gamma, double beta, double lambda) {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  if (beta <= 0.0) return {kInf, false};
  double sq;
  if (beta >= gamma) {
    const double num = gamma * gamma * (1.0 + lambda * beta) *
                       (1.0 + lambda * beta) * (1.0 - lambda);
    const double den = beta * (1.0 + gamma * lambda) * (1.0 + gamma * lambda) *
                       (1.0 - lambda * beta);
    sq = num / den;
  } else {
    const double num =
        gamma * gamma * (1.0 - beta * lambda) * (1.0 - lambda);
    const double den =
        beta * (1.0 - gamma * lambda) * (1.0 - gamma * lambda);
    sq = num / den;
  }
  const double value = std::sqrt(sq);
  return {value, value < 1.0};
}

double norm_domination_constant(double gamma, double beta, double lambda) {
  require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  if (beta >= gamma) {
    return gamma * (1.0 + beta * lambda) / (beta * (1.0 + gamma * lambda));
  }
  return gamma * (1.0 - beta * lambda) / (beta * (1.0 - gamma * lambda));
}

double verify_norm_inequality(const Eigen::MatrixXd& P,
                                     const Eigen::VectorXd& m, double lambda,
                                     double beta, double gamma, int trials,
                                     std::uint64_t seed) {
  require(trials > 0, "trials must be positive");
  const Eigen::MatrixXd A_gamma = lambda_matrix(P, lambda, gamma);
  const Eigen::MatrixXd A_beta = lambda_matrix(P, lambda, beta);
  const double c = norm_domination_constant(gamma, beta, lambda);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = -kInf;
  Eigen::VectorXd v(P.rows());
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(gen);
    const double denom = weighted_sq_norm(v, m);
    if (denom <= 0.0) continue;
    const double lhs = weighted_sq_norm(A_gamma * v, m);
    const double rhs = c * c * weighted_sq_norm(A_beta * v, m);
    worst = std::max(worst, (lhs - rhs) / denom);
  }
  return worst;
}

Eigen::MatrixXd mismatch_matrix(const TabularMdp& mdp,
                                const Policy& behavior,
                                const Policy& target) {
  target.validate(mdp.n_states, mdp.n_actions);
  behavior.validate(mdp.n_states, mdp.n_actions);
  Eigen::MatrixXd Pt = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pi = target.probs(s, a);
      const double mu = behavior.probs(s, a);
      if (mu <= 0.0) {
        if (pi > 0.0) {
          throw UndefinedRatio("target action not covered by behavior");
        }
        continue;
      }
      Pt.row(s) += (pi * pi / mu) * mdp.kernel[a].row(s);
    }
  }
  return Pt;
}

double spectral_radius(const Eigen::MatrixXd& A) {
  require(A.rows() == A.cols(), "matrix must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

FollowOnSecondMoment second_moment_q(const Eigen::VectorXd& d_mu,
                                            const Eigen::MatrixXd& P_target,
                                            const Eigen::VectorXd& f,
                                            const Eigen::MatrixXd& Pt,
                                            double beta) {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  FollowOnSecondMoment out;
  out.spectral_radius = spectral_radius(Pt);
  if (beta * beta * out.spectral_radius >= 1.0 - 1e-10) {
    out.finite = false;
    return out;
  }
  const Eigen::Index n = d_mu.size();
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(n, n) - beta * beta * Pt.transpose();
  const Eigen::VectorXd rhs =
      d_mu + 2.0 * beta * P_target.transpose() * f;
  out.q = M.partialPivLu().solve(rhs);
  out.finite = true;
  return out;
}

double average_variance(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& f,
                              const Eigen::VectorXd& d_mu) {
  require(q.size() == f.size() && f.size() == d_mu.size(),
          "vector sizes must match");
  double mean_square = 0.0;
  for (Eigen::Index s = 0; s < f.size(); ++s) {
    if (d_mu(s) <= 0.0) {
      require(f(s) <= 1e-12, "positive visit weight on unvisited state");
      continue;
    }
    mean_square += f(s) * f(s) / d_mu(s);
  }
  return std::max(0.0, q.sum() - mean_square);
}

EmphaticProfile emphatic_profile(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P_target, double gamma,
                                 double lambda, double beta) {
  EmphaticProfile prof;
  prof.beta = beta;
  prof.lambda = lambda;
  prof.f = emphatic_f(d_mu, P_target, beta);
  prof.m = emphatic_m(d_mu, P_target, lambda, beta);
  prof.kappa = kappa(d_mu, prof.f);
  prof.zeta = lambda_matrix_row_sum(lambda, beta);
  prof.one_step = one_step_modulus(gamma, beta, prof.kappa);
  prof.multi_step = lambda_modulus(gamma, beta, lambda);
  return prof;
}

VarianceDiagnostics variance_diagnostics(const TabularMdp& mdp,
                                         const Policy& behavior,
                                         const Policy& target, double beta) {
  VarianceDiagnostics diag;
  const InducedChain mu_chain = induce_chain(mdp, behavior);
  const InducedChain pi_chain = induce_chain(mdp, target);
  diag.mismatch = mismatch_matrix(mdp, behavior, target);
  diag.f = emphatic_f(mu_chain.d, pi_chain.P, beta);
  diag.second_moment =
      second_moment_q(mu_chain.d, pi_chain.P, diag.f, diag.mismatch, beta);
  diag.avg_variance =
      diag.second_moment.finite
          ? average_variance(*diag.second_moment.q, diag.f, mu_chain.d)
          : kInf;
  diag.bound = variance_bound(beta, diag.mismatch);
  return diag;
}

VarianceBound variance_bound(double beta, const Eigen::MatrixXd& Pt) {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  VarianceBound out;
  out.infinity_norm = Pt.cwiseAbs().rowwise().sum().maxCoeff();
  if (beta >= 1.0 || beta * beta * out.infinity_norm >= 1.0) {
    out.applicable = false;
    out.value = kInf;
    return out;
  }
  out.applicable = true;
  const double n = out.infinity_norm;
  out.value = (beta * beta / (1.0 - beta)) *
              (2.0 + (1.0 + beta) * n / (1.0 - beta * beta * n));
  return out;
}

}  // namespace etdlab
