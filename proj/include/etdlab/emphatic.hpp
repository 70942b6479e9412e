#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "etdlab/mdp.hpp"

namespace etdlab {

// Discounted visit weights f' = d_mu' (I - beta P)^{-1}, the stationary
// expectation of the follow-on trace per state. Sums to 1 / (1 - beta).
Eigen::VectorXd emphatic_f(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P, double beta);

// Emphasis weights m' = d_mu' (I - lambda_matrix(P, lambda, beta))^{-1}.
// Reduces to emphatic_f at lambda = 0 and to d_mu at beta = 0.
// Raises SingularSystem when the resolvent is not safely invertible
// (condition estimate above 1e14, e.g. beta = 1).
Eigen::VectorXd emphatic_m(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P, double lambda,
                                 double beta);

// kappa = min_s d_mu(s) / f(s). Lies in [0, 1 - beta]; equals 1 - beta
// exactly when the weights are on-policy proportional.
double kappa(const Eigen::VectorXd& d_mu, const Eigen::VectorXd& f);

// A contraction modulus together with whether it certifies a contraction.
// Values >= 1 are meaningful outputs (the bound simply certifies nothing).
struct Modulus {
  double value = 0.0;
  bool contracts = false;
};

// One-step modulus sqrt(gamma^2 (1 - kappa) / beta); contracts iff
// beta > gamma^2 (1 - kappa). beta = 0 yields an infinite, non-certifying
// modulus.
Modulus one_step_modulus(double gamma, double beta, double kappa);

// Modulus of the lambda-weighted projected operator in the emphasis norm,
// split at beta = gamma:
//   beta >= gamma:  gamma^2 (1+lb)^2 (1-l) / (beta (1+gl)^2 (1-lb))
//   beta <= gamma:  gamma^2 (1-bl) (1-l) / (beta (1-gl)^2)
// (value is the square root of the above; both agree at beta = gamma).
Modulus lambda_modulus(double gamma, double beta, double lambda);

// Scale constant c relating the gamma- and beta-bootstrapped multi-step
// operators in the emphasis norm.
double norm_domination_constant(double gamma, double beta, double lambda);

// For `trials` standard normal vectors v, evaluates
//   ||A_gamma v||^2_m  -  c^2 ||A_beta v||^2_m
// relative to ||v||^2_m, where A_* are the multi-step operators, and returns
// the largest value seen (positive numbers are violations of the domination).
double verify_norm_inequality(const Eigen::MatrixXd& P,
                                     const Eigen::VectorXd& m, double lambda,
                                     double beta, double gamma, int trials,
                                     std::uint64_t seed);

// Transition matrix of squared importance ratios,
//   Pt(s, s') = sum_a p(s' | s, a) target(a|s)^2 / behavior(a|s).
// Row sums are sum_a target^2 / behavior >= 1; equals the target chain when
// the policies coincide.
Eigen::MatrixXd mismatch_matrix(const TabularMdp& mdp,
                                const Policy& behavior,
                                const Policy& target);

double spectral_radius(const Eigen::MatrixXd& A);

// Stationary second moments of the follow-on trace. q solves
//   q = d_mu + 2 beta Ppi' f + beta^2 Pt' q,
// which has a finite non-negative solution iff beta^2 rho(Pt) < 1; otherwise
// the trace variance is infinite and `q` is absent.
struct FollowOnSecondMoment {
  bool finite = false;
  double spectral_radius = 0.0;
  std::optional<Eigen::VectorXd> q;
};

FollowOnSecondMoment second_moment_q(const Eigen::VectorXd& d_mu,
                                            const Eigen::MatrixXd& P_target,
                                            const Eigen::VectorXd& f,
                                            const Eigen::MatrixXd& Pt,
                                            double beta);

// Average stationary trace variance sum_s q(s) - sum_s f(s)^2 / d_mu(s),
// clipped at zero. Requires d_mu > 0 wherever f > 0.
double average_variance(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& f,
                              const Eigen::VectorXd& d_mu);

// Closed-form upper bound on the average trace variance,
//   (beta^2/(1-beta)) (2 + (1+beta) n / (1 - beta^2 n)),  n = ||Pt||_inf,
// valid while beta^2 ||Pt||_inf < 1.
struct VarianceBound {
  bool applicable = false;
  double value = 0.0;
  double infinity_norm = 0.0;
};

VarianceBound variance_bound(double beta, const Eigen::MatrixXd& Pt);

// Everything the weighting analysis produces for one (gamma, lambda, beta)
// triple on a target chain.
struct EmphaticProfile {
  double beta = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd f;
  Eigen::VectorXd m;
  double kappa = 0.0;
  double zeta = 0.0;
  Modulus one_step;
  Modulus multi_step;
};

EmphaticProfile emphatic_profile(const Eigen::VectorXd& d_mu,
                                 const Eigen::MatrixXd& P_target, double gamma,
                                 double lambda, double beta);

// Everything the trace-variance analysis produces for one (mdp, mu, pi, beta).
struct VarianceDiagnostics {
  Eigen::MatrixXd mismatch;
  FollowOnSecondMoment second_moment;
  Eigen::VectorXd f;
  // Infinite when the second-moment system diverges.
  double avg_variance = 0.0;
  VarianceBound bound;
};

VarianceDiagnostics variance_diagnostics(const TabularMdp& mdp,
                                         const Policy& behavior,
                                         const Policy& target, double beta);

}  // namespace etdlab
