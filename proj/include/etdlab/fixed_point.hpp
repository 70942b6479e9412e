#pragma once

#include <Eigen/Dense>

#include "etdlab/mdp.hpp"

namespace etdlab {

enum class AlgorithmTag { standard_td, etd_zero_beta, etd_lambda_beta };

// Which projected equation to solve and under which weighting. When `weights`
// is left empty it is derived from the tag: the behavior frequencies for
// standard TD, the discounted visit weights for the one-step emphatic
// algorithm, and the emphasis weights for the full trace algorithm.
struct FixedPointSpec {
  AlgorithmTag tag = AlgorithmTag::standard_td;
  double beta = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd weights;
};

struct BiasReport {
  Eigen::VectorXd theta;
  // Approximation error of the fixed point against the true values, in the
  // discounted-visit, behavior-frequency, and target-frequency norms. The
  // target-frequency weights are scaled to mean one so a uniform target
  // distribution reproduces the plain Euclidean norm.
  double error_f = 0.0;
  double error_dmu = 0.0;
  double error_dpi = 0.0;
  // || proj V - V || in the algorithm's own weighting.
  double best_approx_error = 0.0;
  // Error bounds error_f <= best / sqrt(1 - g^2(1-kappa)/beta) and
  // error_dmu <= best / sqrt(g (1 - g^2(1-kappa)/beta)), valid for the
  // one-step emphatic weighting when beta > g^2(1-kappa).
  bool bound_applicable = false;
  double bound_f = 0.0;
  double bound_dmu = 0.0;
  double kappa = 0.0;
  // Ill-posedness of the projected system: the scale of its Gram and backup
  // terms over the smallest singular value of their difference.
  double condition = 0.0;
};

// Projection onto span(Phi) orthogonal in the w-weighted inner product:
// Phi (Phi' W Phi)^{-1} Phi' W. Raises RankDeficientFeatures when Phi does
// not have full column rank under the weighting.
Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& Phi,
                                  const Eigen::VectorXd& w);

// Solves Phi' W ((I - gl P)^{-1} r + A Phi theta - Phi theta) = 0 on the
// target-policy chain, where A is gamma P for the one-step tags and the
// lambda-weighted multi-step operator otherwise. Raises SingularSystem when
// the projected system's condition number exceeds 1e12, which is exactly the
// divergent-bias regime of the standard-TD weighting.
BiasReport solve_fixed_point(const FixedPointSpec& spec, const TabularMdp& mdp,
                             const Policy& behavior, const Policy& target,
                             const Eigen::MatrixXd& Phi);

// Spectral norm of the linear part of the projected backup under the
// weighting `spec` selects, computed as the top singular value of
// W^{1/2} Proj A W^{-1/2}.
double empirical_contraction_norm(const TabularMdp& mdp,
                                  const Policy& behavior, const Policy& target,
                                  const Eigen::MatrixXd& Phi,
                                  const FixedPointSpec& spec);

}  // namespace etdlab
