#include "etdlab/fixed_point.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "etdlab/emphatic.hpp"

namespace etdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSingularLimit = 1e12;

struct Setup {
  InducedChain chain;       // target-policy chain
  Eigen::VectorXd d_mu;     // behavior frequencies
  Eigen::VectorXd w;        // norm weights per tag
  Eigen::MatrixXd A;        // linear part of the backup
  Eigen::VectorXd r_eff;    // reward part of the backup
  double beta_eff = 0.0;
};

Setup build_setup(const FixedPointSpec& spec, const TabularMdp& mdp,
                  const Policy& behavior, const Policy& target) {
  mdp.validate();
  Setup s;
  s.chain = induce_chain(mdp, target);
  s.d_mu = induce_chain(mdp, behavior).d;

  const double g = mdp.gamma;
  s.beta_eff = spec.tag == AlgorithmTag::standard_td ? 0.0 : spec.beta;

  if (spec.weights.size() > 0) {
    if (spec.weights.size() != mdp.n_states) {
      throw std::invalid_argument("weight override has wrong size");
    }
    check_weight_vector(spec.weights);
    s.w = spec.weights;
  } else {
    switch (spec.tag) {
      case AlgorithmTag::standard_td:
        s.w = s.d_mu;
        break;
      case AlgorithmTag::etd_zero_beta:
        s.w = emphatic_f(s.d_mu, s.chain.P, spec.beta);
        break;
      case AlgorithmTag::etd_lambda_beta:
        s.w = emphatic_m(s.d_mu, s.chain.P, spec.lambda, spec.beta);
        break;
    }
    check_weight_vector(s.w);
  }

  if (spec.tag == AlgorithmTag::etd_lambda_beta && spec.lambda > 0.0) {
    s.A = lambda_matrix(s.chain.P, spec.lambda, g);
    const Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) -
        g * spec.lambda * s.chain.P;
    s.r_eff = M.partialPivLu().solve(s.chain.r);
  } else {
    s.A = g * s.chain.P;
    s.r_eff = s.chain.r;
  }
  return s;
}

}  // namespace

Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& Phi,
                                  const Eigen::VectorXd& w) {
  if (Phi.rows() != w.size()) {
    throw std::invalid_argument("feature rows must match weight size");
  }
  check_weight_vector(w);
  const Eigen::MatrixXd scaled = w.cwiseSqrt().asDiagonal() * Phi;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  if (qr.rank() < Phi.cols()) {
    throw RankDeficientFeatures("features are rank deficient under weighting");
  }
  const Eigen::MatrixXd G = Phi.transpose() * w.asDiagonal() * Phi;
  return Phi * G.ldlt().solve(Phi.transpose() * w.asDiagonal());
}

BiasReport solve_fixed_point(const FixedPointSpec& spec, const TabularMdp& mdp,
                             const Policy& behavior, const Policy& target,
                             const Eigen::MatrixXd& Phi) {
  if (Phi.rows() != mdp.n_states) {
    throw std::invalid_argument("feature rows must match state count");
  }
  const Setup s = build_setup(spec, mdp, behavior, target);
  const double g = mdp.gamma;

  // Projected normal equations, k x k.
  const Eigen::MatrixXd WPhi = s.w.asDiagonal() * Phi;
  const Eigen::MatrixXd G = Phi.transpose() * WPhi;
  const Eigen::MatrixXd H = Phi.transpose() * s.w.asDiagonal() * (s.A * Phi);
  const Eigen::MatrixXd M = G - H;
  const Eigen::VectorXd rhs = WPhi.transpose() * s.r_eff;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);

  // The divergent-bias poles show up as cancellation between the Gram term
  // and the backup term, so singularity is measured against their scale
  // rather than within M alone (a 1x1 M always has plain condition 1).
  const double scale = G.norm() + H.norm();

  BiasReport report;
  report.condition = smin > 0.0 ? scale / smin : kInf;
  if (!(smin > 0.0) || report.condition > kSingularLimit) {
    throw SingularSystem("projected fixed-point system is near singular");
  }
  report.theta = svd.solve(rhs);

  const Eigen::VectorXd v_true = exact_value(s.chain);
  const Eigen::VectorXd err = Phi * report.theta - v_true;

  const Eigen::VectorXd f = emphatic_f(s.d_mu, s.chain.P, s.beta_eff);
  report.kappa = kappa(s.d_mu, f);
  report.error_f = weighted_norm(err, f);
  report.error_dmu = weighted_norm(err, s.d_mu);
  try {
    const Eigen::VectorXd d_pi = stationary_distribution(s.chain.P);
    report.error_dpi =
        weighted_norm(err, static_cast<double>(mdp.n_states) * d_pi);
  } catch (const NonIrreducibleChain&) {
    report.error_dpi = std::numeric_limits<double>::quiet_NaN();
  }

  const Eigen::MatrixXd proj = projection_matrix(Phi, s.w);
  report.best_approx_error = weighted_norm(proj * v_true - v_true, s.w);

  const double gap = 1.0 - g * g * (1.0 - report.kappa) / s.beta_eff;
  if (spec.tag == AlgorithmTag::etd_zero_beta && s.beta_eff > 0.0 &&
      gap > 0.0 && g > 0.0) {
    report.bound_applicable = true;
    report.bound_f = report.best_approx_error / std::sqrt(gap);
    report.bound_dmu = report.best_approx_error / std::sqrt(g * gap);
  } else {
    report.bound_applicable = false;
    report.bound_f = kInf;
    report.bound_dmu = kInf;
  }
  return report;
}

double empirical_contraction_norm(const TabularMdp& mdp,
                                  const Policy& behavior, const Policy& target,
                                  const Eigen::MatrixXd& Phi,
                                  const FixedPointSpec& spec) {
  const Setup s = build_setup(spec, mdp, behavior, target);
  const Eigen::MatrixXd proj = projection_matrix(Phi, s.w);
  const Eigen::VectorXd root = s.w.cwiseSqrt();
  const Eigen::MatrixXd B = root.asDiagonal() * proj * s.A *
                            root.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  return svd.singularValues()(0);
}

}  // namespace etdlab
