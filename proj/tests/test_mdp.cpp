#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <random>

#include "etdlab/instances.hpp"
#include "etdlab/mdp.hpp"
#include "oracle_helpers.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd uniform_two_state() { return MatrixXd::Constant(2, 2, 0.5); }

}  // namespace

TEST_CASE("induced chains of the mismatched two-state policies") {
  const double eps = 0.1;
  const auto inst = etdlab::mismatch_instance(0.9, eps);

  const auto mu_chain = etdlab::induce_chain(inst.mdp, inst.behavior);
  CHECK(mu_chain.P(0, 0) == doctest::Approx(1.0 - eps));
  CHECK(mu_chain.P(0, 1) == doctest::Approx(eps));
  CHECK(mu_chain.P(1, 0) == doctest::Approx(1.0 - eps));
  CHECK(mu_chain.d(0) == doctest::Approx(1.0 - eps).epsilon(1e-12));
  CHECK(mu_chain.d(1) == doctest::Approx(eps).epsilon(1e-12));

  const auto pi_chain = etdlab::induce_chain(inst.mdp, inst.target);
  CHECK(pi_chain.P(0, 0) == doctest::Approx(eps));
  CHECK(pi_chain.P(0, 1) == doctest::Approx(1.0 - eps));
  CHECK(pi_chain.d(0) == doctest::Approx(eps).epsilon(1e-12));
  CHECK(pi_chain.gamma == doctest::Approx(0.9));
}

TEST_CASE("single self-loop state") {
  etdlab::TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 2;
  mdp.kernel = {MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1)};
  mdp.reward = MatrixXd::Zero(1, 2);
  mdp.gamma = 0.5;
  etdlab::Policy pol{MatrixXd::Constant(1, 2, 0.5)};
  const auto chain = etdlab::induce_chain(mdp, pol);
  CHECK(chain.P(0, 0) == doctest::Approx(1.0));
  CHECK(chain.d(0) == doctest::Approx(1.0));
}

TEST_CASE("random induced chains match the power-iteration oracle") {
  std::mt19937_64 g(oracle::mix64(11));
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = oracle::random_instance(g, 5);
    const auto chain = etdlab::induce_chain(inst.mdp, inst.behavior);
    const VectorXd ref = oracle::stationary_power(chain.P, 100000);
    CHECK((chain.d - ref).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((chain.d.transpose() * chain.P - chain.d.transpose())
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(chain.d.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("stationary distribution of the uniform two-state chain") {
  const VectorXd d = etdlab::stationary_distribution(uniform_two_state());
  CHECK(d(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("identity transition matrix has no unique stationary vector") {
  CHECK_THROWS_AS(etdlab::stationary_distribution(MatrixXd::Identity(3, 3)),
                  etdlab::NonIrreducibleChain);
}

TEST_CASE("random chains agree with power iteration") {
  std::mt19937_64 g(oracle::mix64(12));
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd P = oracle::random_chain(g, 8);
    const VectorXd d = etdlab::stationary_distribution(P);
    const VectorXd ref = oracle::stationary_power(P, 100000);
    CHECK((d - ref).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("importance ratios") {
  SUBCASE("identical policies give ones on the support") {
    std::mt19937_64 g(oracle::mix64(13));
    const auto inst = oracle::random_instance(g);
    const MatrixXd rho = etdlab::importance_ratios(inst.target, inst.target);
    CHECK((rho.array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("uniform behavior against a deterministic target") {
    const auto inst = etdlab::variance_instance(0.9);
    const MatrixXd rho = etdlab::importance_ratios(inst.target, inst.behavior);
    CHECK(rho(0, 0) == doctest::Approx(0.0));
    CHECK(rho(0, 1) == doctest::Approx(2.0));
    CHECK(rho(1, 0) == doctest::Approx(0.0));
    CHECK(rho(1, 1) == doctest::Approx(2.0));
  }
  SUBCASE("target mass outside the behavior support") {
    etdlab::Policy target{(MatrixXd(1, 2) << 0.3, 0.7).finished()};
    etdlab::Policy behavior{(MatrixXd(1, 2) << 0.0, 1.0).finished()};
    CHECK_THROWS_AS(etdlab::importance_ratios(target, behavior),
                    etdlab::UndefinedRatio);
  }
}

TEST_CASE("lambda matrix") {
  std::mt19937_64 g(oracle::mix64(14));
  const MatrixXd P = oracle::random_chain(g, 6);
  const auto n = P.rows();

  SUBCASE("a = 0 reduces to b P") {
    const MatrixXd M = etdlab::lambda_matrix(P, 0.0, 0.7);
    CHECK((M - 0.7 * P).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("b = 0 gives the zero matrix") {
    const MatrixXd M = etdlab::lambda_matrix(P, 0.4, 0.0);
    CHECK(M.lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("row sums and sign across a parameter grid") {
    for (double a : {0.0, 0.3, 0.9, 1.0}) {
      for (double b : {0.0, 0.5, 0.95}) {
        const MatrixXd M = etdlab::lambda_matrix(P, a, b);
        const double zeta = etdlab::lambda_matrix_row_sum(a, b);
        for (Eigen::Index s = 0; s < n; ++s) {
          CHECK(M.row(s).sum() == doctest::Approx(zeta).epsilon(1e-10));
        }
        CHECK(M.minCoeff() >= -1e-12);
      }
    }
  }
  SUBCASE("matches the series expansion") {
    const MatrixXd M = etdlab::lambda_matrix(P, 0.6, 0.9);
    const MatrixXd ref = oracle::multi_step_series(P, 0.6, 0.9);
    CHECK((M - ref).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  SUBCASE("idempotent chain scales to zeta P") {
    const MatrixXd Q = MatrixXd::Constant(4, 4, 0.25);
    const MatrixXd M = etdlab::lambda_matrix(Q, 0.5, 0.8);
    const double zeta = etdlab::lambda_matrix_row_sum(0.5, 0.8);
    CHECK((M - zeta * Q).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("one-step operator at zero input returns the reward vector") {
  std::mt19937_64 g(oracle::mix64(15));
  const auto inst = oracle::random_instance(g);
  const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
  const VectorXd out =
      etdlab::bellman_apply(chain, 0.0, VectorXd::Zero(chain.r.size()));
  CHECK((out - chain.r).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("one-step operator equals direct arithmetic on the mismatch chain") {
  const auto inst = etdlab::mismatch_instance(0.9, 0.25);
  auto chain = etdlab::induce_chain(inst.mdp, inst.target);
  chain.r = (VectorXd(2) << 0.3, -1.2).finished();
  VectorXd v(2);
  v << 2.0, -0.5;
  const VectorXd expected = chain.r + 0.9 * (chain.P * v);
  const VectorXd out = etdlab::bellman_apply(chain, 0.0, v);
  CHECK((out - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("true values are fixed points at every lambda") {
  std::mt19937_64 g(oracle::mix64(16));
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = oracle::random_instance(g);
    const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
    const VectorXd v = etdlab::exact_value(chain);
    for (double lambda : {0.0, 0.3, 0.7, 0.95}) {
      const VectorXd out = etdlab::bellman_apply(chain, lambda, v);
      CHECK((out - v).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("one-step operator matches r + gamma P v on random vectors") {
  std::mt19937_64 g(oracle::mix64(17));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto inst = oracle::random_instance(g);
  const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd v(chain.r.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(g);
    const VectorXd expected = chain.r + chain.gamma * (chain.P * v);
    CHECK((etdlab::bellman_apply(chain, 0.0, v) - expected)
              .lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("exact values") {
  SUBCASE("rewards tuned to produce the (1, 1.05) value pair") {
    const auto inst = etdlab::kolter_instance(0.9, 0.2, 0.5);
    const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
    const VectorXd v = etdlab::exact_value(chain);
    CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(v(1) == doctest::Approx(1.05).epsilon(1e-10));
  }
  SUBCASE("zero rewards give zero values") {
    const auto inst = etdlab::mismatch_instance(0.9, 0.2);
    const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
    CHECK(etdlab::exact_value(chain).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("matches the truncated discounted sum") {
    std::mt19937_64 g(oracle::mix64(18));
    for (int rep = 0; rep < 10; ++rep) {
      const auto inst = oracle::random_instance(g);
      const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
      const VectorXd ref =
          oracle::value_series(chain.P, chain.r, chain.gamma, 2000);
      const VectorXd v = etdlab::exact_value(chain);
      CHECK((v - ref).lpNorm<Eigen::Infinity>() < 1e-8);
      const VectorXd residual = etdlab::bellman_apply(chain, 0.0, v) - v;
      CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-9);
    }
  }
}

TEST_CASE("weighted norms") {
  SUBCASE("unit vector against the discounted visit weights") {
    const double eps = 0.1, beta = 0.6;
    const auto inst = etdlab::mismatch_instance(0.9, eps);
    const auto mu_chain = etdlab::induce_chain(inst.mdp, inst.behavior);
    const auto pi_chain = etdlab::induce_chain(inst.mdp, inst.target);
    const VectorXd f =
        oracle::followon_series(mu_chain.d, pi_chain.P, beta);
    VectorXd v(2);
    v << 0.0, 1.0;
    const double expected = (eps + beta - 2.0 * eps * beta) / (1.0 - beta);
    CHECK(etdlab::weighted_sq_norm(v, f) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("zero vector has zero norm") {
    CHECK(etdlab::weighted_norm(VectorXd::Zero(4), VectorXd::Ones(4)) == 0.0);
  }
  SUBCASE("unit weights reduce to the Euclidean norm") {
    VectorXd v(3);
    v << 3.0, 0.0, 4.0;
    CHECK(etdlab::weighted_norm(v, VectorXd::Ones(3)) ==
          doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("one-step operator contracts in the target-frequency norm") {
  std::mt19937_64 g(oracle::mix64(19));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto inst = oracle::random_instance(g);
    const auto chain = etdlab::induce_chain(inst.mdp, inst.target);
    VectorXd v1(chain.r.size()), v2(chain.r.size());
    for (Eigen::Index i = 0; i < v1.size(); ++i) {
      v1(i) = normal(g);
      v2(i) = normal(g);
    }
    const double lhs = etdlab::weighted_norm(
        etdlab::bellman_apply(chain, 0.0, v1) -
            etdlab::bellman_apply(chain, 0.0, v2),
        chain.d);
    const double rhs = chain.gamma * etdlab::weighted_norm(v1 - v2, chain.d);
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("validation rejects malformed inputs") {
  etdlab::TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.kernel = {(MatrixXd(2, 2) << 0.5, 0.6, 0.5, 0.5).finished()};
  mdp.reward = MatrixXd::Zero(2, 1);
  mdp.gamma = 0.9;
  CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
  mdp.kernel[0](0, 1) = 0.5;
  CHECK_NOTHROW(mdp.validate());
  mdp.gamma = 1.0;
  CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
}
