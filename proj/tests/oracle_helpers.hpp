#pragma once

// Independent reference implementations used only by the test suites.
// Everything here is deliberately written the slow way (power iteration,
// truncated series, brute-force simulation) so the library's direct solves
// can be checked against a second derivation path.

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <vector>

#include "etdlab/mdp.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Stationary distribution by plain power iteration.
inline VectorXd stationary_power(const MatrixXd& P, int iters = 200000) {
  const auto n = P.rows();
  VectorXd d = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int i = 0; i < iters; ++i) {
    d = (d.transpose() * P).transpose();
    d /= d.sum();
  }
  return d;
}

// f' = d' (I - beta P)^{-1} as a truncated geometric series.
inline VectorXd followon_series(const VectorXd& d, const MatrixXd& P,
                                double beta, int terms = 20000) {
  VectorXd acc = d;
  VectorXd term = d;
  for (int k = 1; k < terms; ++k) {
    term = beta * (P.transpose() * term);
    acc += term;
    if (term.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  return acc;
}

// m' = d' (I - Plb)^{-1} via the same series in an arbitrary substochastic Plb.
inline VectorXd emphasis_series(const VectorXd& d, const MatrixXd& Plb,
                                int terms = 200000) {
  VectorXd acc = d;
  VectorXd term = d;
  for (int k = 1; k < terms; ++k) {
    term = Plb.transpose() * term;
    acc += term;
    if (term.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  return acc;
}

// Value function as a truncated Neumann sum of discounted expected rewards.
inline VectorXd value_series(const MatrixXd& P, const VectorXd& r,
                             double gamma, int terms = 20000) {
  VectorXd acc = r;
  VectorXd term = r;
  for (int k = 1; k < terms; ++k) {
    term = gamma * (P * term);
    acc += term;
    if (term.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  return acc;
}

// Multi-step transition built from its series form
//   b(1-a) * sum_k (ba)^k P^{k+1}
// rather than the resolvent identity the library uses.
inline MatrixXd multi_step_series(const MatrixXd& P, double a, double b,
                                  int terms = 20000) {
  const auto n = P.rows();
  MatrixXd acc = MatrixXd::Zero(n, n);
  MatrixXd term = b * (1.0 - a) * P;
  for (int k = 0; k < terms; ++k) {
    acc += term;
    term = (b * a) * (P * term);
    if (term.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  return acc;
}

// Deterministic mix for spawning independent test streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct RandomInstance {
  etdlab::TabularMdp mdp;
  etdlab::Policy target;
  etdlab::Policy behavior;
};

inline int sample_index(const VectorXd& probs, double u) {
  double cum = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

// Random MDP with strictly positive kernels and rewards, plus a full-support
// policy pair. `closeness` pulls the behavior policy toward the target.
inline RandomInstance random_instance(std::mt19937_64& g, int max_states = 10,
                                      int max_actions = 4,
                                      double closeness = 0.0,
                                      bool positive_rewards = false) {
  std::uniform_int_distribution<int> ns(2, max_states);
  std::uniform_int_distribution<int> na(2, max_actions);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int S = ns(g);
  const int A = na(g);

  etdlab::TabularMdp mdp;
  mdp.n_states = S;
  mdp.n_actions = A;
  mdp.gamma = 0.5 + 0.45 * unit(g);
  mdp.kernel.resize(A);
  for (int a = 0; a < A; ++a) {
    MatrixXd K(S, S);
    for (int s = 0; s < S; ++s) {
      for (int t = 0; t < S; ++t) K(s, t) = unit(g) + 0.05;
      K.row(s) /= K.row(s).sum();
    }
    mdp.kernel[a] = K;
  }
  mdp.reward.resize(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      mdp.reward(s, a) = positive_rewards ? unit(g) : 2.0 * unit(g) - 1.0;

  auto random_policy = [&](void) {
    MatrixXd p(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) p(s, a) = unit(g) + 0.2;
      p.row(s) /= p.row(s).sum();
    }
    return etdlab::Policy{p};
  };

  RandomInstance inst{mdp, random_policy(), random_policy()};
  if (closeness > 0.0) {
    inst.behavior.probs =
        closeness * inst.target.probs + (1.0 - closeness) * inst.behavior.probs;
  }
  return inst;
}

// Random irreducible chain (all entries positive).
inline MatrixXd random_chain(std::mt19937_64& g, int max_states = 8) {
  std::uniform_int_distribution<int> ns(2, max_states);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int S = ns(g);
  MatrixXd P(S, S);
  for (int s = 0; s < S; ++s) {
    for (int t = 0; t < S; ++t) P(s, t) = unit(g) + 1e-3;
    P.row(s) /= P.row(s).sum();
  }
  return P;
}

// Monte-Carlo conditional moments of the follow-on trace on an induced pair
// of chains. Returns per-state mean, per-state second moment, time average.
struct FollowOnMc {
  VectorXd mean;
  VectorXd second;
  double time_average = 0.0;
};

inline FollowOnMc followon_mc(const etdlab::TabularMdp& mdp,
                              const etdlab::Policy& target,
                              const etdlab::Policy& behavior, double beta,
                              long steps, std::uint64_t seed,
                              long burn_in = 1000) {
  const int S = mdp.n_states;
  std::mt19937_64 g(mix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto chain = etdlab::induce_chain(mdp, behavior);
  const auto rho = etdlab::importance_ratios(target, behavior);

  int s = sample_index(chain.d, unit(g));
  double F = 1.0;
  double prev_rho = 1.0;
  VectorXd m1 = VectorXd::Zero(S), m2 = VectorXd::Zero(S);
  VectorXd cnt = VectorXd::Zero(S);
  double tot = 0.0;
  long kept = 0;
  for (long t = 0; t < steps; ++t) {
    if (t > 0) F = beta * prev_rho * F + 1.0;
    if (t >= burn_in) {
      m1[s] += F;
      m2[s] += F * F;
      cnt[s] += 1.0;
      tot += F;
      ++kept;
    }
    const int a = sample_index(behavior.probs.row(s), unit(g));
    prev_rho = rho(s, a);
    s = sample_index(mdp.kernel[a].row(s), unit(g));
  }
  FollowOnMc out;
  out.mean = (m1.array() / cnt.array().max(1.0)).matrix();
  out.second = (m2.array() / cnt.array().max(1.0)).matrix();
  out.time_average = tot / static_cast<double>(kept);
  return out;
}

}  // namespace oracle
