#include "etdlab/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "etdlab/emphatic.hpp"
#include "etdlab/fixed_point.hpp"

namespace etdlab {

namespace {

constexpr double kDivergenceLimit = 1e12;
constexpr long kBurnIn = 1000;
const double kInf = std::numeric_limits<double>::infinity();

// Ratio table rho(s,a) = pi(a|s) / mu(a|s); rows with mu = 0 are never
// visited under mu, so a zero there is harmless.
Eigen::MatrixXd ratio_table(const Policy& behavior, const Policy& target) {
  Eigen::MatrixXd rho =
      Eigen::MatrixXd::Zero(behavior.probs.rows(), behavior.probs.cols());
  for (Eigen::Index s = 0; s < rho.rows(); ++s) {
    for (Eigen::Index a = 0; a < rho.cols(); ++a) {
      const double mu = behavior.probs(s, a);
      const double pi = target.probs(s, a);
      if (mu > 0.0) {
        rho(s, a) = pi / mu;
      } else if (pi > 0.0) {
        throw UndefinedRatio("target acts where behavior has zero support");
      }
    }
  }
  return rho;
}

int sample_index(const Eigen::VectorXd& probs, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(gen);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

// Accumulates conditional follow-on moments, skipping the burn-in prefix.
struct TraceAccumulator {
  explicit TraceAccumulator(int n_states)
      : sum(Eigen::VectorXd::Zero(n_states)),
        sum_sq(Eigen::VectorXd::Zero(n_states)),
        count(Eigen::VectorXd::Zero(n_states)) {}

  void add(long t, int s, double F) {
    if (t < kBurnIn) return;
    sum(s) += F;
    sum_sq(s) += F * F;
    count(s) += 1.0;
    total += F;
    n += 1.0;
  }

  TraceStats finish() const {
    TraceStats st;
    const Eigen::Index k = sum.size();
    st.mean = Eigen::VectorXd::Zero(k);
    st.second = Eigen::VectorXd::Zero(k);
    double var_acc = 0.0;
    for (Eigen::Index s = 0; s < k; ++s) {
      if (count(s) > 0.0) {
        st.mean(s) = sum(s) / count(s);
        st.second(s) = sum_sq(s) / count(s);
        if (n > 0.0) {
          var_acc += (count(s) / n) *
                     (st.second(s) - st.mean(s) * st.mean(s));
        }
      }
    }
    st.time_average = n > 0.0 ? total / n : 0.0;
    st.avg_conditional_variance = var_acc;
    return st;
  }

  Eigen::VectorXd sum, sum_sq, count;
  double total = 0.0;
  double n = 0.0;
};

Eigen::VectorXd initial_theta(const SimConfig& config, Eigen::Index k) {
  if (config.theta0.size() == 0) return Eigen::VectorXd::Zero(k);
  if (config.theta0.size() != k) {
    throw std::invalid_argument("theta0 has the wrong dimension");
  }
  return config.theta0;
}

void check_divergence(const Eigen::VectorXd& theta, long step) {
  if (!theta.allFinite() ||
      theta.cwiseAbs().maxCoeff() > kDivergenceLimit) {
    throw NumericalDivergence(step);
  }
}

int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("ETD_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  return static_cast<int>(hw);
}

}  // namespace

std::uint64_t split_mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& behavior,
                             long n_steps, std::uint64_t seed) {
  mdp.validate();
  behavior.validate(mdp.n_states, mdp.n_actions);
  InducedChain chain = induce_chain(mdp, behavior);

  std::mt19937_64 gen(split_mix64(seed));
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(n_steps));
  int s = sample_index(chain.d, gen);
  for (long t = 0; t < n_steps; ++t) {
    const int a = sample_index(behavior.probs.row(s).transpose(), gen);
    const int s_next =
        sample_index(mdp.kernel[static_cast<std::size_t>(a)].row(s).transpose(),
                     gen);
    traj.push_back({s, a, mdp.reward(s, a), s_next});
    s = s_next;
  }
  return traj;
}

RunResult run_etd0(const Trajectory& traj, const Eigen::MatrixXd& Phi,
                   double gamma, double beta, const Policy& behavior,
                   const Policy& target, const SimConfig& config) {
  if (config.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  const Eigen::MatrixXd rho = ratio_table(behavior, target);
  const Eigen::Index k = Phi.cols();

  TraceState st;
  st.theta = initial_theta(config, k);
  st.e = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(k);
  long tail_count = 0;
  const long n = static_cast<long>(traj.size());
  const long tail_start = n / 2;

  TraceAccumulator acc(static_cast<int>(Phi.rows()));
  double rho_prev = 0.0;  // unused at t = 0; F_0 = 1 by definition
  for (long t = 0; t < n; ++t) {
    const Transition& tr = traj[static_cast<std::size_t>(t)];
    if (t > 0) st.F = beta * rho_prev * st.F + 1.0;
    st.M = st.F;
    st.t = t;
    acc.add(t, tr.s, st.F);
    const double rho_t = rho(tr.s, tr.a);
    const double delta = tr.r + gamma * st.theta.dot(Phi.row(tr.s_next)) -
                         st.theta.dot(Phi.row(tr.s));
    st.theta +=
        config.alpha * st.F * rho_t * delta * Phi.row(tr.s).transpose();
    check_divergence(st.theta, t);
    if (t >= tail_start) {
      tail_sum += st.theta;
      ++tail_count;
    }
    rho_prev = rho_t;
  }

  RunResult out;
  out.theta = st.theta;
  out.tail_theta =
      tail_count > 0 ? (tail_sum / tail_count).eval() : st.theta;
  out.stats = acc.finish();
  out.trace = std::move(st);
  return out;
}

RunResult run_etd_lambda(const Trajectory& traj, const Eigen::MatrixXd& Phi,
                         double gamma, double lambda, double beta,
                         const Policy& behavior, const Policy& target,
                         const SimConfig& config) {
  if (config.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  const Eigen::MatrixXd rho = ratio_table(behavior, target);
  const Eigen::Index k = Phi.cols();

  TraceState st;
  st.theta = initial_theta(config, k);
  st.e = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(k);
  long tail_count = 0;
  const long n = static_cast<long>(traj.size());
  const long tail_start = n / 2;

  TraceAccumulator acc(static_cast<int>(Phi.rows()));
  double rho_prev = 0.0;
  for (long t = 0; t < n; ++t) {
    const Transition& tr = traj[static_cast<std::size_t>(t)];
    if (t > 0) st.F = beta * rho_prev * st.F + 1.0;
    st.M = lambda + (1.0 - lambda) * st.F;
    st.t = t;
    acc.add(t, tr.s, st.F);
    const double rho_t = rho(tr.s, tr.a);
    st.e = rho_t * (gamma * lambda * st.e + st.M * Phi.row(tr.s).transpose());
    const double delta = tr.r + gamma * st.theta.dot(Phi.row(tr.s_next)) -
                         st.theta.dot(Phi.row(tr.s));
    st.theta += config.alpha * delta * st.e;
    check_divergence(st.theta, t);
    if (t >= tail_start) {
      tail_sum += st.theta;
      ++tail_count;
    }
    rho_prev = rho_t;
  }

  RunResult out;
  out.theta = st.theta;
  out.tail_theta =
      tail_count > 0 ? (tail_sum / tail_count).eval() : st.theta;
  out.stats = acc.finish();
  out.trace = std::move(st);
  return out;
}

TraceStats followon_stats(const Trajectory& traj, const Policy& behavior,
                          const Policy& target, double beta) {
  const Eigen::MatrixXd rho = ratio_table(behavior, target);
  TraceAccumulator acc(static_cast<int>(behavior.probs.rows()));
  double F = 1.0;
  double rho_prev = 0.0;
  const long n = static_cast<long>(traj.size());
  for (long t = 0; t < n; ++t) {
    const Transition& tr = traj[static_cast<std::size_t>(t)];
    if (t > 0) F = beta * rho_prev * F + 1.0;
    acc.add(t, tr.s, F);
    rho_prev = rho(tr.s, tr.a);
  }
  return acc.finish();
}

SweepResult mse_sweep(const TabularMdp& mdp, const Policy& behavior,
                      const Policy& target, const Eigen::MatrixXd& Phi,
                      const std::vector<double>& beta_grid,
                      const SimConfig& config) {
  mdp.validate();
  behavior.validate(mdp.n_states, mdp.n_actions);
  target.validate(mdp.n_states, mdp.n_actions);

  const InducedChain pi_chain = induce_chain(mdp, target);
  const Eigen::VectorXd v_exact = exact_value(pi_chain);
  // Target-frequency norm scaled to mean one, so a one-state problem
  // reduces to the plain absolute error.
  const Eigen::VectorXd w_pi =
      static_cast<double>(mdp.n_states) * pi_chain.d;

  const int n_runs = config.n_runs;
  const std::size_t n_beta = beta_grid.size();
  SweepResult result;
  result.rows.resize(n_beta * static_cast<std::size_t>(n_runs));

  std::atomic<std::size_t> next_task{0};
  const std::size_t n_tasks = result.rows.size();

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next_task.fetch_add(1);
      if (i >= n_tasks) return;
      const std::size_t bi = i / static_cast<std::size_t>(n_runs);
      const int run = static_cast<int>(i % static_cast<std::size_t>(n_runs));
      const double beta = beta_grid[bi];
      // Stream per (beta, run) pair: mix the grid index into the seed first
      // so neighbouring runs never share generator state.
      const std::uint64_t run_seed = split_mix64(
          split_mix64(config.seed ^ static_cast<std::uint64_t>(bi)) ^
          static_cast<std::uint64_t>(run));

      SweepRow row;
      row.beta = beta;
      row.lambda = 0.0;
      row.run = run;
      row.seed = run_seed;
      try {
        const Trajectory traj =
            sample_trajectory(mdp, behavior, config.n_steps, run_seed);
        const RunResult rr = run_etd0(traj, Phi, mdp.gamma, beta, behavior,
                                      target, config);
        row.final_error = weighted_norm(Phi * rr.theta - v_exact, w_pi);
        row.tail_avg_error =
            weighted_norm(Phi * rr.tail_theta - v_exact, w_pi);
        row.diverged = false;
      } catch (const NumericalDivergence&) {
        row.final_error = kInf;
        row.tail_avg_error = kInf;
        row.diverged = true;
      }
      result.rows[i] = row;
    }
  };

  const int n_threads =
      std::min<int>(thread_cap(), static_cast<int>(n_tasks) > 0
                                      ? static_cast<int>(n_tasks)
                                      : 1);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t bi = 0; bi < n_beta; ++bi) {
    SweepSummary s;
    s.beta = beta_grid[bi];
    s.n_runs = n_runs;
    double sum_f = 0.0, sum_f2 = 0.0, sum_t = 0.0, sum_t2 = 0.0;
    int ok = 0;
    for (int r = 0; r < n_runs; ++r) {
      const SweepRow& row =
          result.rows[bi * static_cast<std::size_t>(n_runs) +
                      static_cast<std::size_t>(r)];
      if (row.diverged) {
        ++s.n_diverged;
        continue;
      }
      sum_f += row.final_error;
      sum_f2 += row.final_error * row.final_error;
      sum_t += row.tail_avg_error;
      sum_t2 += row.tail_avg_error * row.tail_avg_error;
      ++ok;
    }
    if (ok > 0) {
      s.mean_final = sum_f / ok;
      s.mean_tail = sum_t / ok;
      if (ok > 1) {
        const double var_f =
            std::max(0.0, (sum_f2 - ok * s.mean_final * s.mean_final) /
                              (ok - 1));
        const double var_t =
            std::max(0.0,
                     (sum_t2 - ok * s.mean_tail * s.mean_tail) / (ok - 1));
        s.se_final = std::sqrt(var_f / ok);
        s.se_tail = std::sqrt(var_t / ok);
      }
    } else {
      s.mean_final = kInf;
      s.mean_tail = kInf;
    }
    result.summary.push_back(s);
  }
  return result;
}

}  // namespace etdlab
