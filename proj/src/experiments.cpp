#include "etdlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "etdlab/emphatic.hpp"
#include "etdlab/fixed_point.hpp"
#include "etdlab/instances.hpp"
#include "etdlab/simulate.hpp"

namespace etdlab {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

FixedPointSpec make_spec(AlgorithmTag tag, double beta, double lambda = 0.0) {
  FixedPointSpec s;
  s.tag = tag;
  s.beta = beta;
  s.lambda = lambda;
  return s;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    g.push_back(lo + (hi - lo) * i / (points - 1));
  }
  return g;
}

std::uint64_t pick_seed(const RunOptions& opt, std::uint64_t dflt) {
  if (opt.seed_given) return opt.seed;
  return opt.config.uint64_or("seed", dflt);
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Bias of the one-step fixed points over a behavior-parameter grid.

namespace {

struct KolterRow {
  double p = 0.0;
  double td_error = 0.0;
  double etd_error = 0.0;
  double etd_error_f = 0.0;
  double etd_bound_f = 0.0;
  double optimal_error = 0.0;
};

// Scalar Gram-minus-backup gap of the one-step uncorrected system; its sign
// change locates the singular behavior parameter.
double td_gap(double gamma, double epsilon, double p) {
  const auto inst = kolter_instance(gamma, epsilon, p);
  const auto mu_chain = induce_chain(inst.mdp, inst.behavior);
  const auto pi_chain = induce_chain(inst.mdp, inst.target);
  const Eigen::MatrixXd G = inst.features.transpose() *
                            mu_chain.d.asDiagonal() * inst.features;
  const Eigen::MatrixXd H = inst.features.transpose() *
                            mu_chain.d.asDiagonal() *
                            (gamma * pi_chain.P * inst.features);
  return (G - H)(0, 0);
}

KolterRow kolter_row(double gamma, double epsilon, double p,
                     bool force_td_inf) {
  const auto inst = kolter_instance(gamma, epsilon, p);
  const auto pi_chain = induce_chain(inst.mdp, inst.target);
  const Eigen::VectorXd v_exact = exact_value(pi_chain);

  KolterRow row;
  row.p = p;
  if (force_td_inf) {
    row.td_error = kInf;
  } else {
    try {
      const auto td = solve_fixed_point(
          make_spec(AlgorithmTag::standard_td, 0.0), inst.mdp, inst.behavior,
          inst.target, inst.features);
      row.td_error = td.error_dpi;
    } catch (const SingularSystem&) {
      row.td_error = kInf;
    }
  }

  const auto etd = solve_fixed_point(
      make_spec(AlgorithmTag::etd_zero_beta, gamma), inst.mdp, inst.behavior,
      inst.target, inst.features);
  row.etd_error = etd.error_dpi;
  row.etd_error_f = etd.error_f;
  row.etd_bound_f = etd.bound_f;

  const Eigen::VectorXd w_pi =
      static_cast<double>(inst.mdp.n_states) * pi_chain.d;
  const Eigen::MatrixXd proj = projection_matrix(inst.features, w_pi);
  row.optimal_error = weighted_norm(v_exact - proj * v_exact, w_pi);
  return row;
}

void emit_kolter_row(std::ostream& out, const KolterRow& r) {
  out << format_double(r.p) << ',' << format_double(r.td_error) << ','
      << format_double(r.etd_error) << ',' << format_double(r.etd_error_f)
      << ',' << format_double(r.etd_bound_f) << ','
      << format_double(r.optimal_error) << '\n';
}

}  // namespace

int cmd_kolter_bias(const RunOptions& opt, std::ostream& out) {
  opt.config.require_known({"gamma", "epsilon", "p_grid", "seed"});
  const double gamma = opt.config.number_or("gamma", 0.99);
  const double epsilon = opt.config.number_or("epsilon", 0.001);
  std::vector<double> grid =
      opt.config.array_or("p_grid", linear_grid(0.01, 0.99, 99));
  if (grid.empty()) throw ConfigError("p_grid must be non-empty");
  std::sort(grid.begin(), grid.end());

  out << "p,td_error,etd_error,etd_error_f,etd_bound_f,optimal_error\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    emit_kolter_row(out, kolter_row(gamma, epsilon, grid[i], false));
    if (i + 1 == grid.size()) continue;
    // Bracketed sign change: bisect to the singular point and emit it as an
    // explicit `inf` row between its neighbours.
    double lo = grid[i], hi = grid[i + 1];
    double glo = td_gap(gamma, epsilon, lo), ghi = td_gap(gamma, epsilon, hi);
    if (glo == 0.0 || ghi == 0.0 || (glo < 0.0) == (ghi < 0.0)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = td_gap(gamma, epsilon, mid);
      if (gm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((gm < 0.0) == (glo < 0.0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    emit_kolter_row(out,
                    kolter_row(gamma, epsilon, 0.5 * (lo + hi), true));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Learning-error sweep over the trace decay grid.

int cmd_beta_sweep(const RunOptions& opt, std::ostream& out) {
  opt.config.require_known({"gamma", "epsilon", "p", "alpha", "n_steps",
                            "n_runs", "seed", "beta_grid", "n_states",
                            "n_actions", "kernel", "reward", "behavior",
                            "target"});

  TabularMdp mdp;
  Policy behavior, target;
  Eigen::MatrixXd Phi;
  if (opt.config.has("n_states")) {
    mdp = mdp_from_config(opt.config);
    behavior = policy_from_config(opt.config, "behavior", mdp);
    target = policy_from_config(opt.config, "target", mdp);
    Phi = Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states);
  } else {
    const double gamma = opt.config.number_or("gamma", 0.9);
    const double epsilon = opt.config.number_or("epsilon", 0.2);
    const double p = opt.config.number_or("p", 0.95);
    const auto inst = kolter_instance(gamma, epsilon, p);
    mdp = inst.mdp;
    behavior = inst.behavior;
    target = inst.target;
    Phi = inst.features;
  }

  SimConfig cfg;
  cfg.alpha = opt.config.number_or("alpha", 0.001);
  cfg.n_steps = opt.config.int_or("n_steps", 10000);
  cfg.n_runs = opt.paper_scale
                   ? 10000
                   : static_cast<int>(opt.config.int_or("n_runs", 500));
  cfg.seed = pick_seed(opt, 1);

  const std::vector<double> grid = opt.config.array_or(
      "beta_grid", {0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95});
  if (grid.empty()) throw ConfigError("beta_grid must be non-empty");

  const auto sweep = mse_sweep(mdp, behavior, target, Phi, grid, cfg);

  out << "beta,lambda,run,seed,final_error,tail_avg_error,diverged\n";
  for (const auto& r : sweep.rows) {
    out << format_double(r.beta) << ',' << format_double(r.lambda) << ','
        << r.run << ',' << r.seed << ',' << format_double(r.final_error)
        << ',' << format_double(r.tail_avg_error) << ','
        << (r.diverged ? 1 : 0) << '\n';
  }
  out << "beta,mean_final_error,se_final_error,mean_tail_error,"
         "se_tail_error,n_diverged,n_runs\n";
  for (const auto& s : sweep.summary) {
    out << format_double(s.beta) << ',' << format_double(s.mean_final) << ','
        << format_double(s.se_final) << ',' << format_double(s.mean_tail)
        << ',' << format_double(s.se_tail) << ',' << s.n_diverged << ','
        << s.n_runs << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Weighted-norm tightness report on the two-state mismatch chain.

int cmd_example1(const RunOptions& opt, std::ostream& out) {
  opt.config.require_known({"epsilon", "beta", "gamma"});
  const double epsilon = opt.config.number_or("epsilon", 0.01);
  const double beta = opt.config.number_or("beta", 0.9);
  const double gamma = opt.config.number_or("gamma", 0.9);

  const auto inst = mismatch_instance(gamma, epsilon);
  const auto mu_chain = induce_chain(inst.mdp, inst.behavior);
  const auto pi_chain = induce_chain(inst.mdp, inst.target);
  const Eigen::VectorXd f = emphatic_f(mu_chain.d, pi_chain.P, beta);

  Eigen::VectorXd v(2);
  v << 0.0, 1.0;
  const double nv = weighted_sq_norm(v, f);
  const double npv = weighted_sq_norm(pi_chain.P * v, f);
  const double ratio = gamma * gamma * npv / nv;
  const double reference = gamma * gamma / beta;

  out << "epsilon = " << format_double(epsilon) << '\n';
  out << "beta = " << format_double(beta) << '\n';
  out << "gamma = " << format_double(gamma) << '\n';
  out << "d_mu = " << format_double(mu_chain.d(0)) << ' '
      << format_double(mu_chain.d(1)) << '\n';
  out << "f = " << format_double(f(0)) << ' ' << format_double(f(1)) << '\n';
  // Closed form for the rarely visited state's weight:
  // (epsilon + beta - 2 epsilon beta) / (1 - beta).
  out << "f_1_closed_form = "
      << format_double((epsilon + beta - 2.0 * epsilon * beta) /
                       (1.0 - beta))
      << '\n';
  out << "norm_v_sq = " << format_double(nv) << '\n';
  out << "norm_Pv_sq = " << format_double(npv) << '\n';
  out << "ratio = " << format_double(ratio) << '\n';
  out << "reference = " << format_double(reference) << '\n';
  out << "deviation = "
      << format_double(std::abs(ratio - reference) / reference) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// Follow-on trace statistics report on the two-state variance chain.

int cmd_example2(const RunOptions& opt, std::ostream& out) {
  opt.config.require_known({"beta", "gamma", "n_steps", "seed"});
  const double beta = opt.config.number_or("beta", 0.6);
  const double gamma = opt.config.number_or("gamma", 0.9);
  const long n_steps = opt.config.int_or("n_steps", 1000000);
  const std::uint64_t seed = pick_seed(opt, 12345);

  const auto inst = variance_instance(gamma);
  const auto diag =
      variance_diagnostics(inst.mdp, inst.behavior, inst.target, beta);

  out << "beta = " << format_double(beta) << '\n';
  // Long-run mean of the trace: sum of the resolvent weights, 1/(1-beta).
  out << "stationary_average = " << format_double(1.0 / (1.0 - beta))
      << '\n';
  if (2.0 * beta > 1.0) {
    // Closed-form candidate 1/(2(1-beta)); derived under 2 beta > 1.
    out << "claimed_average = " << format_double(1.0 / (2.0 * (1.0 - beta)))
        << '\n';
  }
  out << "second_moment_radius = "
      << format_double(beta * beta * diag.second_moment.spectral_radius)
      << '\n';
  out << "verdict = " << (diag.second_moment.finite ? "finite" : "divergent")
      << '\n';
  out << "average_variance = " << format_double(diag.avg_variance) << '\n';
  out << "variance_bound = " << format_double(diag.bound.value) << '\n';

  const auto traj =
      sample_trajectory(inst.mdp, inst.behavior, n_steps, seed);
  const Eigen::MatrixXd rho = importance_ratios(inst.target, inst.behavior);
  double F = 1.0, sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < n_steps; ++t) {
    if (t > 0) {
      const auto& prev = traj[static_cast<std::size_t>(t - 1)];
      F = beta * rho(prev.s, prev.a) * F + 1.0;
    }
    sum += F;
    sum_sq += F * F;
    const long done = t + 1;
    if (done == 1000 || done == 10000 || done == 100000 ||
        done == 1000000) {
      out << "checkpoint steps=" << done
          << " average=" << format_double(sum / done)
          << " second_moment=" << format_double(sum_sq / done) << '\n';
    }
  }
  out << "final_average = "
      << format_double(sum / static_cast<double>(n_steps)) << '\n';
  out << "final_second_moment = "
      << format_double(sum_sq / static_cast<double>(n_steps)) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// Multi-step contraction modulus surface.

int cmd_moduli_surface(const RunOptions& opt, std::ostream& out) {
  opt.config.require_known({"gamma", "beta_grid", "lambda_grid"});
  const double gamma = opt.config.number_or("gamma", 0.9);

  std::vector<double> betas = opt.config.array_or(
      "beta_grid", {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99});
  if (std::find(betas.begin(), betas.end(), gamma) == betas.end()) {
    betas.push_back(gamma);  // always include the beta = gamma column
  }
  std::sort(betas.begin(), betas.end());

  const std::vector<double> lambdas = opt.config.array_or(
      "lambda_grid", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
                      0.95, 0.99, 0.999, 0.9999});

  out << "lambda,beta,value,contracts\n";
  for (double lambda : lambdas) {
    for (double beta : betas) {
      const Modulus m = lambda_modulus(gamma, beta, lambda);
      out << format_double(lambda) << ',' << format_double(beta) << ','
          << format_double(m.value) << ',' << (m.contracts ? 1 : 0) << '\n';
    }
  }
  return 0;
}

}  // namespace etdlab
