#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "etdlab/config.hpp"
#include "etdlab/experiments.hpp"
#include "etdlab/mdp.hpp"
#include "etdlab/simulate.hpp"

namespace {

struct CliState {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool paper_scale = false;
};

void add_common_options(CLI::App* sub, CliState& st) {
  sub->add_option("--config", st.config_path,
                  "Config file (key = value text format)");
  sub->add_option("--seed", st.seed, "Base RNG seed (overrides the config)");
  sub->add_option("--out", st.out_path,
                  "Output file path (default: stdout)");
  sub->add_flag("--paper-scale", st.paper_scale,
                "Use the full 10,000-run sweep instead of the 500-run "
                "default");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and simulated off-policy evaluation with "
               "emphatic temporal-difference methods"};
  app.require_subcommand(1);
  CliState st;

  CLI::App* kolter = app.add_subcommand(
      "kolter-bias",
      "Fixed-point bias across behavior policies on the two-state aliased "
      "problem (CSV)");
  CLI::App* sweep = app.add_subcommand(
      "beta-sweep", "Seeded learning-error sweep over trace decay rates "
                    "(CSV)");
  CLI::App* ex1 = app.add_subcommand(
      "example1", "Weighted-norm tightness report on the two-state "
                  "mismatch chain");
  CLI::App* ex2 = app.add_subcommand(
      "example2", "Follow-on trace statistics report on the two-state "
                  "variance chain");
  CLI::App* moduli = app.add_subcommand(
      "moduli-surface", "Contraction modulus over a (lambda, beta) grid "
                        "(CSV)");
  for (CLI::App* sub : {kolter, sweep, ex1, ex2, moduli}) {
    add_common_options(sub, st);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  CLI::App* sub = app.get_subcommands().front();

  etdlab::RunOptions opt;
  opt.paper_scale = st.paper_scale;
  opt.seed = st.seed;
  opt.seed_given = sub->count("--seed") > 0;
  try {
    if (!st.config_path.empty()) {
      opt.config = etdlab::Config::from_file(st.config_path);
    }
  } catch (const etdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  std::ofstream file;
  if (!st.out_path.empty()) {
    file.open(st.out_path);
    if (!file) {
      std::cerr << "config error: cannot open output file '" << st.out_path
                << "'\n";
      return 2;
    }
  }
  std::ostream& out = st.out_path.empty() ? std::cout : file;

  try {
    if (sub == kolter) return etdlab::cmd_kolter_bias(opt, out);
    if (sub == sweep) return etdlab::cmd_beta_sweep(opt, out);
    if (sub == ex1) return etdlab::cmd_example1(opt, out);
    if (sub == ex2) return etdlab::cmd_example2(opt, out);
    if (sub == moduli) return etdlab::cmd_moduli_surface(opt, out);
    std::cerr << "config error: unknown command\n";
    return 2;
  } catch (const etdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
