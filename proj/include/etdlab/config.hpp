#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdlab/mdp.hpp"

namespace etdlab {

// Raised for any problem with a config file; messages carry
// "origin:line:" prefixes wherever a line is known.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plain-text `key = value` configuration. Values are scalars, bracketed
// numeric arrays (nested brackets are flattened, entries split on commas or
// whitespace, arrays may span lines), or bare words. `#` starts a comment.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text,
                            const std::string& origin = "<config>");

  bool empty() const { return entries_.empty(); }
  bool has(const std::string& key) const;

  double get_number(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  const std::vector<double>& get_array(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;

  double number_or(const std::string& key, double dflt) const;
  long int_or(const std::string& key, long dflt) const;
  std::uint64_t uint64_or(const std::string& key, std::uint64_t dflt) const;
  std::vector<double> array_or(const std::string& key,
                               std::vector<double> dflt) const;

  // Rejects keys outside the given schema, reporting the offending line.
  void require_known(const std::vector<std::string>& allowed) const;

  // ConfigError pointing at the line that defined `key`.
  ConfigError error_at(const std::string& key, const std::string& msg) const;

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::vector<double> numbers;
    std::string text;
    bool is_array = false;
    bool is_text = false;
    int line = 0;
  };

  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  std::string origin_;
};

// Assembles a tabular problem from config keys:
//   n_states, n_actions, gamma,
//   kernel  (n_states * n_actions * n_states values, indexed [s][a][s']),
//   reward  (n_states * n_actions, indexed [s][a]),
// and S*A policy tables under arbitrary keys (usually behavior / target).
TabularMdp mdp_from_config(const Config& cfg);
Policy policy_from_config(const Config& cfg, const std::string& key,
                          const TabularMdp& mdp);

}  // namespace etdlab
