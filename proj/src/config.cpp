#include "etdlab/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace etdlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(k[0])) && k[0] != '_') {
    return false;
  }
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
        c != '.' && c != '-') {
      return false;
    }
  }
  return true;
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

Config Config::from_string(const std::string& text,
                           const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(origin, line_no, "invalid key '" + key + "'");
    if (cfg.entries_.count(key)) {
      fail(origin, line_no, "duplicate key '" + key + "'");
    }

    Entry e;
    e.line = line_no;
    std::string rest = trim(line.substr(eq + 1));
    if (rest.empty()) fail(origin, line_no, "missing value for '" + key + "'");

    if (rest[0] == '[') {
      // Bracketed array, possibly spanning lines until brackets balance.
      const int start_line = line_no;
      long depth = 0;
      std::string body;
      std::string chunk = rest;
      for (;;) {
        for (char c : chunk) {
          if (c == '[') ++depth;
          else if (c == ']') --depth;
          if (depth < 0) fail(origin, line_no, "unbalanced ']'");
        }
        body += chunk;
        body += ' ';
        if (depth == 0) break;
        if (!std::getline(in, raw)) {
          fail(origin, start_line, "unterminated array for '" + key + "'");
        }
        ++line_no;
        chunk = raw;
        if (auto hash = chunk.find('#'); hash != std::string::npos) {
          chunk.erase(hash);
        }
      }
      for (char& c : body) {
        if (c == '[' || c == ']' || c == ',') c = ' ';
      }
      std::istringstream toks(body);
      std::string tok;
      while (toks >> tok) {
        double v;
        if (!parse_double(tok, v)) {
          fail(origin, start_line,
               "array '" + key + "' holds non-numeric entry '" + tok + "'");
        }
        e.numbers.push_back(v);
      }
      e.is_array = true;
    } else if (double v; parse_double(rest, v)) {
      e.numbers.push_back(v);
    } else {
      e.text = rest;
      e.is_text = true;
    }
    cfg.entries_.emplace(key, std::move(e));
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

const Config::Entry& Config::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError(origin_ + ": missing key '" + key + "'");
  }
  return it->second;
}

double Config::get_number(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.is_text || e.is_array) {
    throw error_at(key, "'" + key + "' must be a single number");
  }
  return e.numbers[0];
}

long Config::get_int(const std::string& key) const {
  const double v = get_number(key);
  if (std::floor(v) != v || std::abs(v) > 9e15) {
    throw error_at(key, "'" + key + "' must be an integer");
  }
  return static_cast<long>(v);
}

std::uint64_t Config::get_uint64(const std::string& key) const {
  const long v = get_int(key);
  if (v < 0) throw error_at(key, "'" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

const std::vector<double>& Config::get_array(const std::string& key) const {
  const Entry& e = entry(key);
  if (!e.is_array) throw error_at(key, "'" + key + "' must be an array");
  return e.numbers;
}

const std::string& Config::get_text(const std::string& key) const {
  const Entry& e = entry(key);
  if (!e.is_text) throw error_at(key, "'" + key + "' must be a word");
  return e.text;
}

double Config::number_or(const std::string& key, double dflt) const {
  return has(key) ? get_number(key) : dflt;
}

long Config::int_or(const std::string& key, long dflt) const {
  return has(key) ? get_int(key) : dflt;
}

std::uint64_t Config::uint64_or(const std::string& key,
                                std::uint64_t dflt) const {
  return has(key) ? get_uint64(key) : dflt;
}

std::vector<double> Config::array_or(const std::string& key,
                                     std::vector<double> dflt) const {
  return has(key) ? get_array(key) : dflt;
}

void Config::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, e] : entries_) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) fail(origin_, e.line, "unknown key '" + key + "'");
  }
}

ConfigError Config::error_at(const std::string& key,
                             const std::string& msg) const {
  auto it = entries_.find(key);
  std::ostringstream os;
  os << origin_ << ":";
  if (it != entries_.end()) os << it->second.line << ":";
  os << " " << msg;
  return ConfigError(os.str());
}

TabularMdp mdp_from_config(const Config& cfg) {
  TabularMdp mdp;
  mdp.n_states = static_cast<int>(cfg.get_int("n_states"));
  mdp.n_actions = static_cast<int>(cfg.get_int("n_actions"));
  if (mdp.n_states <= 0 || mdp.n_actions <= 0) {
    throw cfg.error_at("n_states", "state and action counts must be positive");
  }
  mdp.gamma = cfg.get_number("gamma");

  const int S = mdp.n_states;
  const int A = mdp.n_actions;
  const auto& kernel = cfg.get_array("kernel");
  if (static_cast<long>(kernel.size()) != static_cast<long>(S) * A * S) {
    throw cfg.error_at("kernel", "'kernel' needs n_states*n_actions*n_states "
                                 "values");
  }
  mdp.kernel.assign(static_cast<std::size_t>(A),
                    Eigen::MatrixXd::Zero(S, S));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int s2 = 0; s2 < S; ++s2) {
        mdp.kernel[static_cast<std::size_t>(a)](s, s2) =
            kernel[static_cast<std::size_t>((s * A + a) * S + s2)];
      }
    }
  }

  const auto& reward = cfg.get_array("reward");
  if (static_cast<long>(reward.size()) != static_cast<long>(S) * A) {
    throw cfg.error_at("reward", "'reward' needs n_states*n_actions values");
  }
  mdp.reward.resize(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      mdp.reward(s, a) = reward[static_cast<std::size_t>(s * A + a)];
    }
  }

  try {
    mdp.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.origin() + ": " + err.what());
  }
  return mdp;
}

Policy policy_from_config(const Config& cfg, const std::string& key,
                          const TabularMdp& mdp) {
  const auto& flat = cfg.get_array(key);
  const int S = mdp.n_states;
  const int A = mdp.n_actions;
  if (static_cast<long>(flat.size()) != static_cast<long>(S) * A) {
    throw cfg.error_at(key, "'" + key + "' needs n_states*n_actions values");
  }
  Policy p;
  p.probs.resize(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      p.probs(s, a) = flat[static_cast<std::size_t>(s * A + a)];
    }
  }
  try {
    p.validate(S, A);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.origin() + ": '" + key + "': " + err.what());
  }
  return p;
}

}  // namespace etdlab
