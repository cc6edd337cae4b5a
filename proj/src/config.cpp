#include "hflsim/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace hflsim {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void fail(const std::string& key, int line, const std::string& msg) {
  throw ConfigError("config error at line " + std::to_string(line) + ", key '" + key +
                    "': " + msg);
}

double parse_double(const std::string& key, int line, const std::string& v) {
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') fail(key, line, "expected a number, got '" + v + "'");
  return d;
}

uint64_t parse_u64(const std::string& key, int line, const std::string& v) {
  char* end = nullptr;
  unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos)
    fail(key, line, "expected a non-negative integer, got '" + v + "'");
  return u;
}

bool parse_bool(const std::string& key, int line, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(key, line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, int line, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ','))
    if (!item.empty()) out.push_back(parse_double(key, line, item));
  if (out.empty()) fail(key, line, "expected a comma-separated number list");
  return out;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

std::string DataConfig::resolved_root() const {
  if (!root.empty()) return root;
  if (const char* env = std::getenv("HFLSIM_DATA_ROOT"); env && *env) return env;
  return "data/mnist10k";
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.game.alpha = 0.001;
  cfg.game.beta = 0.001;
  cfg.game.delta = 0.1;
  cfg.game.dt = 0.01;
  cfg.game.populations = {{3000, 10, 10}, {3000, 30, 30}, {3000, 50, 50}};
  cfg.game.servers = {{100, 2}, {300, 4}, {500, 6}};
  cfg.hfl.kappa1 = 5;
  cfg.hfl.kappa2 = 2;
  cfg.hfl.iterations = 1000;
  cfg.hfl.eta0 = 0.01;
  cfg.hfl.decay = 0.995;
  cfg.hfl.batch_size = 20;
  cfg.hfl.arch = Architecture{784, 32, 10};
  cfg.data.spec.workers = 50;
  cfg.data.spec.edges = 3;
  cfg.data.spec.classes_per_worker = 1;
  cfg.data.spec.edge_mode = EdgeMode::NonIid;
  cfg.data.spec.synthetic_fraction = 0.05;
  cfg.data.spec.pool_fraction = 0.1;
  cfg.data.spec.noise_sigma = 0.1;
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg = default_config();
  std::map<std::string, Entry> seen;  // "section.key" -> value/line

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config error at line " +
                                                std::to_string(line_no) +
                                                ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "game" && section != "hfl" && section != "data" && section != "sweep")
        throw ConfigError("config error at line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config error at line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    seen[section.empty() ? key : section + "." + key] = {value, line_no};
  }

  auto take = [&](const std::string& full) -> const Entry* {
    auto it = seen.find(full);
    if (it == seen.end()) return nullptr;
    return &it->second;
  };

  // top-level
  if (auto* e = take("mode")) {
    if (e->value == "game") cfg.mode = RunMode::Game;
    else if (e->value == "phase") cfg.mode = RunMode::Phase;
    else if (e->value == "hfl") cfg.mode = RunMode::Hfl;
    else if (e->value == "sweep") cfg.mode = RunMode::Sweep;
    else fail("mode", e->line, "expected game|phase|hfl|sweep");
  }
  if (auto* e = take("output_dir")) cfg.output_dir = e->value;
  if (auto* e = take("master_seed")) cfg.master_seed = parse_u64("master_seed", e->line, e->value);
  if (auto* e = take("n_inits")) {
    cfg.n_inits = parse_u64("n_inits", e->line, e->value);
    if (cfg.n_inits < 2) fail("n_inits", e->line, "need at least 2 initial states");
  }
  if (auto* e = take("init")) {
    if (e->value != "random" && e->value != "uniform")
      fail("init", e->line, "expected random|uniform");
    cfg.init = e->value;
  }

  // [game]
  if (auto* e = take("game.alpha")) cfg.game.alpha = parse_double("alpha", e->line, e->value);
  if (auto* e = take("game.beta")) cfg.game.beta = parse_double("beta", e->line, e->value);
  if (auto* e = take("game.delta")) cfg.game.delta = parse_double("delta", e->line, e->value);
  if (auto* e = take("game.dt")) cfg.game.dt = parse_double("dt", e->line, e->value);
  if (auto* e = take("game.max_steps")) cfg.game.max_steps = parse_u64("max_steps", e->line, e->value);
  if (auto* e = take("game.eq_tol")) cfg.game.eq_tol = parse_double("eq_tol", e->line, e->value);
  if (auto* e = take("game.share_floor"))
    cfg.game.share_floor = parse_double("share_floor", e->line, e->value);
  if (auto* e = take("game.utility_eq_tol"))
    cfg.game.utility_eq_tol = parse_double("utility_eq_tol", e->line, e->value);
  if (auto* e = take("game.record_every"))
    cfg.game.record_every = parse_u64("record_every", e->line, e->value);
  if (auto* e = take("game.rng_seed")) cfg.game.rng_seed = parse_u64("rng_seed", e->line, e->value);
  if (auto* e = take("game.populations")) {
    cfg.game.populations.clear();
    for (const auto& item : split(e->value, ',')) {
      auto parts = split(item, ':');
      if (parts.size() != 3) fail("populations", e->line, "expected d:c:m triplets");
      cfg.game.populations.push_back({parse_double("populations", e->line, parts[0]),
                                      parse_double("populations", e->line, parts[1]),
                                      parse_double("populations", e->line, parts[2])});
    }
  }
  if (auto* e = take("game.servers")) {
    cfg.game.servers.clear();
    for (const auto& item : split(e->value, ',')) {
      auto parts = split(item, ':');
      if (parts.size() != 2) fail("servers", e->line, "expected gamma:s pairs");
      cfg.game.servers.push_back({parse_double("servers", e->line, parts[0]),
                                  parse_double("servers", e->line, parts[1])});
    }
  }

  // [hfl]
  if (auto* e = take("hfl.kappa1")) cfg.hfl.kappa1 = uint32_t(parse_u64("kappa1", e->line, e->value));
  if (auto* e = take("hfl.kappa2")) cfg.hfl.kappa2 = uint32_t(parse_u64("kappa2", e->line, e->value));
  if (auto* e = take("hfl.K")) cfg.hfl.iterations = uint32_t(parse_u64("K", e->line, e->value));
  if (auto* e = take("hfl.eta0")) cfg.hfl.eta0 = parse_double("eta0", e->line, e->value);
  if (auto* e = take("hfl.decay")) cfg.hfl.decay = parse_double("decay", e->line, e->value);
  if (auto* e = take("hfl.batch_size"))
    cfg.hfl.batch_size = uint32_t(parse_u64("batch_size", e->line, e->value));
  if (auto* e = take("hfl.eval_every"))
    cfg.hfl.eval_every = uint32_t(parse_u64("eval_every", e->line, e->value));
  if (auto* e = take("hfl.eval_intermediate"))
    cfg.hfl.eval_intermediate = parse_bool("eval_intermediate", e->line, e->value);
  if (auto* e = take("hfl.hidden_dim"))
    cfg.hfl.arch.hidden_dim = int(parse_u64("hidden_dim", e->line, e->value));
  if (auto* e = take("hfl.rng_seed")) cfg.hfl.rng_seed = parse_u64("rng_seed", e->line, e->value);

  // [data]
  if (auto* e = take("data.root")) cfg.data.root = e->value;
  if (auto* e = take("data.train_limit"))
    cfg.data.train_limit = parse_u64("train_limit", e->line, e->value);
  if (auto* e = take("data.classes_per_worker"))
    cfg.data.spec.classes_per_worker = int(parse_u64("classes_per_worker", e->line, e->value));
  if (auto* e = take("data.J")) cfg.data.spec.workers = uint32_t(parse_u64("J", e->line, e->value));
  if (auto* e = take("data.N")) cfg.data.spec.edges = uint32_t(parse_u64("N", e->line, e->value));
  if (auto* e = take("data.edge_mode")) {
    if (e->value == "iid") cfg.data.spec.edge_mode = EdgeMode::Iid;
    else if (e->value == "noniid") cfg.data.spec.edge_mode = EdgeMode::NonIid;
    else if (e->value == "equilibrium") cfg.data.spec.edge_mode = EdgeMode::FromEquilibrium;
    else fail("edge_mode", e->line, "expected iid|noniid|equilibrium");
  }
  if (auto* e = take("data.edge_shares"))
    cfg.data.spec.edge_shares = parse_list("edge_shares", e->line, e->value);
  if (auto* e = take("data.synthetic_fraction"))
    cfg.data.spec.synthetic_fraction = parse_double("synthetic_fraction", e->line, e->value);
  if (auto* e = take("data.pool_fraction"))
    cfg.data.spec.pool_fraction = parse_double("pool_fraction", e->line, e->value);
  if (auto* e = take("data.noise_sigma"))
    cfg.data.spec.noise_sigma = parse_double("noise_sigma", e->line, e->value);
  if (auto* e = take("data.rng_seed"))
    cfg.data.spec.rng_seed = parse_u64("rng_seed", e->line, e->value);

  // [sweep]
  if (auto* e = take("sweep.parameter")) cfg.sweep.parameter = e->value;
  if (auto* e = take("sweep.values")) cfg.sweep.values = parse_list("values", e->line, e->value);

  // reject unknown keys
  static const char* known[] = {
      "mode", "output_dir", "master_seed", "n_inits", "init",
      "game.alpha", "game.beta", "game.delta", "game.dt", "game.max_steps", "game.eq_tol",
      "game.share_floor", "game.utility_eq_tol", "game.record_every", "game.rng_seed",
      "game.populations", "game.servers",
      "hfl.kappa1", "hfl.kappa2", "hfl.K", "hfl.eta0", "hfl.decay", "hfl.batch_size",
      "hfl.eval_every", "hfl.eval_intermediate", "hfl.hidden_dim", "hfl.rng_seed",
      "data.root", "data.train_limit", "data.classes_per_worker", "data.J", "data.N",
      "data.edge_mode", "data.edge_shares", "data.synthetic_fraction", "data.pool_fraction",
      "data.noise_sigma", "data.rng_seed",
      "sweep.parameter", "sweep.values"};
  for (const auto& [full, entry] : seen) {
    bool ok = std::any_of(std::begin(known), std::end(known),
                          [&](const char* k) { return full == k; });
    if (!ok) fail(full, entry.line, "unknown key");
  }

  // cross-field invariants, attributed to the nearest key
  auto line_of = [&](const std::string& full) {
    auto it = seen.find(full);
    return it == seen.end() ? 0 : it->second.line;
  };
  try {
    cfg.game.validate();
  } catch (const std::invalid_argument& e) {
    fail("[game]", line_of("game.populations"), e.what());
  }
  try {
    cfg.hfl.validate();
  } catch (const std::invalid_argument& e) {
    fail("[hfl]", line_of("hfl.K"), e.what());
  }
  try {
    cfg.data.spec.validate();
  } catch (const std::invalid_argument& e) {
    fail("[data]", line_of("data.J"), e.what());
  }
  if (cfg.mode == RunMode::Sweep) {
    if (cfg.sweep.parameter.empty() || cfg.sweep.values.empty())
      fail("[sweep]", line_of("sweep.parameter"), "sweep mode needs parameter and values");
    check_sweep_axis(cfg, cfg.sweep.parameter);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const std::string& text) {
  // canonicalize: (section.key, value) pairs sorted by key
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string raw, section;
  while (std::getline(in, raw)) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    entries.push_back({section.empty() ? trim(line.substr(0, eq))
                                       : section + "." + trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1))});
  }
  std::sort(entries.begin(), entries.end());
  uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  for (const auto& [k, v] : entries) {
    mix(k);
    mix(v);
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Returns a pointer to the swept scalar, or null if the axis is integral and
// handled separately.
bool axis_with_index(const std::string& axis, const std::string& prefix, size_t count,
                     size_t* out) {
  if (axis.rfind(prefix, 0) != 0) return false;
  const std::string idx = axis.substr(prefix.size());
  if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("sweep parameter '" + axis + "' has a malformed index");
  size_t i = std::stoul(idx);
  if (i < 1 || i > count)
    throw ConfigError("sweep parameter '" + axis + "' index out of range (1.." +
                      std::to_string(count) + ")");
  *out = i - 1;
  return true;
}

}  // namespace

void apply_sweep_value(ExperimentConfig& cfg, const std::string& axis, double value) {
  size_t i = 0;
  if (axis_with_index(axis, "gamma_", cfg.game.servers.size(), &i))
    cfg.game.servers[i].reward_pool = value;
  else if (axis_with_index(axis, "s_", cfg.game.servers.size(), &i))
    cfg.game.servers[i].synth_cost = value;
  else if (axis_with_index(axis, "c_", cfg.game.populations.size(), &i))
    cfg.game.populations[i].compute_cost = value;
  else if (axis_with_index(axis, "m_", cfg.game.populations.size(), &i))
    cfg.game.populations[i].comm_cost = value;
  else if (axis_with_index(axis, "d_", cfg.game.populations.size(), &i))
    cfg.game.populations[i].data_quantity = value;
  else if (axis == "delta")
    cfg.game.delta = value;
  else if (axis == "dt")
    cfg.game.dt = value;
  else if (axis == "kappa1")
    cfg.hfl.kappa1 = uint32_t(value);
  else if (axis == "kappa2")
    cfg.hfl.kappa2 = uint32_t(value);
  else if (axis == "K")
    cfg.hfl.iterations = uint32_t(value);
  else if (axis == "eta0")
    cfg.hfl.eta0 = value;
  else if (axis == "decay")
    cfg.hfl.decay = value;
  else if (axis == "synthetic_fraction")
    cfg.data.spec.synthetic_fraction = value;
  else if (axis == "classes_per_worker")
    cfg.data.spec.classes_per_worker = int(value);
  else if (axis == "train_limit")
    cfg.data.train_limit = size_t(value);
  else
    throw ConfigError("unknown sweep parameter '" + axis + "'");
}

void check_sweep_axis(const ExperimentConfig& cfg, const std::string& axis) {
  ExperimentConfig probe = cfg;
  apply_sweep_value(probe, axis, cfg.sweep.values.empty() ? 1.0 : cfg.sweep.values.front());
}

}  // namespace hflsim
