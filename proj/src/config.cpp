#include "morphon/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace morphon {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << source_;
    if (has(key)) os << ":" << line(key);
    os << ": key '" << key << "': " << what;
    throw ConfigError(os.str());
  }

  template <class T>
  void integer(const std::string& key, T& out, long long lo = 0) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno == ERANGE) fail(key, "expected an integer, got '" + v + "'");
    if (x < lo) fail(key, "value " + v + " is out of range (minimum " + std::to_string(lo) + ")");
    out = T(x);
  }

  void real(const std::string& key, double& out, bool positive = true) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE) fail(key, "expected a number, got '" + v + "'");
    if (positive && !(x > 0.0)) fail(key, "value " + v + " must be > 0");
    out = x;
  }

  template <class E>
  void choice(const std::string& key, E& out, const std::map<std::string, E>& options) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    const auto it = options.find(v);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : " | ") + name;
      fail(key, "invalid value '" + v + "' (expected " + allowed + ")");
    }
    out = it->second;
  }

private:
  std::map<std::string, Entry> entries_;
  std::string source_;
};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "problem", "nelx", "nely", "nelz", "lx", "ly", "lz", "load", "volfrac", "filter_radius",
      "e0", "emin", "nu", "penal", "iterations", "ni", "nf", "nb", "width", "layers",
      "train_steps", "train_budget", "batch", "seed", "solver_tol", "max_solver_iters",
      "move_limit", "damping", "oc_tol", "g_floor", "mode"};
  return keys;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

Mode parse_mode(const std::string& text) {
  if (text == "standard") return Mode::standard;
  if (text == "onsg") return Mode::onsg;
  throw ConfigError("invalid mode '" + text + "' (expected standard | onsg)");
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    bool known = false;
    for (const auto& k : known_keys()) known = known || k == key;
    if (!known) throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (entries.count(key))
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(entries[key].line) + ")");
    entries[key] = {value, lineno};
  }

  const Reader r(std::move(entries), source);
  RunConfig cfg;
  r.choice<Preset>("problem", cfg.problem, {{"cantilever", Preset::cantilever}, {"mbb", Preset::mbb}});
  if (cfg.problem == Preset::mbb) {
    cfg.nelx = 48;
    cfg.nely = 8;
    cfg.nelz = 16;
    cfg.lengths = {6.0, 1.0, 2.0};
    cfg.block_size = 4;
    cfg.width = 500;
    cfg.interval = 45;
    cfg.train_steps = 3000;
  }
  r.integer("nelx", cfg.nelx, 1);
  r.integer("nely", cfg.nely, 1);
  r.integer("nelz", cfg.nelz, 1);
  r.real("lx", cfg.lengths[0]);
  r.real("ly", cfg.lengths[1]);
  r.real("lz", cfg.lengths[2]);
  r.real("load", cfg.load, false);
  r.real("volfrac", cfg.volfrac);
  if (cfg.volfrac > 1.0) r.fail("volfrac", "must be <= 1");
  r.real("filter_radius", cfg.filter_radius);
  r.real("e0", cfg.material.E0);
  r.real("emin", cfg.material.Emin);
  r.real("nu", cfg.material.nu);
  if (cfg.material.nu >= 0.5) r.fail("nu", "must be < 0.5");
  r.real("penal", cfg.material.penal);
  if (cfg.material.penal < 1.0) r.fail("penal", "must be >= 1");
  if (cfg.material.Emin >= cfg.material.E0) r.fail("emin", "must be smaller than e0");
  r.integer("iterations", cfg.iterations, 1);
  r.integer("ni", cfg.warmup, 1);
  r.integer("nf", cfg.interval, 1);
  r.integer("nb", cfg.block_size, 1);
  if (cfg.warmup > cfg.iterations) r.fail(r.has("ni") ? "ni" : "iterations", "ni must not exceed iterations");
  r.integer("width", cfg.width, 1);
  r.integer("layers", cfg.layers, 1);
  r.integer("train_steps", cfg.train_steps, 1);
  r.choice<TrainBudget>("train_budget", cfg.train_budget,
                        {{"total", TrainBudget::total}, {"per_session", TrainBudget::per_session}});
  r.integer("batch", cfg.batch_size, 1);
  r.integer("seed", cfg.seed, 0);
  r.real("solver_tol", cfg.solver_tol);
  if (cfg.solver_tol >= 1.0) r.fail("solver_tol", "must be < 1");
  r.integer("max_solver_iters", cfg.max_solver_iters, 0);
  r.real("move_limit", cfg.oc.move_limit);
  if (cfg.oc.move_limit > 1.0) r.fail("move_limit", "must be <= 1");
  r.real("damping", cfg.oc.damping);
  if (cfg.oc.damping > 1.0) r.fail("damping", "must be <= 1");
  r.real("oc_tol", cfg.oc.volume_tol);
  r.real("g_floor", cfg.g_floor);
  cfg.oc.g_floor = cfg.g_floor;
  r.choice<Mode>("mode", cfg.mode, {{"standard", Mode::standard}, {"onsg", Mode::onsg}});

  if (cfg.problem == Preset::mbb) {
    if (cfg.nelx % 2) r.fail("nelx", "mbb requires an even value, got " + std::to_string(cfg.nelx));
    if (cfg.nely % 2) r.fail("nely", "mbb requires an even value, got " + std::to_string(cfg.nely));
  }
  if (cfg.mode == Mode::onsg) {
    const char* names[3] = {"nelx", "nely", "nelz"};
    const int dims[3] = {cfg.nelx, cfg.nely, cfg.nelz};
    for (int a = 0; a < 3; ++a)
      if (dims[a] % cfg.block_size != 0) {
        std::ostringstream os;
        os << source << ": " << names[a] << " = " << dims[a];
        if (r.has(names[a])) os << " (line " << r.line(names[a]) << ")";
        os << " is not divisible by nb = " << cfg.block_size;
        if (r.has("nb")) os << " (line " << r.line("nb") << ")";
        throw ConfigError(os.str());
      }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  return {
      {"problem", to_string(c.problem)},
      {"nelx", std::to_string(c.nelx)},
      {"nely", std::to_string(c.nely)},
      {"nelz", std::to_string(c.nelz)},
      {"lx", fmt(c.lengths[0])},
      {"ly", fmt(c.lengths[1])},
      {"lz", fmt(c.lengths[2])},
      {"load", fmt(c.load)},
      {"volfrac", fmt(c.volfrac)},
      {"filter_radius", fmt(c.filter_radius)},
      {"e0", fmt(c.material.E0)},
      {"emin", fmt(c.material.Emin)},
      {"nu", fmt(c.material.nu)},
      {"penal", fmt(c.material.penal)},
      {"iterations", std::to_string(c.iterations)},
      {"ni", std::to_string(c.warmup)},
      {"nf", std::to_string(c.interval)},
      {"nb", std::to_string(c.block_size)},
      {"width", std::to_string(c.width)},
      {"layers", std::to_string(c.layers)},
      {"train_steps", std::to_string(c.train_steps)},
      {"train_budget", to_string(c.train_budget)},
      {"batch", std::to_string(c.batch_size)},
      {"seed", std::to_string(c.seed)},
      {"solver_tol", fmt(c.solver_tol)},
      {"max_solver_iters", std::to_string(c.max_solver_iters)},
      {"move_limit", fmt(c.oc.move_limit)},
      {"damping", fmt(c.oc.damping)},
      {"oc_tol", fmt(c.oc.volume_tol)},
      {"g_floor", fmt(c.g_floor)},
      {"mode", to_string(c.mode)},
  };
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [k, v] : config_entries(cfg)) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace morphon
