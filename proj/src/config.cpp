#include "ergolab/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ergolab {

namespace {

namespace pt = boost::property_tree;

struct KeyDef {
  const char* key;
  const char* fallback;
};

using Schema = std::vector<KeyDef>;

const Schema& experiment_schema() {
  static const Schema s{{"name", "run"}, {"seeds", "1"}, {"start", "0.1234 0.5678"}, {"burn_in", "1000"}};
  return s;
}

const Schema& map_schema() {
  static const Schema s{{"linear", ""}, {"perturbation", "none"}, {"epsilon", "0"},
                        {"psi1", ""},   {"psi2", ""},             {"trig", ""}};
  return s;
}

const Schema& measure_schema() {
  static const Schema s{{"atoms", ""}};
  return s;
}

const std::map<std::string, Schema>& command_schemas() {
  static const std::map<std::string, Schema> s{
      {"exponents",
       {{"steps", "10000"},
        {"batches", "20"},
        {"backward", "false"},
        {"tv_shifts", ""},
        {"expect_lambda_u", ""},
        {"tolerance", "1e-6"}}},
      {"cones",
       {{"grid", "10000"},
        {"refine", "10"},
        {"expect_certificate", ""},
        {"perturbed_grid", "64"},
        {"bisect", "false"},
        {"bisect_eps_hi", "0.19"},
        {"bisect_iterations", "30"}}},
      {"trichotomy",
       {{"samples", "1000000"},
        {"grid", "16"},
        {"fourier_cutoff", "5"},
        {"fourier_factor", "4"},
        {"atom_radius", "1e-3"},
        {"atom_mass", "1e-3"},
        {"atomic_residual", "0.01"},
        {"exponent_steps", "100000"},
        {"nonrandom_words", "50"},
        {"nonrandom_horizon", "40"},
        {"nonrandom_threshold", "1e-3"},
        {"slice", "true"},
        {"curve_radius", "0.05"},
        {"n_back", "30"},
        {"curve_points", "512"},
        {"truncation", "30"},
        {"tube", "1e-3"},
        {"dim_tolerance", "0.1"},
        {"expect_verdict", ""},
        {"plot_samples", "5000"},
        {"write_samples", "false"}}},
      {"stopping-times",
       {{"exponent_steps", "100000"},
        {"window", "500"},
        {"steps", "600"},
        {"delta", "1e-3"},
        {"epsilon", "0.1"},
        {"m_lo", "0"},
        {"m_hi", "200"},
        {"epsilon0", ""},
        {"delta_grid", "1e-1 1e-2 1e-3 1e-4 1e-5 1e-6"}}},
      {"mixed-cocycle",
       {{"f", "2 0 0 0.5"},
        {"g", "0 0.5 2 0"},
        {"t_grid", "0 0.25 0.5 0.75 1"},
        {"steps", "100000"},
        {"tolerance", "2e-3"}}},
      {"dimension",
       {{"samples", "1000000"},
        {"curve_radius", "0.05"},
        {"n_back", "30"},
        {"curve_points", "512"},
        {"truncation", "30"},
        {"tube", "1e-3"},
        {"fit_lo", "1e-3"},
        {"fit_hi", "1e-1"},
        {"dim_tolerance", "0.1"},
        {"exponent_steps", "100000"},
        {"stable", "true"},
        {"expect_dim_u_lo", ""},
        {"expect_dim_u_hi", ""}}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(where + ": expected a number, got '" + s + "'");
}

long long to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
    // Also accept integral values written as floats, e.g. 1e6.
    const double d = std::stod(s, &used);
    if (used == s.size() && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<long long>(d);
  } catch (const std::exception&) {
  }
  throw ConfigError(where + ": expected an integer, got '" + s + "'");
}

enum class ValueKind { Text, Bool, Number, Numbers, Verdict };

// Value kind of a command key, from its default or an explicit entry for keys without one.
ValueKind value_kind(const std::string& key, const std::string& fallback) {
  static const std::map<std::string, ValueKind> empty_defaults{
      {"tv_shifts", ValueKind::Numbers},       {"expect_lambda_u", ValueKind::Number},
      {"expect_certificate", ValueKind::Bool}, {"expect_verdict", ValueKind::Verdict},
      {"epsilon0", ValueKind::Number},         {"expect_dim_u_lo", ValueKind::Number},
      {"expect_dim_u_hi", ValueKind::Number}};
  if (const auto it = empty_defaults.find(key); it != empty_defaults.end()) return it->second;
  if (fallback == "true" || fallback == "false") return ValueKind::Bool;
  const auto w = words(fallback);
  if (w.empty()) return ValueKind::Text;
  for (const auto& x : w) {
    char* end = nullptr;
    std::strtod(x.c_str(), &end);
    if (*end != '\0') return ValueKind::Text;
  }
  return w.size() == 1 ? ValueKind::Number : ValueKind::Numbers;
}

void validate_values(const ConfigSection& sec, const Schema& schema) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const std::string& v = sec.entries[i].second;
    if (v.empty()) continue;
    const std::string where = "[" + sec.name + "] " + sec.entries[i].first;
    switch (value_kind(schema[i].key, schema[i].fallback)) {
      case ValueKind::Bool:
        if (v != "true" && v != "false" && v != "1" && v != "0" && v != "yes" && v != "no") {
          throw ConfigError(where + ": expected true or false, got '" + v + "'");
        }
        break;
      case ValueKind::Number:
        to_double(v, where);
        break;
      case ValueKind::Numbers: {
        std::string t = v;
        std::replace(t.begin(), t.end(), ',', ' ');
        for (const auto& w : words(t)) to_double(w, where);
        break;
      }
      case ValueKind::Verdict:
        if (v != "Atomic" && v != "SRBLike" && v != "NonRandomStableField" && v != "Inconclusive") {
          throw ConfigError(where + ": expected Atomic, SRBLike, NonRandomStableField or Inconclusive");
        }
        break;
      case ValueKind::Text:
        break;
    }
  }
}

// Property trees drop empty sections, so section names are checked on the raw text.
void check_section_names(const std::string& text, const std::map<std::string, Schema>& commands) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') continue;
    const std::string name = t.substr(1, t.size() - 2);
    const bool known = name == "experiment" || name == "measure" || (name.rfind("map:", 0) == 0 && name.size() > 4) ||
                       commands.count(name);
    if (!known) throw ConfigError("config: unknown section [" + name + "]");
  }
}

ConfigSection resolve(const std::string& name, const pt::ptree* given, const Schema& schema) {
  ConfigSection sec{name, {}};
  if (given) {
    for (const auto& [key, child] : *given) {
      const bool known = std::any_of(schema.begin(), schema.end(), [&](const KeyDef& d) { return key == d.key; });
      if (!known) throw ConfigError("[" + name + "]: unknown key '" + key + "'");
      if (given->count(key) > 1) throw ConfigError("[" + name + "]: duplicate key '" + key + "'");
    }
  }
  for (const auto& d : schema) {
    std::string v = d.fallback;
    if (given) {
      if (const auto it = given->find(d.key); it != given->not_found()) v = trim(it->second.data());
    }
    sec.entries.emplace_back(d.key, v);
  }
  return sec;
}

std::string lookup(const ConfigSection& sec, const std::string& key) {
  for (const auto& [k, v] : sec.entries) {
    if (k == key) return v;
  }
  throw ConfigError("[" + sec.name + "]: no key '" + key + "'");
}

SineSeries parse_sine_series(const std::string& text, const std::string& where) {
  SineSeries s;
  for (const auto& term : split(text, '|')) {
    const auto w = words(term);
    if (w.size() != 3) throw ConfigError(where + ": sine term needs 'k amp phase'");
    s.terms.push_back({int(to_int(w[0], where)), to_double(w[1], where), to_double(w[2], where)});
  }
  return s;
}

TrigField parse_trig(const std::string& text, const std::string& where) {
  TrigField f;
  for (const auto& term : split(text, '|')) {
    const auto w = words(term);
    if (w.size() != 5) throw ConfigError(where + ": trig term needs 'kx ky cx cy phase'");
    f.terms.push_back({int(to_int(w[0], where)), int(to_int(w[1], where)),
                       {to_double(w[2], where), to_double(w[3], where)}, to_double(w[4], where)});
  }
  return f;
}

MapSpec build_map(const ConfigSection& sec, std::optional<double> eps_override = std::nullopt) {
  const std::string where = "[" + sec.name + "]";
  const auto lin = words(lookup(sec, "linear"));
  if (lin.size() != 4) throw ConfigError(where + ": 'linear' needs four integers a b c d");
  const IntMat2 m{to_int(lin[0], where), to_int(lin[1], where), to_int(lin[2], where), to_int(lin[3], where)};
  const std::string kind = lookup(sec, "perturbation");
  const double eps = eps_override.value_or(to_double(lookup(sec, "epsilon"), where));
  try {
    if (kind == "none") return MapSpec::linear(m);
    if (kind == "shear") {
      return MapSpec::shear_pair(
          m, {parse_sine_series(lookup(sec, "psi1"), where), parse_sine_series(lookup(sec, "psi2"), where)}, eps);
    }
    if (kind == "trig") return MapSpec::trig(m, parse_trig(lookup(sec, "trig"), where), eps);
  } catch (const InvalidArgument& e) {
    if (eps_override) throw;
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": perturbation must be none, shear or trig");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"exponents",     "cones",         "trichotomy",
                                              "stopping-times", "mixed-cocycle", "dimension"};
  return names;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::vector<std::uint64_t> out;
  for (const auto& w : words(t)) {
    if (w.empty() || !std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw ConfigError("seeds: expected non-negative integers, got '" + w + "'");
    }
    try {
      out.push_back(std::stoull(w));
    } catch (const std::exception&) {
      throw ConfigError("seeds: '" + w + "' out of range");
    }
  }
  if (out.empty()) throw ConfigError("seeds: empty list");
  return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& command) {
  const auto& schemas = command_schemas();
  if (!schemas.count(command)) throw ConfigError("unknown command '" + command + "'");
  check_section_names(text, schemas);
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.command_ = command;
  const pt::ptree* experiment = nullptr;
  const pt::ptree* measure = nullptr;
  const pt::ptree* cmd = nullptr;
  std::vector<std::pair<std::string, const pt::ptree*>> maps;
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty()) throw ConfigError("config: key '" + name + "' outside a section");
    if (tree.count(name) > 1) throw ConfigError("config: duplicate section [" + name + "]");
    if (name == "experiment") {
      experiment = &child;
    } else if (name == "measure") {
      measure = &child;
    } else if (name.rfind("map:", 0) == 0 && name.size() > 4) {
      maps.emplace_back(name.substr(4), &child);
    } else if (schemas.count(name)) {
      if (name == command) cmd = &child;
    } else {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }

  cfg.sections_.push_back(resolve("experiment", experiment, experiment_schema()));
  const auto& exp = cfg.sections_.back();
  cfg.name_ = lookup(exp, "name");
  cfg.seeds_ = parse_seed_list(lookup(exp, "seeds"));
  to_int(lookup(exp, "burn_in"), "[experiment] burn_in");

  for (const auto& [name, child] : maps) {
    cfg.sections_.push_back(resolve("map:" + name, child, map_schema()));
    if (lookup(cfg.sections_.back(), "linear").empty()) throw ConfigError("[map:" + name + "]: 'linear' is required");
    cfg.family_.push_back(build_map(cfg.sections_.back()));
    cfg.map_names_.push_back(name);
  }

  if (!cfg.family_.empty()) {
    ConfigSection ms = resolve("measure", measure, measure_schema());
    std::string atoms = lookup(ms, "atoms");
    if (atoms.empty()) {
      // Default: uniform over the maps, in file order.
      std::ostringstream os;
      os.precision(17);
      for (std::size_t i = 0; i < cfg.map_names_.size(); ++i) {
        os << (i ? ", " : "") << cfg.map_names_[i] << ' ' << 1.0 / double(cfg.map_names_.size());
      }
      atoms = os.str();
      ms.entries[0].second = atoms;
    }
    std::vector<Atom> list;
    for (const auto& item : split(atoms, ',')) {
      const auto w = words(item);
      if (w.size() != 2) throw ConfigError("[measure] atoms: expected 'name probability' pairs");
      const auto it = std::find(cfg.map_names_.begin(), cfg.map_names_.end(), w[0]);
      if (it == cfg.map_names_.end()) throw ConfigError("[measure] atoms: no map named '" + w[0] + "'");
      list.push_back({std::size_t(it - cfg.map_names_.begin()), to_double(w[1], "[measure] atoms")});
    }
    try {
      cfg.measure_.emplace(std::move(list));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("[measure]: ") + e.what());
    }
    cfg.sections_.push_back(std::move(ms));
  } else if (measure) {
    throw ConfigError("[measure] given without any [map:...] section");
  }
  if (cfg.family_.empty() && command != "mixed-cocycle") {
    throw ConfigError("command '" + command + "' needs at least one [map:NAME] section");
  }

  cfg.sections_.push_back(resolve(command, cmd, schemas.at(command)));
  validate_values(cfg.sections_.back(), schemas.at(command));
  cfg.start();  // validates the start point
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), command);
}

const DrivingMeasure& ExperimentConfig::measure() const {
  if (!measure_) throw ConfigError("config has no driving measure");
  return *measure_;
}

void ExperimentConfig::override_seeds(std::vector<std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("seeds: empty list");
  seeds_ = std::move(seeds);
  std::ostringstream os;
  for (std::size_t i = 0; i < seeds_.size(); ++i) os << (i ? ", " : "") << seeds_[i];
  for (auto& [k, v] : sections_.front().entries) {
    if (k == "seeds") v = os.str();
  }
}

StartPoint ExperimentConfig::start() const {
  const std::string text = get("experiment", "start");
  const auto w = words(text);
  if (w.size() != 2) throw ConfigError("[experiment] start: expected two coordinates");
  const bool fx = w[0].find('/') != std::string::npos, fy = w[1].find('/') != std::string::npos;
  if (!fx && !fy) return TorusPoint(to_double(w[0], "[experiment] start"), to_double(w[1], "[experiment] start"));
  const auto frac = [](const std::string& s) -> std::pair<long long, long long> {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return {to_int(s, "[experiment] start"), 1};
    const long long den = to_int(s.substr(slash + 1), "[experiment] start");
    if (den <= 0) throw ConfigError("[experiment] start: denominator must be positive");
    return {to_int(s.substr(0, slash), "[experiment] start"), den};
  };
  const auto [px, qx] = frac(w[0]);
  const auto [py, qy] = frac(w[1]);
  const long long den = std::lcm(qx, qy);
  return normalized(RationalPoint{px * (den / qx), py * (den / qy), den});
}

TorusPoint ExperimentConfig::start_point() const {
  const auto s = start();
  if (const auto* r = std::get_if<RationalPoint>(&s)) return r->to_point();
  return std::get<TorusPoint>(s);
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  for (const auto& sec : sections_) {
    os << '[' << sec.name << "]\n";
    for (const auto& [k, v] : sec.entries) os << k << " = " << v << '\n';
  }
  return os.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical_text())); }

std::string ExperimentConfig::get(const std::string& section, const std::string& key) const {
  for (const auto& sec : sections_) {
    if (sec.name == section) return lookup(sec, key);
  }
  throw ConfigError("config: no section [" + section + "]");
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key) const {
  return to_double(get(section, key), "[" + section + "] " + key);
}

std::size_t ExperimentConfig::get_size(const std::string& section, const std::string& key) const {
  const long long v = to_int(get(section, key), "[" + section + "] " + key);
  if (v < 0) throw ConfigError("[" + section + "] " + key + ": must be >= 0");
  return std::size_t(v);
}

bool ExperimentConfig::get_bool(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected true or false, got '" + v + "'");
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& section, const std::string& key) const {
  std::string t = get(section, key);
  std::replace(t.begin(), t.end(), ',', ' ');
  std::vector<double> out;
  for (const auto& w : words(t)) out.push_back(to_double(w, "[" + section + "] " + key));
  return out;
}

std::optional<double> ExperimentConfig::get_optional_double(const std::string& section, const std::string& key) const {
  if (get(section, key).empty()) return std::nullopt;
  return get_double(section, key);
}

Family ExperimentConfig::with_epsilon(double eps) const {
  Family out;
  for (const auto& sec : sections_) {
    if (sec.name.rfind("map:", 0) == 0) out.push_back(build_map(sec, eps));
  }
  return out;
}

}  // namespace ergolab
