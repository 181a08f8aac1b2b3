#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skytrust/digest.hpp"
#include "skytrust/errors.hpp"
#include "skytrust/fed.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

enum class Method { Dtsam, Cte, Sbst };
enum class TopologyKind { Mesh, Star };

inline const char *to_string(Method m) {
  switch (m) {
  case Method::Dtsam: return "dtsam";
  case Method::Cte: return "cte";
  case Method::Sbst: return "sbst";
  }
  return "?";
}

inline Method method_from_string(const std::string &s) {
  if (s == "dtsam") return Method::Dtsam;
  if (s == "cte") return Method::Cte;
  if (s == "sbst") return Method::Sbst;
  throw ConfigError("method", "expected dtsam, cte or sbst, got '" + s + "'");
}

/// Behaviour a UAV exhibits while it follows this profile.
struct BehaviorProfile {
  std::array<double, 2> pdr{0.85, 1.0};
  std::array<double, 2> rt_ms{5.0, 60.0};
  bool poison_updates = false;
};

struct EnergyConfig {
  double capacity = 100.0;
  double base_drain = 0.5;           ///< per UAV per round; not billed to any protocol
  double tx_cost_per_kb = 0.001;     ///< mesh transmission
  double validation_cost = 2.0;      ///< fixed part of validating one block
  double verify_cost_per_kb = 0.1;   ///< plus this per KB of block
  double discharge_penalty = 0.5;    ///< validation costs (1 + penalty * (1 - battery fraction)) times more
  double uplink_message_cost = 0.2;  ///< per long-haul upload to a central server
  double uplink_cost_per_kb = 0.005;
  double joules_per_unit = 1.0;
};

struct ScenarioConfig {
  Method method = Method::Dtsam;
  std::uint64_t seed = 1;

  // world
  std::size_t uav_count = 20;
  double rogue_fraction = 0.2;
  std::size_t user_count = 40;
  double area_km = 2.0;
  std::uint64_t rounds = 100;
  double max_speed_km = 0.1; ///< per round
  TopologyKind topology = TopologyKind::Mesh;
  double mesh_radius_km = 0.8;
  std::uint32_t star_hub = 0;

  // trust
  TrustWeights trust_weights;
  BehaviorWeights behavior_weights;
  double rt_max_ms = 100.0;
  double initial_trust = 0.5;
  double neutral_behavior = 0.5;
  double rogue_threshold = 0.4;

  // behaviour
  BehaviorProfile honest{};
  BehaviorProfile rogue{{0.2, 0.6}, {60.0, 200.0}, true};
  /// Share of rogues that behave honestly until a round drawn from compromise_window.
  double late_compromise_fraction = 0.5;
  std::array<std::uint64_t, 2> compromise_window{20, 60};
  double poison_boost = 6.0;

  EnergyConfig energy;

  // accounting
  std::size_t envelope_bytes = 256;
  std::size_t record_bytes = 64;

  // federated learning
  TrainingHyper hyper;
  double epsilon = 0.01;
  std::uint64_t max_fl_rounds = 50;
  std::uint64_t audit_delay = 2;
  AggregationMode aggregation = AggregationMode::TrustWeighted;
  std::size_t validation_samples = 200; ///< per class
  unsigned threads = 1;

  double sbst_pdr_threshold = 0.7;

  std::size_t rogue_count() const {
    return static_cast<std::size_t>(std::llround(rogue_fraction * static_cast<double>(uav_count)));
  }
};

namespace detail {

using json = nlohmann::ordered_json;

inline std::string join_path(const std::string &base, const std::string &key) {
  return base.empty() ? key : base + "." + key;
}

/// Reads a config object, remembering which keys were consumed so leftovers can be rejected.
class ConfigReader {
public:
  ConfigReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <typename T> void field(const std::string &key, T &out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto path = join_path(path_, key);
    try {
      read(j_.at(key), out, path);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(path, e.what());
    }
  }

  void group(const std::string &key, const std::function<void(ConfigReader &)> &body) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    ConfigReader sub(j_.at(key), join_path(path_, key));
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto &[k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(join_path(path_, k), "unknown key");
    }
  }

private:
  static void read(const json &v, double &out, const std::string &path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    out = v.get<double>();
  }
  static void read(const json &v, bool &out, const std::string &path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    out = v.get<bool>();
  }
  template <typename U>
    requires std::is_unsigned_v<U>
  static void read(const json &v, U &out, const std::string &path) {
    if (!v.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
    out = v.get<U>();
  }
  static void read(const json &v, int &out, const std::string &path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    out = v.get<int>();
  }
  template <typename U, std::size_t N>
  static void read(const json &v, std::array<U, N> &out, const std::string &path) {
    if (!v.is_array() || v.size() != N) throw ConfigError(path, "expected an array of " + std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) read(v[i], out[i], path + "[" + std::to_string(i) + "]");
  }
  static void read(const json &v, Method &out, const std::string &path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    try {
      out = method_from_string(v.get<std::string>());
    } catch (const ConfigError &e) {
      throw ConfigError(path, "expected dtsam, cte or sbst");
    }
  }
  static void read(const json &v, TopologyKind &out, const std::string &path) {
    const auto s = v.is_string() ? v.get<std::string>() : "";
    if (s == "mesh") out = TopologyKind::Mesh;
    else if (s == "star") out = TopologyKind::Star;
    else throw ConfigError(path, "expected mesh or star");
  }
  static void read(const json &v, AggregationMode &out, const std::string &path) {
    const auto s = v.is_string() ? v.get<std::string>() : "";
    if (s == "fedavg") out = AggregationMode::FedAvg;
    else if (s == "trust_weighted") out = AggregationMode::TrustWeighted;
    else throw ConfigError(path, "expected fedavg or trust_weighted");
  }

  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

class ConfigWriter {
public:
  template <typename T> void field(const std::string &key, T &v) { j_[key] = write(v); }

  void group(const std::string &key, const std::function<void(ConfigWriter &)> &body) {
    ConfigWriter sub;
    body(sub);
    j_[key] = std::move(sub.j_);
  }

  json take() && { return std::move(j_); }

private:
  template <typename T> static json write(const T &v) { return v; }
  static json write(Method m) { return to_string(m); }
  static json write(TopologyKind t) { return t == TopologyKind::Mesh ? "mesh" : "star"; }
  static json write(AggregationMode a) { return a == AggregationMode::FedAvg ? "fedavg" : "trust_weighted"; }

  json j_ = json::object();
};

template <typename V> void visit_profile(V &v, BehaviorProfile &p) {
  v.field("pdr", p.pdr);
  v.field("rt_ms", p.rt_ms);
  v.field("poison_updates", p.poison_updates);
}

/// Single description of the JSON layout, shared by reading and writing.
template <typename V> void visit_config(V &v, ScenarioConfig &c) {
  v.field("method", c.method);
  v.field("seed", c.seed);
  v.group("world", [&](V &w) {
    w.field("uav_count", c.uav_count);
    w.field("rogue_fraction", c.rogue_fraction);
    w.field("user_count", c.user_count);
    w.field("area_km", c.area_km);
    w.field("rounds", c.rounds);
    w.field("max_speed_km", c.max_speed_km);
    w.group("topology", [&](V &t) {
      t.field("kind", c.topology);
      t.field("radius_km", c.mesh_radius_km);
      t.field("hub", c.star_hub);
    });
  });
  v.group("trust", [&](V &t) {
    t.field("alpha", c.trust_weights.alpha);
    t.field("beta", c.trust_weights.beta);
    t.field("gamma", c.trust_weights.gamma);
    t.field("w1", c.behavior_weights.w1);
    t.field("w2", c.behavior_weights.w2);
    t.field("rt_max_ms", c.rt_max_ms);
    t.field("initial", c.initial_trust);
    t.field("neutral_behavior", c.neutral_behavior);
    t.field("threshold", c.rogue_threshold);
  });
  v.group("behavior", [&](V &b) {
    b.group("honest", [&](V &p) { visit_profile(p, c.honest); });
    b.group("rogue", [&](V &p) { visit_profile(p, c.rogue); });
    b.field("late_compromise_fraction", c.late_compromise_fraction);
    b.field("compromise_window", c.compromise_window);
    b.field("poison_boost", c.poison_boost);
  });
  v.group("energy", [&](V &e) {
    e.field("capacity", c.energy.capacity);
    e.field("base_drain", c.energy.base_drain);
    e.field("tx_cost_per_kb", c.energy.tx_cost_per_kb);
    e.field("validation_cost", c.energy.validation_cost);
    e.field("verify_cost_per_kb", c.energy.verify_cost_per_kb);
    e.field("discharge_penalty", c.energy.discharge_penalty);
    e.field("uplink_message_cost", c.energy.uplink_message_cost);
    e.field("uplink_cost_per_kb", c.energy.uplink_cost_per_kb);
    e.field("joules_per_unit", c.energy.joules_per_unit);
  });
  v.group("accounting", [&](V &a) {
    a.field("envelope_bytes", c.envelope_bytes);
    a.field("record_bytes", c.record_bytes);
  });
  v.group("fl", [&](V &f) {
    f.field("learning_rate", c.hyper.learning_rate);
    f.field("epochs", c.hyper.epochs);
    f.field("epsilon", c.epsilon);
    f.field("max_rounds", c.max_fl_rounds);
    f.field("audit_delay", c.audit_delay);
    f.field("aggregation", c.aggregation);
    f.field("validation_samples", c.validation_samples);
    f.field("threads", c.threads);
  });
  v.group("sbst", [&](V &s) { s.field("pdr_threshold", c.sbst_pdr_threshold); });
}

inline void require(bool ok, const std::string &path, const std::string &why) {
  if (!ok) throw ConfigError(path, why);
}

inline void validate_profile(const BehaviorProfile &p, const std::string &path) {
  require(0.0 <= p.pdr[0] && p.pdr[0] <= p.pdr[1] && p.pdr[1] <= 1.0, path + ".pdr",
          "need 0 <= low <= high <= 1");
  require(0.0 <= p.rt_ms[0] && p.rt_ms[0] <= p.rt_ms[1], path + ".rt_ms", "need 0 <= low <= high");
}

} // namespace detail

inline void validate(const ScenarioConfig &c) {
  using detail::require;
  require(c.uav_count >= 1, "world.uav_count", "need at least one UAV");
  require(c.rogue_fraction >= 0.0 && c.rogue_fraction < 1.0, "world.rogue_fraction", "must lie in [0, 1)");
  require(c.area_km > 0.0, "world.area_km", "must be positive");
  require(c.rounds >= 1, "world.rounds", "need at least one round");
  require(c.max_speed_km >= 0.0, "world.max_speed_km", "must be non-negative");
  require(c.mesh_radius_km >= 0.0, "world.topology.radius_km", "must be non-negative");
  require(c.topology == TopologyKind::Mesh || c.star_hub < c.uav_count, "world.topology.hub",
          "hub must name one of the UAVs");
  try {
    c.trust_weights.validate();
  } catch (const DomainError &e) {
    throw ConfigError("trust", e.what());
  }
  try {
    c.behavior_weights.validate();
  } catch (const DomainError &e) {
    throw ConfigError("trust", e.what());
  }
  require(c.rt_max_ms > 0.0, "trust.rt_max_ms", "must be positive");
  require(c.initial_trust >= 0.0 && c.initial_trust <= 1.0, "trust.initial", "must lie in [0, 1]");
  require(c.neutral_behavior >= 0.0 && c.neutral_behavior <= 1.0, "trust.neutral_behavior", "must lie in [0, 1]");
  require(c.rogue_threshold >= 0.0 && c.rogue_threshold <= 1.0, "trust.threshold", "must lie in [0, 1]");
  detail::validate_profile(c.honest, "behavior.honest");
  detail::validate_profile(c.rogue, "behavior.rogue");
  require(c.late_compromise_fraction >= 0.0 && c.late_compromise_fraction <= 1.0,
          "behavior.late_compromise_fraction", "must lie in [0, 1]");
  require(c.compromise_window[0] >= 1 && c.compromise_window[0] <= c.compromise_window[1],
          "behavior.compromise_window", "need 1 <= first <= last");
  require(c.poison_boost >= 0.0, "behavior.poison_boost", "must be non-negative");
  require(c.energy.capacity > 0.0, "energy.capacity", "must be positive");
  const std::pair<const char *, double> costs[] = {
      {"base_drain", c.energy.base_drain},
      {"tx_cost_per_kb", c.energy.tx_cost_per_kb},
      {"validation_cost", c.energy.validation_cost},
      {"verify_cost_per_kb", c.energy.verify_cost_per_kb},
      {"discharge_penalty", c.energy.discharge_penalty},
      {"uplink_message_cost", c.energy.uplink_message_cost},
      {"uplink_cost_per_kb", c.energy.uplink_cost_per_kb},
      {"joules_per_unit", c.energy.joules_per_unit},
  };
  for (const auto &[k, v] : costs) require(v >= 0.0, std::string("energy.") + k, "must be non-negative");
  require(c.hyper.learning_rate > 0.0, "fl.learning_rate", "must be positive");
  require(c.hyper.epochs >= 0, "fl.epochs", "must be non-negative");
  require(c.epsilon > 0.0, "fl.epsilon", "must be positive");
  require(c.max_fl_rounds >= 1, "fl.max_rounds", "must be at least 1");
  require(c.validation_samples >= 1, "fl.validation_samples", "must be at least 1");
  require(c.threads >= 1, "fl.threads", "must be at least 1");
  require(c.sbst_pdr_threshold >= 0.0 && c.sbst_pdr_threshold <= 1.0, "sbst.pdr_threshold", "must lie in [0, 1]");
}

/// Every field, defaults included, so a run's summary fully describes it.
inline nlohmann::ordered_json to_json(const ScenarioConfig &c) {
  ScenarioConfig copy = c;
  detail::ConfigWriter w;
  detail::visit_config(w, copy);
  return std::move(w).take();
}

// ---------------------------------------------------------------------------
// Named scenarios

struct Preset {
  std::string name;
  std::string description;
  ScenarioConfig config;
};

inline std::vector<Preset> presets() {
  std::vector<Preset> out;

  out.push_back({"desk-default", "20 UAVs (4 rogue), 40 users, 2x2 km mesh, 100 rounds", ScenarioConfig{}});

  ScenarioConfig paper;
  paper.uav_count = 50;
  paper.user_count = 100;
  paper.area_km = 5.0;
  paper.mesh_radius_km = 1.0;
  paper.max_speed_km = 0.2;
  out.push_back({"paper-scale", "50 UAVs (10 rogue), 100 users, 5x5 km mesh, 100 rounds", paper});

  ScenarioConfig star;
  star.uav_count = 12;
  star.user_count = 24;
  star.area_km = 3.0;
  star.topology = TopologyKind::Star;
  star.star_hub = 0;
  out.push_back({"star-sparse", "12 UAVs around one hub, 3x3 km, 100 rounds", star});

  ScenarioConfig dense;
  dense.uav_count = 30;
  dense.user_count = 60;
  dense.area_km = 1.5;
  dense.mesh_radius_km = 0.8;
  out.push_back({"mesh-dense", "30 UAVs (6 rogue) packed into 1.5x1.5 km mesh, 100 rounds", dense});

  return out;
}

inline ScenarioConfig preset(const std::string &name) {
  for (auto &p : presets()) {
    if (p.name == name) return p.config;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

/// Parses a config document. An optional top-level "preset" names the base
/// scenario; every other key overrides it. Unknown keys are rejected.
inline ScenarioConfig config_from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  detail::json j = detail::json::parse(doc.dump());
  ScenarioConfig c;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("preset", "expected a string");
    c = preset(j["preset"].get<std::string>());
    j.erase("preset");
  }
  detail::ConfigReader r(j, "");
  detail::visit_config(r, c);
  r.finish();
  validate(c);
  return c;
}

inline ScenarioConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("<file>", path + ": " + e.what());
  }
  return config_from_json(doc);
}

/// Applies "dotted.key.path=value" overrides; values parse as JSON, falling back to a string.
/// All assignments land before validation, so coupled keys (e.g. weights that must sum to 1) can change together.
inline ScenarioConfig apply_overrides(const ScenarioConfig &c, std::span<const std::string> assignments) {
  nlohmann::json j = nlohmann::json::parse(to_json(c).dump());
  for (const auto &assignment : assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key.path=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception &) {
      value = raw;
    }
    nlohmann::json *node = &j;
    std::stringstream ss(key);
    std::vector<std::string> parts;
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->is_object() || !node->contains(parts[i])) throw ConfigError(key, "unknown key");
      node = &(*node)[parts[i]];
    }
    if (!node->is_object() || !node->contains(parts.back())) throw ConfigError(key, "unknown key");
    (*node)[parts.back()] = value;
  }
  return config_from_json(j);
}

inline ScenarioConfig apply_override(const ScenarioConfig &c, const std::string &assignment) {
  return apply_overrides(c, std::span(&assignment, 1));
}

/// Short stable identifier of a fully materialised config (seed included).
inline std::string run_id(const ScenarioConfig &c) {
  const auto text = to_json(c).dump();
  const auto d = sha256(std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
  return to_string(c.method) + std::string("-s") + std::to_string(c.seed) + "-" + to_hex(d).substr(0, 12);
}

} // namespace skytrust
