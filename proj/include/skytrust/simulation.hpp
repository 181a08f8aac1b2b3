#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "skytrust/config.hpp"
#include "skytrust/consensus.hpp"
#include "skytrust/fed.hpp"
#include "skytrust/ledger.hpp"
#include "skytrust/metrics.hpp"
#include "skytrust/netsim.hpp"
#include "skytrust/rng.hpp"

namespace skytrust {

/// Independent random streams derived from the run seed.
enum class Stream : std::uint64_t { World = 0, Consensus = 1, Validation = 2 };

/// Everything a finished run produced.
struct RunResult {
  ScenarioConfig config;
  MetricsReport report;
  std::optional<Ledger> ledger;
  double energy_removed = 0.0;     ///< units taken from batteries over the run, base drain included
  double base_drain_removed = 0.0; ///< the part of energy_removed that no protocol is billed for
};

/// The world every method shares: mobility, interactions, base drain and the
/// delayed label oracle. It owns the world stream, so runs of different
/// methods from the same (config, seed) see identical interactions and labels.
class WorldDriver {
public:
  explicit WorldDriver(const ScenarioConfig &c)
      : cfg_(c), rng_(Rng::derive(c.seed, static_cast<std::uint64_t>(Stream::World))), world_(build_world(c, rng_)),
        audit_(c.audit_delay), datasets_(c.uav_count), observed_(c.uav_count, 0) {
    for (std::size_t i = 0; i < c.uav_count; ++i) datasets_[i].owner = uav_at(i);
    initial_energy_ = total_energy();
  }

  /// Advances one round and leaves this round's records, features and newly released labels in place.
  void step() {
    world_.round += 1;
    world_ = step_mobility(std::move(world_), cfg_.max_speed_km, rng_);
    edges_ = build_topology(world_);
    records_ = generate_interactions(world_, edges_, rng_);
    for (double d : deplete_energy(world_, {}, cfg_.energy.base_drain)) base_drain_removed_ += d;
    audit_.observe(world_, records_, cfg_.rt_max_ms);
    for (auto &ex : audit_.release(world_.round)) datasets_[index_of(ex.observer)].samples.push_back(ex.sample);
    features_ = subject_features(world_, records_, cfg_.rt_max_ms);
    by_subject_.assign(world_.size(), {});
    for (const auto &r : records_) {
      by_subject_[index_of(r.subject)].push_back(r);
      ++observed_[index_of(r.observer)];
    }
  }

  /// Bills protocol energy to one UAV; returns what was actually removed.
  double charge(UavId uav, double units) {
    auto &e = world_.uavs.at(index_of(uav)).energy;
    const auto r = energy_charge(e, units);
    e = r.state;
    protocol_units_ += r.charged;
    return r.charged;
  }

  double transmission_cost(std::size_t bytes) const {
    return static_cast<double>(bytes) / 1000.0 * cfg_.energy.tx_cost_per_kb;
  }

  /// Cost of validating a block of `bytes`, scaled up for a drained validator.
  double validation_cost(UavId validator, std::size_t bytes) const {
    const double frac = energy_score(world_.uavs.at(index_of(validator)).energy);
    const double base = cfg_.energy.validation_cost + cfg_.energy.verify_cost_per_kb * static_cast<double>(bytes) / 1000.0;
    return base * (1.0 + cfg_.energy.discharge_penalty * (1.0 - frac));
  }

  std::vector<int> truth() const {
    std::vector<int> t(world_.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = world_.uavs[i].rogue_at(world_.round) ? 1 : 0;
    return t;
  }

  /// Appends the per-round accuracy and detection figures for `flags` (1 = flagged rogue).
  RoundMetrics score_round(const std::vector<int> &flags) const {
    RoundMetrics m;
    m.round = world_.round;
    const auto t = truth();
    m.accuracy = accuracy(flags, t);
    std::set<UavId> flagged, rogues;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (flags[i]) flagged.insert(uav_at(i));
      if (t[i]) rogues.insert(uav_at(i));
    }
    if (!rogues.empty()) m.detection_rate = detection_rate(flagged, rogues);
    m.flagged.assign(flagged.begin(), flagged.end());
    m.rogues.assign(rogues.begin(), rogues.end());
    m.energy_j = protocol_units_ * cfg_.energy.joules_per_unit;
    return m;
  }

  double total_energy() const {
    double s = 0.0;
    for (const auto &u : world_.uavs) s += u.energy.remaining;
    return s;
  }

  void finish(RunResult &r) const {
    r.energy_removed = initial_energy_ - total_energy();
    r.base_drain_removed = base_drain_removed_;
  }

  const ScenarioConfig &config() const noexcept { return cfg_; }
  WorldState &world() noexcept { return world_; }
  const WorldState &world() const noexcept { return world_; }
  const std::vector<InteractionRecord> &records() const noexcept { return records_; }
  const std::vector<InteractionRecord> &records_about(std::size_t j) const { return by_subject_.at(j); }
  const std::vector<std::optional<FeatureVector>> &features() const noexcept { return features_; }
  const std::vector<LocalDataset> &datasets() const noexcept { return datasets_; }
  /// Raw records each UAV has observed so far, labelled or not.
  const std::vector<std::size_t> &observed() const noexcept { return observed_; }
  double protocol_units() const noexcept { return protocol_units_; }

private:
  ScenarioConfig cfg_;
  Rng rng_;
  WorldState world_;
  AuditQueue audit_;
  std::vector<LocalDataset> datasets_;
  std::vector<std::size_t> observed_;
  std::vector<Edge> edges_;
  std::vector<InteractionRecord> records_;
  std::vector<std::vector<InteractionRecord>> by_subject_;
  std::vector<std::optional<FeatureVector>> features_;
  double protocol_units_ = 0.0;
  double base_drain_removed_ = 0.0;
  double initial_energy_ = 0.0;
};

/// Share of the validation set a model gets right, flagging rogue when
/// the model's trust estimate 1 - p falls below `threshold`.
inline double model_accuracy(const ModelParams &p, std::span<const Sample> validation, double threshold) {
  std::size_t hit = 0;
  for (const auto &s : validation) {
    const int flagged = (1.0 - predict(p, s.x)) < threshold ? 1 : 0;
    hit += flagged == s.label;
  }
  return static_cast<double>(hit) / static_cast<double>(validation.size());
}

/// Canonical payload of a TrustUpdate: trust, behaviour and energy as big-endian doubles.
inline std::vector<std::uint8_t> trust_update_payload(double trust, double behavior, double energy) {
  ByteWriter w;
  w.f64(trust);
  w.f64(behavior);
  w.f64(energy);
  return std::move(w).take();
}

inline std::vector<std::uint8_t> model_digest_payload(const ModelParams &p) {
  const auto d = sha256(p.serialize());
  return {d.begin(), d.end()};
}

} // namespace skytrust
