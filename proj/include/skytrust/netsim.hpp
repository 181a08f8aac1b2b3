#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "skytrust/config.hpp"
#include "skytrust/consensus.hpp"
#include "skytrust/errors.hpp"
#include "skytrust/fed.hpp"
#include "skytrust/rng.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

enum class ProfileKind { Honest, Rogue };

struct UavProfile {
  UavId id{};
  ProfileKind kind = ProfileKind::Honest;
  std::array<double, 2> pdr_range{0.85, 1.0};
  std::array<double, 2> rt_range{5.0, 60.0}; ///< ms
  bool poison_updates = false;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position &, const Position &) = default;
};

struct UavNode {
  UavProfile profile;         ///< behaviour from `profile_from` on
  UavProfile cover;           ///< behaviour before `profile_from` (a not-yet-compromised rogue)
  Round profile_from = 0;
  Position position;
  EnergyState energy;
  TrustState trust;

  const UavProfile &active(Round r) const { return r >= profile_from ? profile : cover; }
  bool rogue_at(Round r) const { return active(r).kind == ProfileKind::Rogue; }
};

struct MeshTopology {
  double radius_km = 0.8;
};
struct StarTopology {
  std::size_t hub = 0;
};
using Topology = std::variant<MeshTopology, StarTopology>;

struct WorldState {
  Round round = 0;
  std::vector<UavNode> uavs;
  std::size_t users = 0; ///< ground users; load context only
  Topology topology = MeshTopology{};
  double side_km = 2.0;

  std::size_t size() const noexcept { return uavs.size(); }
};

using Edge = std::pair<UavId, UavId>; ///< first < second

inline UavProfile make_profile(UavId id, ProfileKind kind, const BehaviorProfile &b) {
  return {id, kind, b.pdr, b.rt_ms, b.poison_updates};
}

/// Places UAVs uniformly, picks the rogues and their compromise rounds.
inline WorldState build_world(const ScenarioConfig &c, Rng &rng) {
  WorldState w;
  w.users = c.user_count;
  w.side_km = c.area_km;
  if (c.topology == TopologyKind::Mesh) w.topology = MeshTopology{c.mesh_radius_km};
  else w.topology = StarTopology{c.star_hub};

  const std::size_t n = c.uav_count;
  for (std::size_t i = 0; i < n; ++i) {
    UavNode u;
    u.profile = make_profile(uav_at(i), ProfileKind::Honest, c.honest);
    u.cover = u.profile;
    u.position = {rng.uniform(0.0, c.area_km), rng.uniform(0.0, c.area_km)};
    u.energy = {c.energy.capacity, c.energy.capacity};
    u.trust = TrustState(uav_at(i), c.initial_trust);
    w.uavs.push_back(std::move(u));
  }

  // Partial Fisher-Yates: the first `rogues` entries of `order` are the rogue ids.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const std::size_t rogues = std::min(c.rogue_count(), n);
  for (std::size_t k = 0; k < rogues; ++k) std::swap(order[k], order[k + rng.below(n - k)]);
  const auto late = static_cast<std::size_t>(std::llround(c.late_compromise_fraction * static_cast<double>(rogues)));
  const auto span = c.compromise_window[1] - c.compromise_window[0] + 1;
  for (std::size_t k = 0; k < rogues; ++k) {
    auto &u = w.uavs[order[k]];
    u.profile = make_profile(uav_at(order[k]), ProfileKind::Rogue, c.rogue);
    u.profile_from = k < late ? c.compromise_window[0] + rng.below(span) : 0;
  }
  return w;
}

inline double distance(const Position &a, const Position &b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Mesh: edge iff within radius. Star: hub to every leaf.
inline std::vector<Edge> build_topology(const WorldState &w) {
  if (w.uavs.empty()) throw DomainError("topology needs at least one UAV");
  std::vector<Edge> edges;
  const std::size_t n = w.size();
  if (const auto *star = std::get_if<StarTopology>(&w.topology)) {
    if (star->hub >= n) throw InvalidHub(star->hub);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == star->hub) continue;
      edges.emplace_back(uav_at(std::min(i, star->hub)), uav_at(std::max(i, star->hub)));
    }
    return edges;
  }
  const double r = std::get<MeshTopology>(w.topology).radius_km;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(w.uavs[i].position, w.uavs[j].position) <= r) edges.emplace_back(uav_at(i), uav_at(j));
    }
  }
  return edges;
}

namespace detail {

/// Mirror `v` back into [0, side].
inline double reflect(double v, double side) {
  if (side <= 0.0) return 0.0;
  const double period = 2.0 * side;
  v = std::fmod(v, period);
  if (v < 0.0) v += period;
  return v > side ? period - v : v;
}

} // namespace detail

/// Random heading, speed uniform in [0, max_speed]; reflected at the area boundary.
inline WorldState step_mobility(WorldState w, double max_speed_km, Rng &rng) {
  for (auto &u : w.uavs) {
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = rng.uniform(0.0, max_speed_km);
    u.position.x = detail::reflect(u.position.x + speed * std::cos(heading), w.side_km);
    u.position.y = detail::reflect(u.position.y + speed * std::sin(heading), w.side_km);
  }
  return w;
}

/// For each edge and each direction the observer samples the subject's active profile.
inline std::vector<InteractionRecord> generate_interactions(const WorldState &w, std::span<const Edge> edges,
                                                            Rng &rng) {
  std::vector<InteractionRecord> out;
  out.reserve(edges.size() * 2);
  auto draw = [&](UavId observer, UavId subject) {
    const auto &p = w.uavs.at(index_of(subject)).active(w.round);
    InteractionRecord r;
    r.observer = observer;
    r.subject = subject;
    r.pdr = rng.uniform(p.pdr_range[0], p.pdr_range[1]);
    r.response_time = rng.uniform(p.rt_range[0], p.rt_range[1]);
    r.round = w.round;
    out.push_back(r);
  };
  for (const auto &[a, b] : edges) {
    draw(a, b);
    draw(b, a);
  }
  return out;
}

/// remaining := max(0, remaining - base_drain - activity[i]). Returns what was actually removed per UAV.
inline std::vector<double> deplete_energy(WorldState &w, std::span<const double> activity, double base_drain) {
  if (!activity.empty() && activity.size() != w.size()) throw DomainError("one activity cost per UAV expected");
  if (!(base_drain >= 0.0)) throw DomainError("base drain must be non-negative");
  std::vector<double> removed(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = activity.empty() ? 0.0 : activity[i];
    if (!(a >= 0.0)) throw DomainError("activity costs must be non-negative");
    const auto r = energy_charge(w.uavs[i].energy, base_drain + a);
    w.uavs[i].energy = r.state;
    removed[i] = r.charged;
  }
  return removed;
}

// ---------------------------------------------------------------------------
// Features and labels

/// Number of records about each UAV in `records`.
inline std::vector<std::size_t> observation_counts(std::size_t n, std::span<const InteractionRecord> records) {
  std::vector<std::size_t> c(n, 0);
  for (const auto &r : records) ++c.at(index_of(r.subject));
  return c;
}

inline double interaction_rate(std::size_t count, std::size_t n) {
  return n <= 1 ? 0.0 : std::min(1.0, static_cast<double>(count) / static_cast<double>(n - 1));
}

/// Features of a single observation, as a training sample sees it.
inline FeatureVector record_features(const InteractionRecord &r, const WorldState &w, std::size_t subject_count,
                                     double rt_max) {
  return {r.pdr, std::min(r.response_time, rt_max) / rt_max, energy_score(w.uavs.at(index_of(r.subject)).energy),
          interaction_rate(subject_count, w.size())};
}

/// Per-UAV features averaged over this round's records about it; empty when unobserved.
inline std::vector<std::optional<FeatureVector>> subject_features(const WorldState &w,
                                                                  std::span<const InteractionRecord> records,
                                                                  double rt_max) {
  const std::size_t n = w.size();
  std::vector<double> pdr(n, 0.0), rt(n, 0.0);
  const auto counts = observation_counts(n, records);
  for (const auto &r : records) {
    pdr[index_of(r.subject)] += r.pdr;
    rt[index_of(r.subject)] += r.response_time;
  }
  std::vector<std::optional<FeatureVector>> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (counts[j] == 0) continue;
    const double k = static_cast<double>(counts[j]);
    out[j] = FeatureVector{pdr[j] / k, std::min(rt[j] / k, rt_max) / rt_max, energy_score(w.uavs[j].energy),
                           interaction_rate(counts[j], n)};
  }
  return out;
}

struct LabeledExample {
  UavId observer{};
  Round round = 0;
  Sample sample;
};

/// Delayed ground-truth oracle. Observations are labelled with the subject's
/// true status when they happen and handed to the observer `audit_delay`
/// rounds later.
class AuditQueue {
public:
  explicit AuditQueue(Round audit_delay) : delay_(audit_delay) {}

  void observe(const WorldState &w, std::span<const InteractionRecord> records, double rt_max) {
    const auto counts = observation_counts(w.size(), records);
    for (const auto &r : records) {
      const auto x = record_features(r, w, counts[index_of(r.subject)], rt_max);
      const int label = w.uavs.at(index_of(r.subject)).rogue_at(r.round) ? 1 : 0;
      pending_.push_back({r.observer, r.round, {x, label}});
    }
  }

  /// Everything observed at or before `now - audit_delay`, in observation order.
  std::vector<LabeledExample> release(Round now) {
    std::vector<LabeledExample> out;
    while (!pending_.empty() && pending_.front().round + delay_ <= now) {
      out.push_back(pending_.front());
      pending_.pop_front();
    }
    return out;
  }

  std::size_t pending() const noexcept { return pending_.size(); }

private:
  Round delay_;
  std::deque<LabeledExample> pending_;
};

/// Labels `records` against the world's ground truth and returns those whose
/// round is at least `audit_delay` old at `world.round`.
inline std::vector<LabeledExample> ground_truth_labels(const WorldState &w, std::span<const InteractionRecord> records,
                                                       Round audit_delay, double rt_max) {
  AuditQueue q(audit_delay);
  q.observe(w, records, rt_max);
  return q.release(w.round);
}

/// Synthetic balanced feature set drawn from the two profiles, for measuring model accuracy.
inline std::vector<Sample> validation_set(const ScenarioConfig &c, Rng &rng) {
  std::vector<Sample> out;
  auto draw = [&](const BehaviorProfile &p, int label) {
    const double pdr = rng.uniform(p.pdr[0], p.pdr[1]);
    const double rt = rng.uniform(p.rt_ms[0], p.rt_ms[1]);
    const double energy = rng.uniform(0.3, 1.0);
    const double rate = rng.uniform(0.2, 0.5);
    out.push_back({{pdr, std::min(rt, c.rt_max_ms) / c.rt_max_ms, energy, rate}, label});
  };
  for (std::size_t k = 0; k < c.validation_samples; ++k) {
    draw(c.honest, 0);
    draw(c.rogue, 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace export

inline void write_trace_header(std::ostream &out) { out << "round,uav,x_km,y_km,energy,trust,rogue\n"; }

inline void write_trace_rows(std::ostream &out, const WorldState &w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto &u = w.uavs[i];
    out << w.round << ',' << i << ',' << u.position.x << ',' << u.position.y << ',' << u.energy.remaining << ','
        << u.trust.score() << ',' << (u.rogue_at(w.round) ? 1 : 0) << '\n';
  }
}

} // namespace skytrust
