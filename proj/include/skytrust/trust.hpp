#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skytrust/errors.hpp"

namespace skytrust {

enum class UavId : std::uint32_t {};

constexpr std::size_t index_of(UavId id) noexcept { return static_cast<std::size_t>(id); }
constexpr UavId uav_at(std::size_t i) noexcept { return static_cast<UavId>(i); }

/// Simulation time step.
using Round = std::uint64_t;

namespace detail {

inline constexpr double kWeightTolerance = 1e-9;

inline void require_unit(double v, const char *what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " must lie in [0, 1]");
}

} // namespace detail

/// Weights on history, behaviour and energy in the trust update.
struct TrustWeights {
  double alpha = 0.5;
  double beta = 0.45;
  double gamma = 0.05;

  void validate() const {
    detail::require_unit(alpha, "alpha");
    detail::require_unit(beta, "beta");
    detail::require_unit(gamma, "gamma");
    if (std::abs(alpha + beta + gamma - 1.0) > detail::kWeightTolerance) {
      throw DomainError("trust weights must sum to 1");
    }
  }
};

/// Weights on delivery ratio and response time in the behaviour score.
struct BehaviorWeights {
  double w1 = 0.6;
  double w2 = 0.4;

  void validate() const {
    detail::require_unit(w1, "w1");
    detail::require_unit(w2, "w2");
    if (std::abs(w1 + w2 - 1.0) > detail::kWeightTolerance) {
      throw DomainError("behaviour weights must sum to 1");
    }
  }
};

/// One observed exchange: `observer` measured `subject` during `round`.
struct InteractionRecord {
  UavId observer{};
  UavId subject{};
  double pdr = 0.0;           ///< packet delivery ratio in [0, 1]
  double response_time = 0.0; ///< milliseconds
  Round round = 0;

  friend bool operator==(const InteractionRecord &, const InteractionRecord &) = default;
};

struct EnergyState {
  double remaining = 100.0;
  double capacity = 100.0;

  bool depleted() const noexcept { return remaining <= 0.0; }
};

/// Current trust score of one UAV plus its (round, score) history.
class TrustState {
public:
  TrustState() = default;
  TrustState(UavId uav, double initial) : uav_(uav), score_(initial) {
    detail::require_unit(initial, "initial trust");
  }

  UavId uav() const noexcept { return uav_; }
  double score() const noexcept { return score_; }
  const std::vector<std::pair<Round, double>> &history() const noexcept { return history_; }

  /// Replaces the score and appends it to the history. Rounds must strictly increase.
  void record(Round round, double score) {
    detail::require_unit(score, "trust score");
    if (!history_.empty() && round <= history_.back().first) {
      throw DomainError("trust history rounds must strictly increase");
    }
    score_ = score;
    history_.emplace_back(round, score);
  }

private:
  UavId uav_{};
  double score_ = 0.5;
  std::vector<std::pair<Round, double>> history_;
};

enum class Verdict { Trustworthy, Rogue };

/// w1 * mean(PDR) + w2 * (1 - min(mean(RT), rt_max) / rt_max) over one subject's records.
///
/// Throws NoObservations on an empty range; callers substitute the neutral score.
inline double behavior_score(std::span<const InteractionRecord> records, double rt_max,
                             const BehaviorWeights &bw) {
  if (!(rt_max > 0.0)) throw DomainError("rt_max must be positive");
  if (records.empty()) throw NoObservations();
  bw.validate();
  double pdr_sum = 0.0;
  double rt_sum = 0.0;
  for (const auto &r : records) {
    detail::require_unit(r.pdr, "pdr");
    if (!(r.response_time >= 0.0)) throw DomainError("response time must be non-negative");
    pdr_sum += r.pdr;
    rt_sum += r.response_time;
  }
  const double n = static_cast<double>(records.size());
  const double rt = std::min(rt_sum / n, rt_max);
  const double score = bw.w1 * (pdr_sum / n) + bw.w2 * (1.0 - rt / rt_max);
  return std::clamp(score, 0.0, 1.0);
}

inline double energy_score(const EnergyState &e) {
  if (!(e.capacity > 0.0)) throw InvalidCapacity();
  return std::clamp(e.remaining / e.capacity, 0.0, 1.0);
}

/// alpha * prev + beta * behavior + gamma * energy.
inline double update_trust(double prev, double behavior, double energy, const TrustWeights &tw) {
  detail::require_unit(prev, "previous trust");
  detail::require_unit(behavior, "behaviour score");
  detail::require_unit(energy, "energy score");
  tw.validate();
  const double t = tw.alpha * prev + tw.beta * behavior + tw.gamma * energy;
  // Rounding can leave a convex combination of ones a few ulps above 1.
  return std::clamp(t, 0.0, 1.0);
}

/// Rogue iff trust is strictly below the threshold.
inline Verdict classify(double trust, double threshold) {
  detail::require_unit(trust, "trust");
  detail::require_unit(threshold, "threshold");
  return trust < threshold ? Verdict::Rogue : Verdict::Trustworthy;
}

} // namespace skytrust
