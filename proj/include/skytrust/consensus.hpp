#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "skytrust/errors.hpp"
#include "skytrust/rng.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

/// p_i = T_i * E_i / sum_j T_j * E_j, or uniform when every product is zero.
inline std::vector<double> validation_probabilities(std::span<const std::pair<double, double>> entries) {
  if (entries.empty()) throw NoCandidates();
  std::vector<double> p;
  p.reserve(entries.size());
  double total = 0.0;
  for (const auto &[trust, energy] : entries) {
    detail::require_unit(trust, "trust");
    detail::require_unit(energy, "energy");
    p.push_back(trust * energy);
    total += trust * energy;
  }
  if (total == 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (auto &x : p) x /= total;
  return p;
}

struct LotteryEntry {
  UavId uav{};
  double trust = 0.0;
  double energy = 0.0;
};

class ValidatorLottery {
public:
  explicit ValidatorLottery(std::vector<LotteryEntry> entries) : entries_(std::move(entries)) {
    std::vector<std::pair<double, double>> te;
    te.reserve(entries_.size());
    for (const auto &e : entries_) te.emplace_back(e.trust, e.energy);
    probabilities_ = validation_probabilities(te);
  }

  const std::vector<LotteryEntry> &entries() const noexcept { return entries_; }
  const std::vector<double> &probabilities() const noexcept { return probabilities_; }

private:
  std::vector<LotteryEntry> entries_;
  std::vector<double> probabilities_;
};

/// Inverse-CDF draw; consumes exactly one uniform from `rng`.
inline UavId select_validator(const ValidatorLottery &lottery, Rng &rng) {
  const auto &p = lottery.probabilities();
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = i;
    acc += p[i];
    if (u < acc) return lottery.entries()[i].uav;
  }
  // u landed in the rounding gap above the accumulated sum.
  return lottery.entries()[last_positive].uav;
}

struct ChargeResult {
  EnergyState state;
  double charged = 0.0; ///< what was actually removed (less than the cost when the floor hits)
  bool depleted = false;
};

/// Subtracts `cost`, flooring at zero.
inline ChargeResult energy_charge(const EnergyState &e, double cost) {
  if (!(cost >= 0.0)) throw DomainError("energy cost must be non-negative");
  ChargeResult r{e, 0.0, false};
  r.charged = std::min(cost, std::max(e.remaining, 0.0));
  r.state.remaining = std::max(0.0, e.remaining - cost);
  r.depleted = r.state.depleted();
  return r;
}

} // namespace skytrust
