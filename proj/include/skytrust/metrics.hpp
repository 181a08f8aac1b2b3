#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skytrust/config.hpp"
#include "skytrust/errors.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

inline constexpr double kBytesPerMB = 1e6;

/// Fraction of predictions that match the truth.
inline double accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.empty()) throw UndefinedMetric("accuracy of zero predictions");
  if (predictions.size() != truth.size()) throw DomainError("predictions and truth differ in length");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hit += predictions[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

/// |flagged ∩ rogues| / |rogues|.
inline double detection_rate(const std::set<UavId> &flagged, const std::set<UavId> &rogues) {
  if (rogues.empty()) throw UndefinedMetric("detection rate with no rogues");
  std::size_t hit = 0;
  for (auto id : rogues) hit += flagged.count(id);
  return static_cast<double>(hit) / static_cast<double>(rogues.size());
}

/// Everything a run put on the wire.
struct ByteBill {
  std::uint64_t param_bytes = 0;  ///< FL parameter uploads
  std::uint64_t block_bytes = 0;  ///< blocks including their transactions
  std::uint64_t raw_bytes = 0;    ///< raw records shipped to a central server

  std::uint64_t total() const noexcept { return param_bytes + block_bytes + raw_bytes; }
};

/// Total billed bytes per UAV, in MB.
inline double comm_overhead(const ByteBill &bill, std::size_t uav_count) {
  if (uav_count == 0) throw DomainError("overhead per UAV needs at least one UAV");
  return static_cast<double>(bill.total()) / kBytesPerMB / static_cast<double>(uav_count);
}

inline double energy_per_transaction(double joules, std::uint64_t transactions) {
  if (transactions == 0) throw UndefinedMetric("energy per transaction with no transactions");
  return joules / static_cast<double>(transactions);
}

struct RoundMetrics {
  Round round = 0;
  double accuracy = 0.0;
  std::optional<double> detection_rate;     ///< empty while no rogue is active
  double overhead_mb_per_uav = 0.0;         ///< cumulative
  double energy_j = 0.0;                    ///< cumulative protocol energy
  std::uint64_t transactions = 0;           ///< cumulative
  std::optional<double> model_accuracy;     ///< global model on the validation set, when one is trained
  std::vector<UavId> flagged;
  std::vector<UavId> rogues;
};

struct MetricsReport {
  Method method = Method::Dtsam;
  std::uint64_t seed = 0;
  double accuracy = 0.0;                        ///< mean over rounds
  double detection_rate = 0.0;                  ///< mean over rounds with an active rogue
  double final_detection_rate = 0.0;            ///< last round with an active rogue
  double comm_overhead_mb_per_uav = 0.0;
  double energy_per_transaction = 0.0;          ///< Joules
  std::optional<std::uint64_t> convergence_rounds; ///< empty = not applicable
  double total_energy_j = 0.0;
  std::uint64_t transactions = 0;
  ByteBill bytes;
  std::vector<RoundMetrics> rounds;
};

/// Fills the scalar fields from the per-round series.
inline void summarize(MetricsReport &r, std::size_t uav_count) {
  if (r.rounds.empty()) throw UndefinedMetric("run produced no rounds");
  double acc = 0.0;
  double det = 0.0;
  std::size_t det_rounds = 0;
  for (const auto &m : r.rounds) {
    acc += m.accuracy;
    if (m.detection_rate) {
      det += *m.detection_rate;
      ++det_rounds;
      r.final_detection_rate = *m.detection_rate;
    }
  }
  r.accuracy = acc / static_cast<double>(r.rounds.size());
  r.detection_rate = det_rounds ? det / static_cast<double>(det_rounds) : 0.0;
  r.comm_overhead_mb_per_uav = comm_overhead(r.bytes, uav_count);
  r.total_energy_j = r.rounds.back().energy_j;
  r.transactions = r.rounds.back().transactions;
  r.energy_per_transaction = r.transactions ? energy_per_transaction(r.total_energy_j, r.transactions) : 0.0;
}

inline nlohmann::ordered_json metrics_json(const MetricsReport &r) {
  nlohmann::ordered_json j;
  j["method"] = to_string(r.method);
  j["seed"] = r.seed;
  j["accuracy"] = r.accuracy;
  j["detection_rate"] = r.detection_rate;
  j["final_detection_rate"] = r.final_detection_rate;
  j["comm_overhead_mb_per_uav"] = r.comm_overhead_mb_per_uav;
  j["energy_per_transaction_j"] = r.energy_per_transaction;
  if (r.convergence_rounds) j["convergence_rounds"] = *r.convergence_rounds;
  else j["convergence_rounds"] = "NotApplicable";
  j["total_energy_j"] = r.total_energy_j;
  j["transactions"] = r.transactions;
  j["bytes"] = {{"params", r.bytes.param_bytes}, {"blocks", r.bytes.block_bytes}, {"raw_records", r.bytes.raw_bytes}};
  return j;
}

inline const char *kRoundsCsvHeader =
    "method,seed,round,accuracy,detection_rate,comm_overhead_mb_per_uav,energy_j,transactions,model_accuracy";

namespace detail {
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
} // namespace detail

/// One row per round; empty cells where a metric is undefined that round.
inline void write_rounds_csv(std::ostream &out, const MetricsReport &r, bool header = true) {
  if (header) out << kRoundsCsvHeader << '\n';
  for (const auto &m : r.rounds) {
    out << to_string(r.method) << ',' << r.seed << ',' << m.round << ',' << detail::fmt(m.accuracy) << ','
        << (m.detection_rate ? detail::fmt(*m.detection_rate) : "") << ',' << detail::fmt(m.overhead_mb_per_uav)
        << ',' << detail::fmt(m.energy_j) << ',' << m.transactions << ','
        << (m.model_accuracy ? detail::fmt(*m.model_accuracy) : "") << '\n';
  }
}

} // namespace skytrust
