#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "skytrust/baselines.hpp"
#include "skytrust/dtsam.hpp"

namespace skytrust {

inline RunResult run_experiment(const ScenarioConfig &c, std::ostream *trace = nullptr) {
  validate(c);
  switch (c.method) {
  case Method::Dtsam: return run_dtsam(c, trace);
  case Method::Cte: return run_cte(c, trace);
  case Method::Sbst: return run_sbst(c, trace);
  }
  throw ConfigError("method", "unsupported method");
}

inline nlohmann::ordered_json summary_json(const RunResult &r) {
  nlohmann::ordered_json j;
  j["run_id"] = run_id(r.config);
  j["config"] = to_json(r.config);
  j["metrics"] = metrics_json(r.report);
  return j;
}

namespace detail {
inline void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}
} // namespace detail

/// Writes <out>/<run-id>/{summary.json, rounds.csv, ledger.ndjson}. Returns the run directory.
inline std::filesystem::path write_outputs(const RunResult &r, const std::filesystem::path &out) {
  const auto dir = out / run_id(r.config);
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "summary.json", summary_json(r).dump(2) + "\n");
  std::ostringstream rounds;
  write_rounds_csv(rounds, r.report);
  detail::write_file(dir / "rounds.csv", rounds.str());
  if (r.ledger) {
    std::ostringstream ledger;
    export_ndjson(*r.ledger, ledger);
    detail::write_file(dir / "ledger.ndjson", ledger.str());
  }
  return dir;
}

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0; ///< sample standard deviation; 0 for a single run
};

inline MetricStat mean_std(std::span<const double> xs) {
  if (xs.empty()) throw UndefinedMetric("statistics of zero runs");
  MetricStat s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

/// Row labels of the comparison table, in display order.
inline const std::vector<std::string> &table_rows() {
  static const std::vector<std::string> rows = {
      "Accuracy in Trust Score Prediction (%)",
      "Communication Overhead (MB per UAV)",
      "Energy Consumption (Joules per Transaction)",
      "Convergence Time (Iterations)",
      "Rogue UAV Detection Rate (%)",
  };
  return rows;
}

struct MethodSummary {
  Method method = Method::Dtsam;
  std::vector<std::uint64_t> seeds;
  MetricStat accuracy;
  MetricStat comm_overhead_mb_per_uav;
  MetricStat energy_per_transaction;
  std::optional<MetricStat> convergence_rounds;
  MetricStat detection_rate;
};

struct SweepResult {
  std::vector<RunResult> runs; ///< sorted by method then seed
  std::vector<MethodSummary> summaries;
};

inline MethodSummary summarize_method(Method m, std::span<const RunResult> runs) {
  MethodSummary s;
  s.method = m;
  std::vector<double> acc, ovh, ept, conv, det;
  for (const auto &r : runs) {
    if (r.report.method != m) continue;
    s.seeds.push_back(r.report.seed);
    acc.push_back(r.report.accuracy);
    ovh.push_back(r.report.comm_overhead_mb_per_uav);
    ept.push_back(r.report.energy_per_transaction);
    det.push_back(r.report.detection_rate);
    if (r.report.convergence_rounds) conv.push_back(static_cast<double>(*r.report.convergence_rounds));
  }
  s.accuracy = mean_std(acc);
  s.comm_overhead_mb_per_uav = mean_std(ovh);
  s.energy_per_transaction = mean_std(ept);
  s.detection_rate = mean_std(det);
  if (!conv.empty()) s.convergence_rounds = mean_std(conv);
  return s;
}

/// Runs every (method, seed) pair, `threads` runs at a time.
inline SweepResult sweep(const ScenarioConfig &base, std::span<const std::uint64_t> seeds,
                         std::span<const Method> methods, unsigned threads = 0) {
  if (seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  if (methods.empty()) throw ConfigError("methods", "need at least one method");
  std::vector<ScenarioConfig> jobs;
  for (auto m : methods) {
    for (auto s : seeds) {
      ScenarioConfig c = base;
      c.method = m;
      c.seed = s;
      validate(c);
      jobs.push_back(c);
    }
  }
  std::vector<std::optional<RunResult>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        results[k] = run_experiment(jobs[k]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, jobs.size()); ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult out;
  for (auto &r : results) out.runs.push_back(std::move(*r));
  std::stable_sort(out.runs.begin(), out.runs.end(), [](const RunResult &a, const RunResult &b) {
    if (a.report.method != b.report.method) return a.report.method < b.report.method;
    return a.report.seed < b.report.seed;
  });
  for (auto m : methods) {
    if (std::none_of(out.summaries.begin(), out.summaries.end(), [&](const auto &s) { return s.method == m; })) {
      out.summaries.push_back(summarize_method(m, out.runs));
    }
  }
  return out;
}

/// The comparison table: one row per metric, mean and std columns per method.
/// Fractions are shown as percentages.
inline void write_table_csv(std::ostream &out, const SweepResult &s) {
  out << "metric";
  for (const auto &m : s.summaries) out << ',' << to_string(m.method) << "_mean," << to_string(m.method) << "_std";
  out << '\n';
  auto cell = [&](const MetricStat &st, double scale) {
    out << ',' << detail::fmt(st.mean * scale) << ',' << detail::fmt(st.stddev * scale);
  };
  const auto &rows = table_rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << '"' << rows[r] << '"';
    for (const auto &m : s.summaries) {
      switch (r) {
      case 0: cell(m.accuracy, 100.0); break;
      case 1: cell(m.comm_overhead_mb_per_uav, 1.0); break;
      case 2: cell(m.energy_per_transaction, 1.0); break;
      case 3:
        if (m.convergence_rounds) cell(*m.convergence_rounds, 1.0);
        else out << ",N/A,N/A";
        break;
      case 4: cell(m.detection_rate, 100.0); break;
      }
    }
    out << '\n';
  }
}

/// Writes each run's outputs plus table.csv and a combined rounds.csv under `out`.
inline void write_sweep_outputs(const SweepResult &s, const std::filesystem::path &out) {
  std::filesystem::create_directories(out);
  std::ostringstream rounds;
  bool header = true;
  for (const auto &r : s.runs) {
    write_outputs(r, out);
    write_rounds_csv(rounds, r.report, header);
    header = false;
  }
  detail::write_file(out / "rounds.csv", rounds.str());
  std::ostringstream table;
  write_table_csv(table, s);
  detail::write_file(out / "table.csv", table.str());
}

} // namespace skytrust
