#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "skytrust/simulation.hpp"

namespace skytrust {

/// Bytes a central server receives when every UAV ships its whole dataset.
inline std::uint64_t central_upload_bytes(std::span<const std::size_t> dataset_sizes, std::size_t record_bytes) {
  std::uint64_t total = 0;
  for (auto s : dataset_sizes) total += static_cast<std::uint64_t>(s) * record_bytes;
  return total;
}

/// Centralized trust evaluation: every round each UAV uploads every raw
/// record it has observed so far to one server, which trains a single model
/// on the pooled labelled data and classifies. No ledger and no consensus.
///
/// A compromised poisoning UAV uploads its records with flipped labels.
inline RunResult run_cte(const ScenarioConfig &c, std::ostream *trace = nullptr) {
  validate(c);
  WorldDriver sim(c);
  Rng vrng = Rng::derive(c.seed, static_cast<std::uint64_t>(Stream::Validation));
  const auto validation = validation_set(c, vrng);

  RunResult out;
  out.config = c;
  MetricsReport &rep = out.report;
  rep.method = Method::Cte;
  rep.seed = c.seed;

  const std::size_t n = c.uav_count;
  ModelParams model;
  std::vector<double> model_trust(n, c.initial_trust);
  if (trace) write_trace_header(*trace);

  for (Round t = 1; t <= c.rounds; ++t) {
    sim.step();
    auto &world = sim.world();

    LocalDataset pooled;
    for (std::size_t i = 0; i < n; ++i) {
      if (sim.observed()[i] == 0 || world.uavs[i].energy.depleted()) continue;
      const std::size_t bytes = sim.observed()[i] * c.record_bytes;
      rep.bytes.raw_bytes += bytes;
      sim.charge(uav_at(i), c.energy.uplink_message_cost + c.energy.uplink_cost_per_kb * static_cast<double>(bytes) / 1000.0);
      rep.transactions += 1;
      const auto &p = world.uavs[i].active(t);
      const bool flip = p.kind == ProfileKind::Rogue && p.poison_updates;
      for (auto s : sim.datasets()[i].samples) {
        if (flip) s.label = 1 - s.label;
        pooled.samples.push_back(s);
      }
    }
    std::optional<double> model_acc;
    if (pooled.size() > 0) {
      model = train_local(pooled, model, c.hyper).params;
      model_acc = model_accuracy(model, validation, c.rogue_threshold);
    }

    std::vector<int> flags(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (const auto &x = sim.features()[j]) model_trust[j] = 1.0 - predict(model, *x);
      flags[j] = classify(model_trust[j], c.rogue_threshold) == Verdict::Rogue ? 1 : 0;
    }

    RoundMetrics m = sim.score_round(flags);
    m.overhead_mb_per_uav = comm_overhead(rep.bytes, n);
    m.transactions = rep.transactions;
    m.model_accuracy = model_acc;
    rep.rounds.push_back(std::move(m));
    if (trace) write_trace_rows(*trace, world);
  }
  rep.convergence_rounds.reset();
  summarize(rep, n);
  sim.finish(out);
  return out;
}

struct BatchEntry {
  UavId subject{};
  std::uint32_t count = 0;
  double pdr_mean = 0.0;
};

/// digest(records) | u32 n | n x (u32 subject | u32 count | f64 mean PDR), big-endian.
inline std::vector<std::uint8_t> interaction_batch_payload(std::span<const InteractionRecord> records) {
  ByteWriter raw;
  std::map<std::uint32_t, std::pair<std::uint32_t, double>> by_subject;
  for (const auto &r : records) {
    raw.u32(static_cast<std::uint32_t>(r.observer));
    raw.u32(static_cast<std::uint32_t>(r.subject));
    raw.f64(r.pdr);
    raw.f64(r.response_time);
    raw.u64(r.round);
    auto &[count, sum] = by_subject[static_cast<std::uint32_t>(r.subject)];
    ++count;
    sum += r.pdr;
  }
  ByteWriter w;
  w.bytes(sha256(raw.data()));
  w.u32(static_cast<std::uint32_t>(by_subject.size()));
  for (const auto &[subject, cs] : by_subject) {
    w.u32(subject);
    w.u32(cs.first);
    w.f64(cs.second / cs.first);
  }
  return std::move(w).take();
}

inline std::vector<BatchEntry> decode_interaction_batch(std::span<const std::uint8_t> payload) {
  if (payload.size() < 36) throw LedgerFormatError("interaction batch too short");
  ByteReader r(payload.subspan(32));
  const std::uint32_t n = r.u32();
  std::vector<BatchEntry> out;
  for (std::uint32_t k = 0; k < n; ++k) {
    BatchEntry e;
    e.subject = static_cast<UavId>(r.u32());
    e.count = r.u32();
    e.pdr_mean = r.f64();
    out.push_back(e);
  }
  if (!r.done()) throw LedgerFormatError("trailing bytes in interaction batch");
  return out;
}

/// Standard blockchain with static trust: trust never moves from its initial
/// value, validators rotate round-robin regardless of energy, every UAV logs
/// its observations as a batch transaction, and a UAV is flagged once the
/// cumulative mean PDR recorded about it on the ledger drops below a fixed threshold.
inline RunResult run_sbst(const ScenarioConfig &c, std::ostream *trace = nullptr) {
  validate(c);
  WorldDriver sim(c);

  RunResult out;
  out.config = c;
  out.ledger.emplace();
  Ledger &ledger = *out.ledger;
  MetricsReport &rep = out.report;
  rep.method = Method::Sbst;
  rep.seed = c.seed;

  const std::size_t n = c.uav_count;
  std::vector<double> pdr_sum(n, 0.0);
  std::vector<double> pdr_count(n, 0.0);
  if (trace) write_trace_header(*trace);

  for (Round t = 1; t <= c.rounds; ++t) {
    sim.step();
    auto &world = sim.world();
    for (auto &u : world.uavs) u.trust.record(t, c.initial_trust);

    std::vector<std::vector<InteractionRecord>> by_observer(n);
    for (const auto &r : sim.records()) by_observer[index_of(r.observer)].push_back(r);
    std::vector<Transaction> txs;
    for (std::size_t i = 0; i < n; ++i) {
      txs.push_back({TxKind::InteractionBatchDigest, uav_at(i), interaction_batch_payload(by_observer[i]), t});
    }
    const UavId validator = uav_at(static_cast<std::size_t>((t - 1) % n));
    const Block &b = ledger.append(std::move(txs), validator, t);
    const std::size_t bytes = wire_size(b, c.envelope_bytes);
    rep.bytes.block_bytes += bytes;
    for (const auto &tx : b.transactions) {
      sim.charge(tx.subject, sim.transmission_cost(c.envelope_bytes + tx.payload.size()));
      for (const auto &e : decode_interaction_batch(tx.payload)) {
        pdr_sum[index_of(e.subject)] += e.pdr_mean * e.count;
        pdr_count[index_of(e.subject)] += e.count;
      }
    }
    sim.charge(validator, sim.validation_cost(validator, bytes));
    rep.transactions += b.transactions.size();

    std::vector<int> flags(n);
    for (std::size_t j = 0; j < n; ++j) {
      flags[j] = pdr_count[j] > 0 && pdr_sum[j] / pdr_count[j] < c.sbst_pdr_threshold ? 1 : 0;
    }

    RoundMetrics m = sim.score_round(flags);
    m.overhead_mb_per_uav = comm_overhead(rep.bytes, n);
    m.transactions = rep.transactions;
    rep.rounds.push_back(std::move(m));
    if (trace) write_trace_rows(*trace, world);
  }
  rep.convergence_rounds.reset();
  summarize(rep, n);
  sim.finish(out);
  return out;
}

} // namespace skytrust
