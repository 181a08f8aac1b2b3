#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "skytrust/simulation.hpp"

namespace skytrust {

/// Dynamic trust + energy-aware lottery consensus + trust-weighted federated learning.
///
/// Each round every UAV's trust is updated from the behaviour observed about
/// it, the participants run one FL round, one validator drawn by trust x energy
/// seals the round's TrustUpdate and ModelDigest transactions into a block, and
/// every UAV is classified. Until the global model converges (or the FL round
/// budget runs out) classification uses trust alone; afterwards it uses the
/// mean of trust and the model's trust estimate.
inline RunResult run_dtsam(const ScenarioConfig &c, std::ostream *trace = nullptr) {
  validate(c);
  WorldDriver sim(c);
  Rng consensus = Rng::derive(c.seed, static_cast<std::uint64_t>(Stream::Consensus));
  Rng vrng = Rng::derive(c.seed, static_cast<std::uint64_t>(Stream::Validation));
  const auto validation = validation_set(c, vrng);

  RunResult out;
  out.config = c;
  out.ledger.emplace();
  Ledger &ledger = *out.ledger;
  MetricsReport &rep = out.report;
  rep.method = Method::Dtsam;
  rep.seed = c.seed;

  const std::size_t n = c.uav_count;
  ModelParams global;
  FLRoundState fl{0, {}, c.epsilon};
  const double untrained = model_accuracy(global, validation, c.rogue_threshold);
  std::optional<std::uint64_t> departed_at; // first FL round whose accuracy left the untrained level
  std::optional<std::uint64_t> converged_at;
  std::vector<double> model_trust(n, c.initial_trust);
  std::vector<double> behavior(n), energy(n);

  FLRoundOptions fl_opt;
  fl_opt.mode = c.aggregation;
  fl_opt.hyper = c.hyper;
  fl_opt.envelope_bytes = c.envelope_bytes;
  fl_opt.threads = c.threads;

  if (trace) write_trace_header(*trace);

  for (Round t = 1; t <= c.rounds; ++t) {
    sim.step();
    auto &world = sim.world();

    // 1. Trust update.
    for (std::size_t j = 0; j < n; ++j) {
      const auto &recs = sim.records_about(j);
      behavior[j] = recs.empty() ? c.neutral_behavior : behavior_score(recs, c.rt_max_ms, c.behavior_weights);
      energy[j] = energy_score(world.uavs[j].energy);
      auto &ts = world.uavs[j].trust;
      ts.record(t, update_trust(ts.score(), behavior[j], energy[j], c.trust_weights));
    }

    // 2. Federated round.
    std::optional<double> model_acc;
    std::vector<Participant> parts;
    parts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto &u = world.uavs[i];
      const auto &p = u.active(t);
      const bool poisons = p.kind == ProfileKind::Rogue && p.poison_updates;
      parts.push_back({&sim.datasets()[i], u.trust.score(), u.energy, poisons ? c.poison_boost : 0.0});
    }
    bool trained = false;
    try {
      const auto r = run_fl_round(parts, global, fl_opt);
      global = r.global;
      trained = true;
      for (std::size_t k = 0; k < r.participants.size(); ++k) {
        rep.bytes.param_bytes += r.bytes_sent[k];
        sim.charge(r.participants[k], sim.transmission_cost(r.bytes_sent[k]));
      }
    } catch (const RoundSkipped &) {
      // Nobody has labelled data yet.
    }
    if (trained) {
      fl.round += 1;
      model_acc = model_accuracy(global, validation, c.rogue_threshold);
      fl.accuracy_history.push_back(*model_acc);
      if (!departed_at && std::abs(*model_acc - untrained) >= c.epsilon) departed_at = fl.round;
      if (!converged_at && departed_at && fl.round > *departed_at && has_converged(fl)) converged_at = fl.round;
    }
    const bool adopted = converged_at.has_value() || fl.round >= c.max_fl_rounds;

    // 3. Classification.
    std::vector<int> flags(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (const auto &x = sim.features()[j]) model_trust[j] = 1.0 - predict(global, *x);
      const double t_j = world.uavs[j].trust.score();
      const double score = adopted ? 0.5 * (t_j + model_trust[j]) : t_j;
      flags[j] = classify(score, c.rogue_threshold) == Verdict::Rogue ? 1 : 0;
    }

    // 4. Consensus: one block per round from a trust x energy lottery.
    std::vector<LotteryEntry> entries;
    for (std::size_t j = 0; j < n; ++j) {
      const auto &u = world.uavs[j];
      if (!u.energy.depleted()) entries.push_back({uav_at(j), u.trust.score(), energy_score(u.energy)});
    }
    if (!entries.empty()) {
      const UavId validator = select_validator(ValidatorLottery(std::move(entries)), consensus);
      std::vector<Transaction> txs;
      txs.reserve(n + 1);
      for (std::size_t j = 0; j < n; ++j) {
        txs.push_back({TxKind::TrustUpdate, uav_at(j),
                       trust_update_payload(world.uavs[j].trust.score(), behavior[j], energy[j]), t});
      }
      if (trained) txs.push_back({TxKind::ModelDigest, validator, model_digest_payload(global), t});
      const Block &b = ledger.append(std::move(txs), validator, t);
      const std::size_t bytes = wire_size(b, c.envelope_bytes);
      rep.bytes.block_bytes += bytes;
      for (const auto &tx : b.transactions) {
        sim.charge(tx.subject, sim.transmission_cost(c.envelope_bytes + tx.payload.size()));
      }
      sim.charge(validator, sim.validation_cost(validator, bytes));
      rep.transactions += b.transactions.size();
    }

    RoundMetrics m = sim.score_round(flags);
    m.overhead_mb_per_uav = comm_overhead(rep.bytes, n);
    m.transactions = rep.transactions;
    m.model_accuracy = model_acc;
    rep.rounds.push_back(std::move(m));
    if (trace) write_trace_rows(*trace, world);
  }

  // Convergence is reported in FL rounds; hitting the round budget counts as stopping there.
  rep.convergence_rounds = converged_at ? std::min(*converged_at, c.max_fl_rounds) : c.max_fl_rounds;
  summarize(rep, n);
  sim.finish(out);
  return out;
}

} // namespace skytrust
