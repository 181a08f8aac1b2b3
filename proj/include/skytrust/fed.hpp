#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "skytrust/errors.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

struct FeatureVector {
  double pdr_mean = 0.0;
  double rt_norm = 0.0;          ///< min(RT, rt_max) / rt_max
  double energy_score = 0.0;
  double interaction_rate = 0.0; ///< observed interactions / max possible per round

  std::array<double, 4> values() const noexcept { return {pdr_mean, rt_norm, energy_score, interaction_rate}; }
  friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

struct Sample {
  FeatureVector x;
  int label = 0; ///< 1 = rogue
};

struct LocalDataset {
  UavId owner{};
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
};

struct ModelParams {
  static constexpr std::size_t kCount = 5;

  std::array<double, 4> coefficients{};
  double bias = 0.0;

  friend bool operator==(const ModelParams &, const ModelParams &) = default;

  double &operator[](std::size_t i) { return i < 4 ? coefficients[i] : bias; }
  double operator[](std::size_t i) const { return i < 4 ? coefficients[i] : bias; }

  bool finite() const {
    for (std::size_t i = 0; i < kCount; ++i) {
      if (!std::isfinite((*this)[i])) return false;
    }
    return true;
  }

  /// Coefficients then bias, each as a little-endian IEEE-754 double.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(kCount * 8);
    for (std::size_t i = 0; i < kCount; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>((*this)[i]);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    return out;
  }

  static ModelParams deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kCount * 8) throw DomainError("model parameters must be 40 bytes");
    ModelParams p;
    for (std::size_t i = 0; i < kCount; ++i) {
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
      p[i] = std::bit_cast<double>(bits);
    }
    return p;
  }
};

struct TrainingHyper {
  double learning_rate = 1.0;
  int epochs = 100;
};

struct TrainResult {
  ModelParams params;
  bool skipped = false; ///< set when the dataset was empty and `params` is the untouched init
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(const ModelParams &p, const FeatureVector &x) {
  const auto v = x.values();
  double z = p.bias;
  for (std::size_t i = 0; i < 4; ++i) z += p.coefficients[i] * v[i];
  return z;
}

/// Probability that `x` describes a rogue UAV.
inline double predict(const ModelParams &p, const FeatureVector &x) { return sigmoid(logit(p, x)); }

/// Mean logistic cross-entropy.
inline double loss(const ModelParams &p, std::span<const Sample> data) {
  if (data.empty()) throw DomainError("loss of an empty dataset");
  double sum = 0.0;
  for (const auto &s : data) {
    const double z = logit(p, s.x);
    // log(1 + e^z) - y z, written to stay finite for large |z|.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    sum += softplus - s.label * z;
  }
  return sum / static_cast<double>(data.size());
}

/// Analytic gradient of `loss` with respect to (coefficients, bias).
inline ModelParams loss_gradient(const ModelParams &p, std::span<const Sample> data) {
  if (data.empty()) throw DomainError("gradient of an empty dataset");
  ModelParams g;
  for (const auto &s : data) {
    const double r = sigmoid(logit(p, s.x)) - s.label;
    const auto v = s.x.values();
    for (std::size_t i = 0; i < 4; ++i) g.coefficients[i] += r * v[i];
    g.bias += r;
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) g[i] /= n;
  return g;
}

/// Full-batch gradient descent starting from `init`.
inline TrainResult train_local(const LocalDataset &data, const ModelParams &init, const TrainingHyper &hyper) {
  if (!(hyper.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (hyper.epochs < 0) throw DomainError("epoch count must be non-negative");
  if (data.size() == 0) return {init, true};
  ModelParams p = init;
  for (int e = 0; e < hyper.epochs; ++e) {
    const ModelParams g = loss_gradient(p, data.samples);
    for (std::size_t i = 0; i < ModelParams::kCount; ++i) p[i] -= hyper.learning_rate * g[i];
  }
  return {p, false};
}

namespace detail {

inline ModelParams weighted_mean(std::span<const ModelParams> models, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DegenerateWeights();
  ModelParams out;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const double share = weights[k] / total;
    for (std::size_t i = 0; i < ModelParams::kCount; ++i) out[i] += share * models[k][i];
  }
  return out;
}

} // namespace detail

/// Dataset-size weighted mean of client parameters.
inline ModelParams fedavg_aggregate(std::span<const ModelParams> models, std::span<const double> sizes) {
  if (models.empty() || models.size() != sizes.size()) {
    throw DomainError("fedavg needs one size per model and at least one model");
  }
  for (double s : sizes) {
    if (!(s >= 0.0)) throw DomainError("dataset sizes must be non-negative");
  }
  return detail::weighted_mean(models, sizes);
}

/// Like fedavg_aggregate but each client is weighted by trust * dataset size.
inline ModelParams trust_weighted_aggregate(std::span<const ModelParams> models, std::span<const double> sizes,
                                            std::span<const double> trusts) {
  if (models.empty() || models.size() != sizes.size() || models.size() != trusts.size()) {
    throw DomainError("trust-weighted aggregation needs one size and one trust per model");
  }
  std::vector<double> w(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!(sizes[k] >= 0.0)) throw DomainError("dataset sizes must be non-negative");
    detail::require_unit(trusts[k], "trust");
    w[k] = trusts[k] * sizes[k];
  }
  return detail::weighted_mean(models, w);
}

struct FLRoundState {
  std::uint64_t round = 0;
  std::vector<double> accuracy_history;
  double epsilon = 0.01;
};

/// True iff the last two accuracies differ by strictly less than epsilon.
inline bool has_converged(const FLRoundState &s) {
  const auto &h = s.accuracy_history;
  if (h.size() < 2) return false;
  return std::abs(h.back() - h[h.size() - 2]) < s.epsilon;
}

enum class AggregationMode { FedAvg, TrustWeighted };

struct Participant {
  const LocalDataset *data = nullptr;
  double trust = 0.5;
  EnergyState energy;
  /// Zero for honest clients. A positive value makes the client submit
  /// global - boost * (local - global) instead of its trained parameters.
  double poison_boost = 0.0;
};

struct FLRoundOptions {
  AggregationMode mode = AggregationMode::TrustWeighted;
  TrainingHyper hyper;
  std::size_t envelope_bytes = 256;
  unsigned threads = 1;
};

struct FLRoundResult {
  ModelParams global;
  std::vector<UavId> participants;          ///< clients that trained and uploaded
  std::vector<std::size_t> bytes_sent;      ///< aligned with `participants`
};

/// Bytes one parameter upload costs on the wire.
constexpr std::size_t param_message_bytes(std::size_t envelope) {
  return ModelParams::kCount * 8 + envelope;
}

/// One federated round: local training from `global`, upload, aggregation.
///
/// Clients with no energy or no data sit the round out. Training runs on up to
/// `threads` threads; aggregation always happens in participant order, so the
/// result does not depend on the thread count.
inline FLRoundResult run_fl_round(std::span<const Participant> participants, const ModelParams &global,
                                  const FLRoundOptions &opt) {
  // Validate up front: an exception escaping a worker thread would terminate.
  if (!(opt.hyper.learning_rate > 0.0) || opt.hyper.epochs < 0) throw DomainError("invalid training hyperparameters");
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < participants.size(); ++k) {
    const auto &p = participants[k];
    if (p.data != nullptr && p.data->size() > 0 && !p.energy.depleted()) eligible.push_back(k);
  }
  if (eligible.empty()) throw RoundSkipped();

  std::vector<ModelParams> submitted(eligible.size());
  auto train = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t e = lo; e < hi; ++e) {
      const auto &p = participants[eligible[e]];
      ModelParams local = train_local(*p.data, global, opt.hyper).params;
      if (p.poison_boost > 0.0) {
        for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
          local[i] = global[i] - p.poison_boost * (local[i] - global[i]);
        }
      }
      submitted[e] = local;
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(opt.threads, 1, eligible.size());
  if (workers == 1) {
    train(0, eligible.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (eligible.size() + workers - 1) / workers;
    for (std::size_t lo = 0; lo < eligible.size(); lo += chunk) {
      pool.emplace_back(train, lo, std::min(lo + chunk, eligible.size()));
    }
  }

  std::vector<double> sizes;
  std::vector<double> trusts;
  FLRoundResult r;
  for (std::size_t k : eligible) {
    const auto &p = participants[k];
    sizes.push_back(static_cast<double>(p.data->size()));
    trusts.push_back(p.trust);
    r.participants.push_back(p.data->owner);
    r.bytes_sent.push_back(param_message_bytes(opt.envelope_bytes));
  }
  r.global = opt.mode == AggregationMode::FedAvg ? fedavg_aggregate(submitted, sizes)
                                                 : trust_weighted_aggregate(submitted, sizes, trusts);
  return r;
}

} // namespace skytrust
