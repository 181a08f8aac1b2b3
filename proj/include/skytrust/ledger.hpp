#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skytrust/digest.hpp"
#include "skytrust/errors.hpp"
#include "skytrust/trust.hpp"

namespace skytrust {

enum class TxKind : std::uint8_t {
  TrustUpdate = 1,
  ModelDigest = 2,
  InteractionBatchDigest = 3,
};

inline const char *to_string(TxKind k) {
  switch (k) {
  case TxKind::TrustUpdate: return "TrustUpdate";
  case TxKind::ModelDigest: return "ModelDigest";
  case TxKind::InteractionBatchDigest: return "InteractionBatchDigest";
  }
  return "Unknown";
}

inline TxKind tx_kind_from_string(const std::string &s) {
  if (s == "TrustUpdate") return TxKind::TrustUpdate;
  if (s == "ModelDigest") return TxKind::ModelDigest;
  if (s == "InteractionBatchDigest") return TxKind::InteractionBatchDigest;
  throw LedgerFormatError("unknown transaction kind '" + s + "'");
}

struct Transaction {
  TxKind kind = TxKind::TrustUpdate;
  UavId subject{};
  std::vector<std::uint8_t> payload;
  Round round = 0;

  friend bool operator==(const Transaction &, const Transaction &) = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  Round timestamp = 0;
  UavId validator{};
  std::vector<Transaction> transactions;
  Digest hash{};

  friend bool operator==(const Block &, const Block &) = default;
};

/// Fixed header bytes billed per block: height, prev_hash, timestamp,
/// validator, transaction count and the block hash.
inline constexpr std::size_t kBlockHeaderBytes = 8 + 32 + 8 + 4 + 4 + 32;

/// Canonical layout hashed into Block::hash. All integers big-endian:
///
///   u64 height | 32B prev_hash | u64 timestamp | u32 validator | u32 tx_count |
///   per tx: u8 kind | u32 subject | u64 round | u32 payload_len | payload
inline std::vector<std::uint8_t> canonical_bytes(const Block &b) {
  ByteWriter w;
  w.u64(b.height);
  w.bytes(b.prev_hash);
  w.u64(b.timestamp);
  w.u32(static_cast<std::uint32_t>(b.validator));
  w.u32(static_cast<std::uint32_t>(b.transactions.size()));
  for (const auto &tx : b.transactions) {
    w.u8(static_cast<std::uint8_t>(tx.kind));
    w.u32(static_cast<std::uint32_t>(tx.subject));
    w.u64(tx.round);
    w.blob(tx.payload);
  }
  return std::move(w).take();
}

inline Digest block_hash(const Block &b) { return sha256(canonical_bytes(b)); }

/// Bytes a block costs on the wire: header plus `envelope` bytes of framing per transaction.
inline std::size_t wire_size(const Block &b, std::size_t envelope) {
  std::size_t n = kBlockHeaderBytes;
  for (const auto &tx : b.transactions) n += envelope + tx.payload.size();
  return n;
}

struct ChainStatus {
  bool valid = true;
  std::uint64_t corrupt_height = 0; ///< index of the first failing block when !valid

  static ChainStatus ok() { return {}; }
  static ChainStatus corrupt(std::uint64_t h) { return {false, h}; }
  friend bool operator==(const ChainStatus &, const ChainStatus &) = default;
};

/// Valid iff every stored hash recomputes, heights run 0..n-1 and every
/// prev_hash matches its predecessor's hash.
inline ChainStatus verify_chain(std::span<const Block> blocks) {
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Block &b = blocks[k];
    if (b.height != k) return ChainStatus::corrupt(k);
    if (k == 0 ? b.prev_hash != Digest{} : b.prev_hash != blocks[k - 1].hash) {
      return ChainStatus::corrupt(k);
    }
    if (block_hash(b) != b.hash) return ChainStatus::corrupt(k);
  }
  return ChainStatus::ok();
}

/// Append-only hash chain. Single writer; concurrent readers are fine while nobody appends.
class Ledger {
public:
  /// Starts with the genesis block.
  Ledger() {
    Block genesis;
    genesis.hash = block_hash(genesis);
    blocks_.push_back(std::move(genesis));
  }

  /// Adopts blocks as-is (e.g. from an import). They are checked on the first append.
  static Ledger from_blocks(std::vector<Block> blocks) {
    Ledger l;
    l.blocks_ = std::move(blocks);
    l.verified_ = false;
    return l;
  }

  const std::vector<Block> &blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  const Block &tip() const { return blocks_.back(); }

  ChainStatus verify() const { return verify_chain(blocks_); }

  const Block &append(std::vector<Transaction> txs, UavId validator, Round round) {
    if (txs.empty()) throw EmptyBlockRejected();
    if (!verified_) {
      if (blocks_.empty()) throw Error("cannot append to a ledger without a genesis block");
      const auto status = verify();
      if (!status.valid) {
        throw Error("ledger is corrupt at height " + std::to_string(status.corrupt_height));
      }
      verified_ = true;
    }
    Block b;
    b.height = blocks_.back().height + 1;
    b.prev_hash = blocks_.back().hash;
    b.timestamp = round;
    b.validator = validator;
    b.transactions = std::move(txs);
    b.hash = block_hash(b);
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

private:
  std::vector<Block> blocks_;
  bool verified_ = true;
};

// ---------------------------------------------------------------------------
// Newline-delimited JSON export: one block per line, hashes and payloads hex.

inline nlohmann::ordered_json block_to_json(const Block &b) {
  nlohmann::ordered_json j;
  j["height"] = b.height;
  j["prev_hash"] = to_hex(b.prev_hash);
  j["timestamp"] = b.timestamp;
  j["validator"] = static_cast<std::uint32_t>(b.validator);
  auto txs = nlohmann::ordered_json::array();
  for (const auto &tx : b.transactions) {
    nlohmann::ordered_json t;
    t["kind"] = to_string(tx.kind);
    t["subject"] = static_cast<std::uint32_t>(tx.subject);
    t["payload"] = to_hex(tx.payload);
    t["round"] = tx.round;
    txs.push_back(std::move(t));
  }
  j["transactions"] = std::move(txs);
  j["hash"] = to_hex(b.hash);
  return j;
}

namespace detail {

inline Digest digest_from_hex(const std::string &hex) {
  const auto bytes = from_hex(hex);
  if (bytes.size() != 32) throw LedgerFormatError("digest must be 32 bytes");
  Digest d{};
  std::copy(bytes.begin(), bytes.end(), d.begin());
  return d;
}

template <typename T> T field(const nlohmann::json &j, const char *key) {
  if (!j.contains(key)) throw LedgerFormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw LedgerFormatError(std::string("field '") + key + "': " + e.what());
  }
}

} // namespace detail

inline Block block_from_json(const nlohmann::json &j) {
  Block b;
  b.height = detail::field<std::uint64_t>(j, "height");
  b.prev_hash = detail::digest_from_hex(detail::field<std::string>(j, "prev_hash"));
  b.timestamp = detail::field<std::uint64_t>(j, "timestamp");
  b.validator = static_cast<UavId>(detail::field<std::uint32_t>(j, "validator"));
  if (!j.contains("transactions") || !j.at("transactions").is_array()) {
    throw LedgerFormatError("missing transaction array");
  }
  for (const auto &t : j.at("transactions")) {
    Transaction tx;
    tx.kind = tx_kind_from_string(detail::field<std::string>(t, "kind"));
    tx.subject = static_cast<UavId>(detail::field<std::uint32_t>(t, "subject"));
    tx.payload = from_hex(detail::field<std::string>(t, "payload"));
    tx.round = detail::field<std::uint64_t>(t, "round");
    b.transactions.push_back(std::move(tx));
  }
  b.hash = detail::digest_from_hex(detail::field<std::string>(j, "hash"));
  return b;
}

inline void export_ndjson(const Ledger &ledger, std::ostream &out) {
  for (const auto &b : ledger.blocks()) out << block_to_json(b).dump() << '\n';
}

inline Ledger import_ndjson(std::istream &in) {
  std::vector<Block> blocks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      blocks.push_back(block_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw LedgerFormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const LedgerFormatError &e) {
      throw LedgerFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (blocks.empty()) throw LedgerFormatError("ledger export contains no blocks");
  return Ledger::from_blocks(std::move(blocks));
}

} // namespace skytrust
