#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ledger_fixtures.hpp"
#include "skytrust/ledger.hpp"

using namespace skytrust;
using namespace testing_support;

namespace {

Transaction tx(TxKind k, std::uint32_t subject, Round r, std::vector<std::uint8_t> payload) {
  return {k, static_cast<UavId>(subject), std::move(payload), r};
}

} // namespace

TEST_CASE("genesis block", "[ledger]") {
  Ledger l;
  REQUIRE(l.size() == 1);
  const Block &g = l.tip();
  CHECK(g.height == 0);
  CHECK(g.prev_hash == Digest{});
  CHECK(g.transactions.empty());
  CHECK(l.verify() == ChainStatus::ok());
}

TEST_CASE("append links blocks", "[ledger]") {
  Ledger l;
  const Digest genesis = l.tip().hash;
  const Block b1 = l.append({tx(TxKind::TrustUpdate, 1, 1, {1, 2, 3})}, uav_at(4), 1);
  CHECK(b1.height == 1);
  CHECK(b1.prev_hash == genesis);
  const Block b2 = l.append({tx(TxKind::ModelDigest, 2, 2, {9})}, uav_at(0), 2);
  CHECK(b2.height == 2);
  CHECK(b2.prev_hash == b1.hash);
  CHECK(b2.timestamp == 2);
  CHECK(l.verify().valid);
  CHECK_THROWS_AS(l.append({}, uav_at(0), 3), EmptyBlockRejected);
  CHECK(l.size() == 3);
}

TEST_CASE("block hash matches an independent digest of the documented layout", "[ledger]") {
  Rng rng(17);
  const Ledger l = random_ledger(20, rng);
  for (const auto &b : l.blocks()) {
    CHECK(sodium_sha256(hand_serialize(b)) == b.hash);
    CHECK(hand_serialize(b) == canonical_bytes(b));
  }
}

TEST_CASE("identical transactions give identical hashes across runs", "[ledger]") {
  auto build = [] {
    Ledger l;
    l.append({tx(TxKind::TrustUpdate, 3, 1, {0xde, 0xad}), tx(TxKind::ModelDigest, 1, 1, {0xbe, 0xef})}, uav_at(2), 1);
    return l.tip().hash;
  };
  CHECK(build() == build());
}

TEST_CASE("verify_chain finds the first tampered block", "[ledger]") {
  Rng rng(4);
  Ledger l = random_ledger(6, rng);
  auto blocks = l.blocks();
  blocks[3].transactions[0].payload[0] ^= 0x01;
  CHECK(verify_chain(blocks) == ChainStatus::corrupt(3));

  blocks = l.blocks();
  blocks[5].prev_hash[0] ^= 0x80;
  CHECK(verify_chain(blocks) == ChainStatus::corrupt(5));

  blocks = l.blocks();
  blocks.erase(blocks.begin() + 2);
  CHECK(verify_chain(blocks) == ChainStatus::corrupt(2));

  blocks = l.blocks();
  blocks[0].prev_hash[31] = 1;
  CHECK(verify_chain(blocks) == ChainStatus::corrupt(0));
}

TEST_CASE("any single-bit mutation is detected at its height", "[ledger][property]") {
  Rng rng(31);
  const Ledger l = random_ledger(30, rng);
  for (int k = 0; k < 300; ++k) {
    auto blocks = l.blocks();
    const std::size_t h = rng.below(blocks.size());
    const auto field = flip_random_bit(blocks[h], rng);
    INFO("height " << h << " field " << field);
    CHECK(verify_chain(blocks) == ChainStatus::corrupt(h));
  }
}

TEST_CASE("appending to a corrupt imported ledger is refused", "[ledger]") {
  Rng rng(8);
  auto blocks = random_ledger(3, rng).blocks();
  blocks[2].timestamp += 1;
  Ledger l = Ledger::from_blocks(blocks);
  CHECK_THROWS_AS(l.append({tx(TxKind::TrustUpdate, 0, 4, {1})}, uav_at(0), 4), Error);
}

TEST_CASE("wire size: header plus envelope and payload per transaction", "[ledger]") {
  Ledger l;
  const Block &b = l.append({tx(TxKind::TrustUpdate, 0, 1, std::vector<std::uint8_t>(24)),
                             tx(TxKind::ModelDigest, 0, 1, std::vector<std::uint8_t>(32))},
                            uav_at(0), 1);
  // 8 height + 32 prev + 8 timestamp + 4 validator + 4 count + 32 hash = 88
  CHECK(wire_size(b, 256) == 88 + (256 + 24) + (256 + 32));
  CHECK(wire_size(l.blocks()[0], 256) == 88);
}

TEST_CASE("NDJSON export round-trips bit-exactly", "[ledger]") {
  Rng rng(12);
  const Ledger l = random_ledger(15, rng);
  std::ostringstream first;
  export_ndjson(l, first);
  std::istringstream in(first.str());
  const Ledger back = import_ndjson(in);
  CHECK(back.blocks() == l.blocks());
  CHECK(back.verify().valid);
  std::ostringstream second;
  export_ndjson(back, second);
  CHECK(second.str() == first.str());

  // one line per block
  const auto text = first.str();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == l.size());
}

TEST_CASE("NDJSON import detects edits and rejects malformed input", "[ledger]") {
  Rng rng(13);
  const Ledger l = random_ledger(4, rng);
  std::ostringstream out;
  export_ndjson(l, out);
  std::string text = out.str();

  // change the validator of block 2 in the text
  std::vector<std::string> lines;
  std::istringstream split(text);
  for (std::string line; std::getline(split, line);) lines.push_back(line);
  auto j = nlohmann::ordered_json::parse(lines[2]);
  j["validator"] = j["validator"].get<std::uint32_t>() + 1;
  lines[2] = j.dump();
  std::string edited;
  for (const auto &line : lines) edited += line + "\n";
  std::istringstream in(edited);
  CHECK(import_ndjson(in).verify() == ChainStatus::corrupt(2));

  auto parse = [](const std::string &s) {
    std::istringstream is(s);
    return import_ndjson(is);
  };
  CHECK_THROWS_AS(parse(""), LedgerFormatError);
  CHECK_THROWS_AS(parse("{not json}\n"), LedgerFormatError);
  CHECK_THROWS_AS(parse(R"({"height":0})" "\n"), LedgerFormatError);
  auto bad_hex = nlohmann::ordered_json::parse(lines[1]);
  bad_hex["hash"] = "zz";
  CHECK_THROWS_AS(parse(bad_hex.dump() + "\n"), LedgerFormatError);
  auto bad_kind = nlohmann::ordered_json::parse(lines[1]);
  bad_kind["transactions"][0]["kind"] = "Mint";
  CHECK_THROWS_AS(parse(bad_kind.dump() + "\n"), LedgerFormatError);
}

TEST_CASE("digest hex helpers", "[ledger]") {
  const std::vector<std::uint8_t> abc{'a', 'b', 'c'};
  CHECK(to_hex(sha256(abc)) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256(abc) == sodium_sha256(abc));
  CHECK(from_hex("00ff10") == std::vector<std::uint8_t>{0x00, 0xff, 0x10});
  CHECK_THROWS_AS(from_hex("abc"), LedgerFormatError);
  CHECK_THROWS_AS(from_hex("gg"), LedgerFormatError);
}
