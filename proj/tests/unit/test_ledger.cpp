#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "rescuesim/ledger/chunking.hpp"
#include "rescuesim/ledger/store.hpp"
#include "rescuesim/rng.hpp"

using namespace rescuesim;
using namespace rescuesim::ledger;
using fixtures::Keyring;

namespace {

struct Chain {
  Keyring keys{10};
  TxRules rules;
  Block genesis_child;

  Chain() {
    genesis_child = assemble_block({}, genesis_hash(), 1, 0, keys.keys[0], {}, rules);
  }

  BlockContext context(Height parent_height, const crypto::Digest& parent, Round round = 0) const {
    BlockContext c;
    c.parent_hash = parent;
    c.parent_height = parent_height;
    c.current_round = round;
    c.leader_at = [](Round r) { return static_cast<NodeId>(r % 7); };
    c.proposer_keys = keys.lookup();
    c.last_commit_keys = keys.lookup();
    c.last_committee_size = keys.size();
    c.tx_rules = rules;
    return c;
  }

  LastProof last_proof_for(const Block& parent, std::size_t signers, bool aggregated = true) const {
    LastProof lp;
    lp.last_commit = fixtures::cert(keys, VoteType::precommit, parent.header.height, 0, parent.header.this_hash,
                                    signers, aggregated);
    return lp;
  }
};

OffchainTx offchain(const Keyring& k, int i, ContentStore* store = nullptr) {
  Bytes raw{static_cast<std::uint8_t>(i), 1, 2, 3};
  Bytes out{static_cast<std::uint8_t>(i), 9};
  DataPointer ptr{crypto::h0(raw), crypto::h0(out)};
  if (store) {
    store->put(raw, "vehicle-1");
    store->put(out, "vehicle-2");
  }
  std::vector<crypto::KeyPair> vehicles{k.keys[1], k.keys[2]};
  return make_offchain_tx(k.keys[0], vehicles, ptr, "task " + std::to_string(i), i, ContentStore::certificate(ptr.raw));
}

}  // namespace

TEST_CASE("content store round trip, idempotence, persistence") {
  ContentStore s;
  Bytes d{1, 2, 3};
  auto p = s.put(d, "vehicle-4");
  CHECK(p == crypto::h0(d));
  CHECK(s.get(p) == d);
  CHECK(s.put(d, "other") == p);
  CHECK(s.size() == 1);
  CHECK(s.shard_of(p) == "vehicle-4");
  CHECK_THROWS_AS(s.get(fixtures::digest_of("nope")), NotFound);

  auto dir = std::filesystem::temp_directory_path() / "rescuesim_store_test";
  std::filesystem::remove_all(dir);
  s.save(dir);
  ContentStore t;
  t.load(dir);
  CHECK(t.get(p) == d);
  CHECK(t.shard_of(p) == "vehicle-4");
  std::filesystem::remove_all(dir);
}

TEST_CASE("transactions encode, decode and verify") {
  Keyring k(4);
  ContentStore store;
  TxRules rules;
  rules.store = &store;
  auto tx = offchain(k, 1, &store);
  CHECK(verify_transaction(tx, rules) == TxVerdict::valid);
  Transaction t = tx;
  auto bytes = encode_transaction(t);
  ByteReader r(bytes);
  CHECK(decode_transaction(r) == t);

  auto bad = tx;
  bad.description = "changed";
  CHECK(verify_transaction(bad, rules) == TxVerdict::bad_uav_signature);
  ContentStore empty;
  TxRules strict;
  strict.store = &empty;
  CHECK(verify_transaction(tx, strict) == TxVerdict::unresolved_pointer);

  std::vector<crypto::KeyPair> informers{k.keys[1], k.keys[2], k.keys[3]};
  auto rep = make_report_tx(k.keys[0].pk, informers, Bytes{1, 2}, 1, 5);
  CHECK(verify_transaction(rep, rules) == TxVerdict::valid);
  auto wrong_fee = make_report_tx(k.keys[0].pk, informers, Bytes{1, 2}, 2, 5);
  CHECK(verify_transaction(wrong_fee, rules) == TxVerdict::wrong_fee);
  auto forged = rep;
  forged.evidence.push_back(7);
  CHECK(verify_transaction(forged, rules) == TxVerdict::bad_informer_signature);
}

TEST_CASE("assemble and validate blocks") {
  Chain c;
  const auto& b1 = c.genesis_child;
  CHECK(validate_block(b1, c.context(0, genesis_hash())) == BlockVerdict::valid);
  CHECK(b1.header.tx_root == compute_tx_root({}));

  std::vector<Transaction> txs;
  for (int i = 0; i < 1000; ++i) txs.push_back(offchain(c.keys, i));
  auto b2 = assemble_block(txs, b1.header.this_hash, 2, 0, c.keys.keys[0], c.last_proof_for(b1, 7), c.rules);
  std::vector<Bytes> leaves;
  for (const auto& t : txs) leaves.push_back(encode_transaction(t));
  CHECK(b2.header.tx_root == crypto::merkle_root(leaves));
  CHECK(validate_block(b2, c.context(1, b1.header.this_hash)) == BlockVerdict::valid);
  CHECK(decode_block(encode_block(b2)) == b2);

  SUBCASE("wrong parent") {
    CHECK(validate_block(b2, c.context(1, fixtures::digest_of("x"))) == BlockVerdict::bad_parent);
  }
  SUBCASE("true block at false height") {
    CHECK(validate_block(b2, c.context(2, b1.header.this_hash)) == BlockVerdict::bad_height);
  }
  SUBCASE("round from the future") {
    auto late = assemble_block({}, b1.header.this_hash, 2, 3, c.keys.keys[3], c.last_proof_for(b1, 7), c.rules);
    CHECK(validate_block(late, c.context(1, b1.header.this_hash, 1)) == BlockVerdict::bad_round);
    CHECK(validate_block(late, c.context(1, b1.header.this_hash, 3)) == BlockVerdict::valid);
  }
  SUBCASE("wrong proposer") {
    auto other = assemble_block({}, b1.header.this_hash, 2, 0, c.keys.keys[4], c.last_proof_for(b1, 7), c.rules);
    CHECK(validate_block(other, c.context(1, b1.header.this_hash)) == BlockVerdict::wrong_proposer);
  }
  SUBCASE("tampered body and header") {
    auto t = b2;
    t.txs.pop_back();
    CHECK(validate_block(t, c.context(1, b1.header.this_hash)) == BlockVerdict::bad_tx_root);
    auto h = b2;
    h.header.prev_hash = fixtures::digest_of("y");
    auto ctx = c.context(1, h.header.prev_hash);
    CHECK(validate_block(h, ctx) == BlockVerdict::bad_hash);
  }
  SUBCASE("LastCommit quorum is strict") {
    for (bool aggregated : {true, false}) {
      auto six = assemble_block({}, b1.header.this_hash, 2, 0, c.keys.keys[0], c.last_proof_for(b1, 6, aggregated),
                                c.rules);
      CHECK(validate_block(six, c.context(1, b1.header.this_hash)) == BlockVerdict::last_commit_quorum);
      auto seven = assemble_block({}, b1.header.this_hash, 2, 0, c.keys.keys[0],
                                  c.last_proof_for(b1, 7, aggregated), c.rules);
      CHECK(validate_block(seven, c.context(1, b1.header.this_hash)) == BlockVerdict::valid);
    }
  }
}

TEST_CASE("assembly rejects an invalid transaction by index") {
  Chain c;
  std::vector<Transaction> txs{offchain(c.keys, 1), offchain(c.keys, 2)};
  std::get<OffchainTx>(txs[1]).timestamp = 99;
  try {
    assemble_block(txs, genesis_hash(), 1, 0, c.keys.keys[0], {}, c.rules);
    FAIL("expected rejection");
  } catch (const BlockAssemblyError& e) {
    CHECK(e.index() == 1);
    CHECK(e.verdict() == TxVerdict::bad_uav_signature);
  }
}

TEST_CASE("chunking round trip and tamper detection") {
  Chain c;
  std::vector<Transaction> txs;
  for (int i = 0; i < 200; ++i) txs.push_back(offchain(c.keys, i));
  auto b = assemble_block(txs, genesis_hash(), 1, 0, c.keys.keys[0], {}, c.rules);

  auto small = chunk_block(c.genesis_child, 1 << 20);
  CHECK(small.chunks.size() == 1);
  CHECK(reassemble(small.chunks, small.root) == c.genesis_child);

  auto cb = chunk_block(b, 1024);
  REQUIRE(cb.chunks.size() > 4);
  auto shuffled = cb.chunks;
  Rng rng(3);
  rng.shuffle(shuffled);
  CHECK(reassemble(shuffled, cb.root) == b);

  auto bad = cb.chunks;
  bad[3].data[0] ^= 1;
  ChunkAssembler a(cb.root, static_cast<std::uint32_t>(bad.size()));
  for (std::size_t i = 0; i < bad.size(); ++i) {
    CHECK(a.add(bad[i]) == (i == 3 ? ChunkAssembler::Result::rejected : ChunkAssembler::Result::accepted));
  }
  CHECK_FALSE(a.complete());
  CHECK(a.add(cb.chunks[0]) == ChunkAssembler::Result::duplicate);
  try {
    reassemble(bad, cb.root);
    FAIL("expected rejection");
  } catch (const ChunkRejected& e) {
    CHECK(e.index() == 3);
  }
}

TEST_CASE("quorum threshold") {
  CHECK(quorum_threshold(10) == 7);
  CHECK(quorum_threshold(4) == 3);
  CHECK(quorum_threshold(3) == 3);
  CHECK_FALSE(exceeds_quorum(6, 10));
  CHECK(exceeds_quorum(7, 10));
}

TEST_CASE("commit certificates") {
  Keyring k(10);
  auto h = fixtures::digest_of("B");
  auto cert = fixtures::cert(k, VoteType::precommit, 4, 1, h, 8);
  CHECK(verify_commit_cert(cert, k.lookup(), 10) == CertVerdict::valid);
  ByteWriter w;
  encode_commit_cert(w, cert);
  ByteReader r(w.bytes());
  CHECK(decode_commit_cert(r) == cert);

  auto forged = cert;
  forged.block_hash = fixtures::digest_of("B'");
  CHECK(verify_commit_cert(forged, k.lookup(), 10) == CertVerdict::bad_signature);
  auto naive = fixtures::cert(k, VoteType::precommit, 4, 1, h, 8, false);
  CHECK(verify_commit_cert(naive, k.lookup(), 10) == CertVerdict::valid);
  ByteWriter wn;
  encode_commit_cert(wn, naive);
  CHECK(wn.size() > w.size());

  std::vector<Vote> mixed{fixtures::vote(k, VoteType::precommit, 4, 1, h, 0),
                          fixtures::vote(k, VoteType::precommit, 4, 2, h, 1)};
  CHECK_THROWS_AS(make_commit_cert(mixed, k.lookup(), true), std::domain_error);
}
