#include <set>

#include "doctest.h"
#include "rescuesim/crypto/merkle.hpp"
#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/rng.hpp"

using namespace rescuesim;
using namespace rescuesim::crypto;

namespace {

Bytes str(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Reference Merkle root built straight from sha256 with the documented prefixes.
Digest reference_root(const std::vector<Bytes>& leaves) {
  std::vector<Digest> level;
  for (const auto& l : leaves) {
    Bytes b{0x00};
    b.insert(b.end(), l.begin(), l.end());
    level.push_back(sha256(b));
  }
  while (level.size() > 1) {
    if (level.size() % 2) level.push_back(level.back());
    std::vector<Digest> next;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      Bytes b{0x01};
      b.insert(b.end(), level[i].begin(), level[i].end());
      b.insert(b.end(), level[i + 1].begin(), level[i + 1].end());
      next.push_back(sha256(b));
    }
    level = next;
  }
  return level.front();
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(to_hex(sha256(str("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(to_hex(sha256(str(""))) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(digest_from_hex(to_hex(h0(str("x")))) == h0(str("x")));
  CHECK(h0(str("x")) != sha256(str("x")));
  CHECK(tagged_hash("a", str("bc")) != tagged_hash("ab", str("c")));
}

TEST_CASE("keygen is deterministic and distinct across seeds") {
  const auto& s = default_scheme();
  auto a = s.keygen(42, 1);
  auto b = s.keygen(42, 1);
  CHECK(a.pk == b.pk);
  CHECK(a.sk.scalar == b.sk.scalar);
  std::set<std::uint64_t> pks;
  for (std::uint64_t seed = 0; seed < 500; ++seed) pks.insert(s.keygen(seed, 1).pk.element);
  CHECK(pks.size() == 500);
  CHECK(s.keygen(1, 1).pk != s.keygen(1, 2).pk);
}

TEST_CASE("sign and verify") {
  const auto& s = default_scheme();
  auto a = s.keygen(1, 1);
  auto b = s.keygen(2, 2);
  auto m = str("block 7");
  auto sig = s.sign(m, a.sk);
  CHECK(s.verify(sig, m, a.pk));
  CHECK_FALSE(s.verify(sig, m, b.pk));
  auto flipped = m;
  flipped[0] ^= 1;
  CHECK_FALSE(s.verify(sig, flipped, a.pk));
  CHECK_FALSE(s.verify(Signature{SimulatedBls::kInvalid}, m, a.pk));
}

TEST_CASE("malformed signature encodings verify false") {
  const auto& s = default_scheme();
  auto a = s.keygen(1, 1);
  auto m = str("m");
  ledger::ByteWriter w;
  s.encode(w, s.sign(m, a.sk));
  auto bytes = w.bytes();
  CHECK(bytes.size() == s.signature_size());
  bytes.back() = 0x7f;  // padding must stay zero
  ledger::ByteReader r(bytes);
  CHECK_FALSE(s.verify(s.decode_signature(r), m, a.pk));
}

TEST_CASE("aggregation completeness and soundness over random subsets") {
  const auto& s = default_scheme();
  Rng rng(5);
  std::vector<KeyPair> keys;
  for (NodeId i = 0; i < 10; ++i) keys.push_back(s.keygen(100 + i, i));
  auto m = str("precommit h=3 r=0");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Signature> sigs;
    std::vector<PublicKey> pks;
    for (const auto& k : keys) {
      if (rng.bernoulli(0.7)) {
        sigs.push_back(s.sign(m, k.sk));
        pks.push_back(k.pk);
      }
    }
    if (sigs.empty()) continue;
    auto agg = s.aggregate(sigs, pks);
    CHECK(s.verify_aggregate(agg, m));
    ledger::ByteWriter w;
    s.encode(w, agg.combined);
    CHECK(w.size() == s.signature_size());

    // One forged constituent breaks it.
    auto forged = sigs;
    const auto idx = rng.below(forged.size());
    forged[idx] = s.sign(str("other"), keys[0].sk);
    CHECK_FALSE(s.verify_aggregate(s.aggregate(forged, pks), m));
    auto wrong = str("precommit h=3 r=1");
    CHECK_FALSE(s.verify_aggregate(agg, wrong));
  }
}

TEST_CASE("single-signer aggregate is the weighted signature") {
  const auto& s = default_scheme();
  auto k = s.keygen(9, 9);
  auto m = str("one");
  std::vector<Signature> sigs{s.sign(m, k.sk)};
  std::vector<PublicKey> pks{k.pk};
  auto agg = s.aggregate(sigs, pks);
  CHECK(agg.weights.size() == 1);
  CHECK(agg.weights[0] == s.aggregation_weight(k.pk, pks));
  CHECK(s.verify_aggregate(agg, m));
}

TEST_CASE("pairing backend is unavailable") {
  CHECK_THROWS_AS(make_signature_scheme(Backend::pairing), ConfigError);
  CHECK(parse_backend("simulation") == Backend::simulation);
  CHECK_THROWS(parse_backend("rsa"));
}

TEST_CASE("merkle tree") {
  CHECK_THROWS_AS(MerkleTree(std::vector<Bytes>{}), std::domain_error);
  std::vector<Bytes> one{str("leaf")};
  CHECK(merkle_root(one) == merkle_leaf_hash(one[0]));

  for (std::size_t n : {2u, 3u, 5u, 8u, 13u, 1000u}) {
    std::vector<Bytes> leaves;
    for (std::size_t i = 0; i < n; ++i) leaves.push_back(str("tx-" + std::to_string(i)));
    MerkleTree t(leaves);
    CHECK(t.root() == reference_root(leaves));
    for (std::size_t i = 0; i < n; ++i) {
      auto p = t.proof(i);
      CHECK(merkle_verify(leaves[i], p, t.root()));
      if (i == 0) {
        CHECK_FALSE(merkle_verify(str("tampered"), p, t.root()));
        if (!p.path.empty()) {
          auto bad = p;
          bad.path[0].sibling_on_left = !bad.path[0].sibling_on_left;
          CHECK_FALSE(merkle_verify(leaves[i], bad, t.root()));
        }
      }
    }
  }
}

TEST_CASE("leaf and node hashing are domain separated") {
  auto a = merkle_leaf_hash(str("a"));
  auto b = merkle_leaf_hash(str("b"));
  Bytes concat(a.begin(), a.end());
  concat.insert(concat.end(), b.begin(), b.end());
  CHECK(merkle_leaf_hash(concat) != merkle_node_hash(a, b));
}
