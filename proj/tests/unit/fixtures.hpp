#pragma once

#include <map>
#include <vector>

#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/ledger/block.hpp"
#include "rescuesim/ledger/vote.hpp"

namespace fixtures {

using namespace rescuesim;

struct Keyring {
  std::vector<crypto::KeyPair> keys;

  explicit Keyring(std::size_t n, std::uint64_t seed = 1) {
    for (NodeId i = 0; i < n; ++i) keys.push_back(crypto::default_scheme().keygen(seed, i));
  }
  ledger::KeyLookup lookup() const {
    return [this](NodeId id) -> std::optional<crypto::PublicKey> {
      if (id < keys.size()) return keys[id].pk;
      return std::nullopt;
    };
  }
  std::size_t size() const { return keys.size(); }
};

inline ledger::Vote vote(const Keyring& k, ledger::VoteType t, Height h, Round r, const crypto::Digest& value,
                         NodeId voter) {
  ledger::Vote v{t, h, r, value, voter, {}};
  v.signature = crypto::default_scheme().sign(v.sign_bytes(), k.keys[voter].sk);
  return v;
}

inline ledger::CommitCert cert(const Keyring& k, ledger::VoteType t, Height h, Round r, const crypto::Digest& value,
                               std::size_t signers, bool aggregated = true) {
  std::vector<ledger::Vote> vs;
  for (NodeId i = 0; i < signers; ++i) vs.push_back(vote(k, t, h, r, value, i));
  return ledger::make_commit_cert(vs, k.lookup(), aggregated);
}

inline crypto::Digest digest_of(std::string_view s) { return crypto::sha256(crypto::as_bytes(s)); }

}  // namespace fixtures
