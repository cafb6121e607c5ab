#include "rescuesim/ledger/vote.hpp"

#include <algorithm>
#include <stdexcept>

#include "rescuesim/ledger/wire.hpp"

namespace rescuesim::ledger {

const char* to_string(VoteType t) { return t == VoteType::prevote ? "prevote" : "precommit"; }

Bytes vote_sign_bytes(VoteType type, Height height, Round round, const crypto::Digest& value) {
  ByteWriter w;
  w.put_string("rescuesim/vote");
  w.put_u8(static_cast<std::uint8_t>(type));
  w.put_u64(height);
  w.put_u32(round);
  put_digest(w, value);
  return std::move(w).bytes();
}

void encode_vote(ByteWriter& w, const Vote& v) {
  w.put_u8(static_cast<std::uint8_t>(v.type));
  w.put_u64(v.height);
  w.put_u32(v.round);
  put_digest(w, v.value);
  w.put_u32(v.voter);
  put_signature(w, v.signature);
}

Vote decode_vote(ByteReader& r) {
  Vote v;
  const auto t = r.get_u8();
  if (t != 1 && t != 2) throw DecodeError("unknown vote type");
  v.type = static_cast<VoteType>(t);
  v.height = r.get_u64();
  v.round = r.get_u32();
  v.value = get_digest(r);
  v.voter = r.get_u32();
  v.signature = get_signature(r);
  return v;
}

std::size_t vote_wire_size() { return 1 + 8 + 4 + 32 + 4 + signature_wire_size(); }

std::size_t quorum_threshold(std::size_t committee_size) { return (2 * committee_size) / 3 + 1; }

bool exceeds_quorum(std::size_t count, std::size_t committee_size) {
  return count >= quorum_threshold(committee_size);
}

CommitCert make_commit_cert(std::vector<Vote> precommits, const KeyLookup& keys, bool aggregated,
                            const crypto::SignatureScheme& scheme) {
  if (precommits.empty()) throw std::domain_error("make_commit_cert: no precommits");
  std::sort(precommits.begin(), precommits.end(), [](const Vote& a, const Vote& b) { return a.voter < b.voter; });
  precommits.erase(std::unique(precommits.begin(), precommits.end(),
                               [](const Vote& a, const Vote& b) { return a.voter == b.voter; }),
                   precommits.end());
  const Vote& first = precommits.front();
  CommitCert c;
  c.type = first.type;
  c.height = first.height;
  c.round = first.round;
  c.block_hash = first.value;
  c.aggregated = aggregated;
  std::vector<crypto::Signature> sigs;
  std::vector<crypto::PublicKey> pks;
  for (const auto& v : precommits) {
    if (v.type != c.type || v.height != c.height || v.round != c.round || v.value != c.block_hash) {
      throw std::domain_error("make_commit_cert: votes disagree on (type, h, r, value)");
    }
    auto pk = keys(v.voter);
    if (!pk) throw std::domain_error("make_commit_cert: signer outside committee");
    c.signers.push_back(v.voter);
    sigs.push_back(v.signature);
    pks.push_back(*pk);
  }
  if (aggregated) {
    c.aggregate = scheme.aggregate(sigs, pks).combined;
  } else {
    c.individual = std::move(sigs);
  }
  return c;
}

const char* to_string(CertVerdict v) {
  switch (v) {
    case CertVerdict::valid: return "valid";
    case CertVerdict::empty: return "empty";
    case CertVerdict::unsorted_signers: return "unsorted_signers";
    case CertVerdict::unknown_signer: return "unknown_signer";
    case CertVerdict::below_quorum: return "below_quorum";
    case CertVerdict::bad_signature: return "bad_signature";
    case CertVerdict::nil_value: return "nil_value";
  }
  return "?";
}

CertVerdict verify_commit_cert(const CommitCert& cert, const KeyLookup& keys, std::size_t committee_size,
                               const crypto::SignatureScheme& scheme, VerifyCounter* counter) {
  if (cert.signers.empty()) return CertVerdict::empty;
  if (cert.block_hash == crypto::kZeroDigest) return CertVerdict::nil_value;
  for (std::size_t i = 1; i < cert.signers.size(); ++i) {
    if (cert.signers[i - 1] >= cert.signers[i]) return CertVerdict::unsorted_signers;
  }
  std::vector<crypto::PublicKey> pks;
  pks.reserve(cert.signers.size());
  for (NodeId id : cert.signers) {
    auto pk = keys(id);
    if (!pk) return CertVerdict::unknown_signer;
    pks.push_back(*pk);
  }
  if (!exceeds_quorum(cert.signers.size(), committee_size)) return CertVerdict::below_quorum;
  const Bytes msg = vote_sign_bytes(cert.type, cert.height, cert.round, cert.block_hash);
  if (cert.aggregated) {
    if (counter) ++counter->signatures;
    crypto::AggregateSignature agg;
    agg.combined = cert.aggregate;
    agg.keys = pks;
    for (const auto& pk : pks) agg.weights.push_back(scheme.aggregation_weight(pk, pks));
    return scheme.verify_aggregate(agg, msg) ? CertVerdict::valid : CertVerdict::bad_signature;
  }
  if (cert.individual.size() != pks.size()) return CertVerdict::bad_signature;
  for (std::size_t i = 0; i < pks.size(); ++i) {
    if (counter) ++counter->signatures;
    if (!scheme.verify(cert.individual[i], msg, pks[i])) return CertVerdict::bad_signature;
  }
  return CertVerdict::valid;
}

void encode_commit_cert(ByteWriter& w, const CommitCert& c) {
  w.put_u8(static_cast<std::uint8_t>(c.type));
  w.put_u64(c.height);
  w.put_u32(c.round);
  put_digest(w, c.block_hash);
  w.put_u32(static_cast<std::uint32_t>(c.signers.size()));
  for (NodeId id : c.signers) w.put_u32(id);
  w.put_bool(c.aggregated);
  if (c.aggregated) {
    put_signature(w, c.aggregate);
  } else {
    w.put_u32(static_cast<std::uint32_t>(c.individual.size()));
    for (const auto& s : c.individual) put_signature(w, s);
  }
}

CommitCert decode_commit_cert(ByteReader& r) {
  CommitCert c;
  const auto t = r.get_u8();
  if (t != 1 && t != 2) throw DecodeError("unknown certificate vote type");
  c.type = static_cast<VoteType>(t);
  c.height = r.get_u64();
  c.round = r.get_u32();
  c.block_hash = get_digest(r);
  const auto n = r.get_count(4);
  c.signers.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) c.signers.push_back(r.get_u32());
  c.aggregated = r.get_bool();
  if (c.aggregated) {
    c.aggregate = get_signature(r);
  } else {
    const auto m = r.get_count(signature_wire_size());
    for (std::uint32_t i = 0; i < m; ++i) c.individual.push_back(get_signature(r));
  }
  return c;
}

}  // namespace rescuesim::ledger
