#include "rescuesim/reputation/detectors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "rescuesim/ledger/wire.hpp"

namespace rescuesim::reputation {

const char* to_string(EvidenceKind k) {
  switch (k) {
    case EvidenceKind::cp: return "cp";
    case EvidenceKind::cv: return "cv";
    case EvidenceKind::wbc: return "wbc";
    case EvidenceKind::nbc: return "nbc";
    case EvidenceKind::vol: return "vol";
  }
  return "?";
}

Behavior behavior_of(EvidenceKind k) {
  switch (k) {
    case EvidenceKind::cp: return Behavior::cp;
    case EvidenceKind::cv: return Behavior::cv;
    case EvidenceKind::wbc: return Behavior::wbc;
    case EvidenceKind::nbc: return Behavior::nbc;
    case EvidenceKind::vol: return Behavior::vol;
  }
  return Behavior::vol;
}

Bytes encode_evidence(const Evidence& e) {
  ledger::ByteWriter w;
  w.put_u8(static_cast<std::uint8_t>(e.kind));
  w.put_u32(e.accused);
  w.put_u64(e.height);
  w.put_u32(e.round);
  w.put_u8(e.verdict);
  w.put_u32(static_cast<std::uint32_t>(e.proposals.size()));
  for (const auto& p : e.proposals) consensus::encode_proposal(w, p);
  w.put_u32(static_cast<std::uint32_t>(e.votes.size()));
  for (const auto& v : e.votes) ledger::encode_vote(w, v);
  return w.bytes();
}

Evidence decode_evidence(std::span<const std::uint8_t> bytes) {
  ledger::ByteReader r(bytes);
  Evidence e;
  const auto kind = r.get_u8();
  if (kind < 1 || kind > 5) throw ledger::DecodeError("unknown evidence kind");
  e.kind = static_cast<EvidenceKind>(kind);
  e.accused = r.get_u32();
  e.height = r.get_u64();
  e.round = r.get_u32();
  e.verdict = r.get_u8();
  const auto np = r.get_count(1);
  for (std::size_t i = 0; i < np; ++i) e.proposals.push_back(consensus::decode_proposal(r));
  const auto nv = r.get_count(ledger::vote_wire_size());
  for (std::size_t i = 0; i < nv; ++i) e.votes.push_back(ledger::decode_vote(r));
  r.expect_done();
  return e;
}

crypto::Digest Evidence::digest() const { return crypto::sha256(encode_evidence(*this)); }

namespace {

bool signed_by(const Proposal& p, NodeId who, const ledger::KeyLookup& keys, const crypto::SignatureScheme& s) {
  if (p.proposer != who) return false;
  auto pk = keys(who);
  return pk && s.verify(p.signature, p.sign_bytes(), *pk);
}

bool signed_by(const Vote& v, NodeId who, const ledger::KeyLookup& keys, const crypto::SignatureScheme& s) {
  if (v.voter != who) return false;
  auto pk = keys(who);
  return pk && s.verify(v.signature, v.sign_bytes(), *pk);
}

// Content identity of a proposal; two proposals conflict when these differ.
auto proposal_content(const Proposal& p) { return std::tie(p.block_hash, p.parts_root, p.part_count); }

}  // namespace

bool verify_evidence(const Evidence& e, const EvidenceContext& ctx, std::size_t informer_count) {
  const auto& s = *ctx.scheme;
  const bool attested = informer_count > ctx.max_faulty;
  switch (e.kind) {
    case EvidenceKind::cp: {
      if (e.proposals.size() != 2 || !e.votes.empty()) return false;
      const auto& a = e.proposals[0];
      const auto& b = e.proposals[1];
      if (a.height != e.height || b.height != e.height || a.round != e.round || b.round != e.round) return false;
      if (proposal_content(a) == proposal_content(b)) return false;
      return signed_by(a, e.accused, ctx.keys, s) && signed_by(b, e.accused, ctx.keys, s);
    }
    case EvidenceKind::cv: {
      if (e.votes.size() != 2 || !e.proposals.empty()) return false;
      const auto& a = e.votes[0];
      const auto& b = e.votes[1];
      if (a.type != b.type || a.height != e.height || b.height != e.height || a.round != e.round ||
          b.round != e.round || a.value == b.value) {
        return false;
      }
      return signed_by(a, e.accused, ctx.keys, s) && signed_by(b, e.accused, ctx.keys, s);
    }
    case EvidenceKind::wbc: {
      if (!attested || e.proposals.size() != 1 || !e.votes.empty()) return false;
      if (e.verdict == static_cast<std::uint8_t>(ledger::BlockVerdict::valid)) return false;
      const auto& p = e.proposals[0];
      if (p.height != e.height || p.round != e.round) return false;
      if (ctx.leader_at && ctx.leader_at(e.height, e.round) != e.accused) return false;
      return signed_by(p, e.accused, ctx.keys, s);
    }
    case EvidenceKind::nbc:
      if (!attested || !e.proposals.empty() || !e.votes.empty()) return false;
      return !ctx.leader_at || ctx.leader_at(e.height, e.round) == e.accused;
    case EvidenceKind::vol: {
      if (!attested || e.votes.empty() || e.votes.size() > 2 || !e.proposals.empty()) return false;
      for (const auto& v : e.votes) {
        if (v.height != e.height || !signed_by(v, e.accused, ctx.keys, s)) return false;
      }
      if (e.votes.size() == 1) {
        // unjustified precommit
        const auto& v = e.votes[0];
        return v.type == ledger::VoteType::precommit && !v.is_nil() && v.round == e.round;
      }
      const auto& lock = e.votes[0];
      const auto& pv = e.votes[1];
      return lock.type == ledger::VoteType::precommit && !lock.is_nil() && pv.type == ledger::VoteType::prevote &&
             lock.round < pv.round && pv.round == e.round && pv.value != lock.value;
    }
  }
  return false;
}

std::vector<Evidence> detect_equivocation(std::span<const consensus::Message> archive, const ledger::KeyLookup& keys,
                                          const crypto::SignatureScheme& scheme) {
  // First distinct message seen per key; a second distinct one produces evidence once.
  std::map<std::tuple<Height, Round, NodeId>, const Proposal*> proposals;
  std::map<std::tuple<Height, Round, NodeId, std::uint8_t>, const Vote*> votes;
  std::set<std::tuple<std::uint8_t, Height, Round, NodeId, std::uint8_t>> reported;
  std::vector<Evidence> out;

  for (const auto& m : archive) {
    if (const auto* p = m.proposal()) {
      auto key = std::make_tuple(p->height, p->round, p->proposer);
      auto it = proposals.find(key);
      if (it == proposals.end()) {
        if (signed_by(*p, p->proposer, keys, scheme)) proposals.emplace(key, p);
        continue;
      }
      if (proposal_content(*it->second) == proposal_content(*p)) continue;
      if (!reported.emplace(1, p->height, p->round, p->proposer, 0).second) continue;
      if (!signed_by(*p, p->proposer, keys, scheme)) {
        reported.erase({1, p->height, p->round, p->proposer, 0});
        continue;
      }
      Evidence e{EvidenceKind::cp, p->proposer, p->height, p->round, {*it->second, *p}, {}, 0};
      out.push_back(std::move(e));
    } else if (const auto* v = m.vote()) {
      const auto t = static_cast<std::uint8_t>(v->type);
      auto key = std::make_tuple(v->height, v->round, v->voter, t);
      auto it = votes.find(key);
      if (it == votes.end()) {
        if (signed_by(*v, v->voter, keys, scheme)) votes.emplace(key, v);
        continue;
      }
      if (it->second->value == v->value) continue;
      if (reported.count({2, v->height, v->round, v->voter, t})) continue;
      if (!signed_by(*v, v->voter, keys, scheme)) continue;
      reported.emplace(2, v->height, v->round, v->voter, t);
      out.push_back(Evidence{EvidenceKind::cv, v->voter, v->height, v->round, {}, {*it->second, *v}, 0});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Evidence& a, const Evidence& b) {
    return std::tie(a.height, a.round, a.kind, a.accused) < std::tie(b.height, b.round, b.kind, b.accused);
  });
  return out;
}

std::vector<Evidence> detect_block_faults(std::span<const ProposalObservation> stream) {
  std::vector<Evidence> out;
  std::set<std::tuple<Height, Round, NodeId, std::uint8_t>> seen;
  for (const auto& o : stream) {
    if (o.proposal && o.proposal->proposer == o.leader && o.verdict && *o.verdict != ledger::BlockVerdict::valid) {
      if (!seen.emplace(o.height, o.round, o.leader, 3).second) continue;
      out.push_back(Evidence{EvidenceKind::wbc, o.leader, o.height, o.round, {*o.proposal}, {},
                             static_cast<std::uint8_t>(*o.verdict)});
    } else if (!o.proposal && o.timed_out) {
      if (!seen.emplace(o.height, o.round, o.leader, 4).second) continue;
      out.push_back(Evidence{EvidenceKind::nbc, o.leader, o.height, o.round, {}, {}, 0});
    }
  }
  return out;
}

LockAnalysis detect_lock_violation(Height h, std::span<const Vote> votes, std::span<const ledger::CommitCert> pols,
                                   std::size_t committee_size, bool complete, const ledger::KeyLookup& keys,
                                   const crypto::SignatureScheme& scheme) {
  LockAnalysis res;
  if (!complete) {
    res.partial = true;
    return res;
  }

  // Deduplicated signed votes of height h, per (type, round, voter) keeping every distinct value.
  std::map<std::tuple<std::uint8_t, Round, NodeId, crypto::Digest>, Vote> unique;
  for (const auto& v : votes) {
    if (v.height != h) continue;
    auto key = std::make_tuple(static_cast<std::uint8_t>(v.type), v.round, v.voter, v.value);
    if (unique.count(key)) continue;
    if (!signed_by(v, v.voter, keys, scheme)) continue;
    unique.emplace(key, v);
  }

  // Prevote quorums per round, counting one vote per voter and value.
  std::map<Round, std::map<crypto::Digest, std::size_t>> prevote_counts;
  std::map<NodeId, std::vector<const Vote*>> by_voter;
  for (const auto& [key, v] : unique) {
    if (v.type == ledger::VoteType::prevote) ++prevote_counts[v.round][v.value];
    by_voter[v.voter].push_back(&v);
  }
  std::map<Round, std::set<crypto::Digest>> quorums;
  for (const auto& [r, counts] : prevote_counts) {
    for (const auto& [value, n] : counts) {
      if (ledger::exceeds_quorum(n, committee_size)) quorums[r].insert(value);
    }
  }
  for (const auto& c : pols) {
    if (c.type != ledger::VoteType::prevote || c.height != h) continue;
    if (ledger::verify_commit_cert(c, keys, committee_size, scheme) != ledger::CertVerdict::valid) continue;
    quorums[c.round].insert(c.block_hash);
  }

  auto quorum_other_than = [&](const crypto::Digest& lock, Round lo, Round hi) {
    for (auto it = quorums.upper_bound(lo); it != quorums.end() && it->first < hi; ++it) {
      for (const auto& value : it->second) {
        if (value != lock) return true;
      }
    }
    return false;
  };

  for (auto& [voter, vs] : by_voter) {
    std::sort(vs.begin(), vs.end(), [](const Vote* a, const Vote* b) {
      return std::tie(a->round, a->type, a->value) < std::tie(b->round, b->type, b->value);
    });
    bool accused = false;
    for (const Vote* v : vs) {
      if (accused) break;
      if (v->type == ledger::VoteType::precommit) {
        if (!v->is_nil() && !(quorums.count(v->round) && quorums[v->round].count(v->value))) {
          res.evidence.push_back(Evidence{EvidenceKind::vol, voter, h, v->round, {}, {*v}, 0});
          accused = true;
        }
        continue;
      }
      // latest non-nil precommit strictly before this prevote's round
      const Vote* lock = nullptr;
      for (const Vote* c : vs) {
        if (c->type == ledger::VoteType::precommit && !c->is_nil() && c->round < v->round) lock = c;
      }
      if (!lock || lock->value == v->value) continue;
      if (quorum_other_than(lock->value, lock->round, v->round)) continue;
      res.evidence.push_back(Evidence{EvidenceKind::vol, voter, h, v->round, {}, {*lock, *v}, 0});
      accused = true;
    }
  }
  return res;
}

}  // namespace rescuesim::reputation
