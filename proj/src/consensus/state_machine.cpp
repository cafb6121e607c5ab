#include "rescuesim/consensus/state_machine.hpp"

#include <algorithm>
#include <sstream>

#include "rescuesim/crypto/merkle.hpp"

namespace rescuesim::consensus {

const char* to_string(Step s) {
  switch (s) {
    case Step::propose: return "propose";
    case Step::prevote: return "prevote";
    case Step::precommit: return "precommit";
    case Step::commit_wait: return "commit_wait";
  }
  return "?";
}

NodeConsensusState make_node_state(const crypto::KeyPair& key) {
  NodeConsensusState s;
  s.key = key;
  s.parent_hash = ledger::genesis_hash();
  return s;
}

namespace {

using ledger::Block;
using ledger::BlockVerdict;
using ledger::CommitCert;

constexpr Height kFutureWindow = 3;

class Machine {
 public:
  Machine(const ConsensusEnv& env, NodeConsensusState& s, StepOutput& out, SimTime now)
      : env_(env), s_(s), out_(out), now_(now) {}

  void handle(const Event& e) {
    if (std::holds_alternative<StartEvent>(e)) {
      if (!s_.started) {
        s_.started = true;
        enter_height(s_.height);
      }
    } else if (const auto* r = std::get_if<ReceiveEvent>(&e)) {
      if (s_.started) on_message(r->msg);
    } else {
      if (s_.started) on_timeout(std::get<TimeoutEvent>(e));
    }
    progress();
    out_.verifications += counter_.signatures;
  }

 private:
  const Committee& committee() const { return env_.committee_for(s_.height); }
  NodeId self() const { return s_.id(); }

  ledger::KeyLookup keys_for(Height h) const {
    return [this, h](NodeId id) -> std::optional<crypto::PublicKey> {
      if (!env_.committee_for(h).contains(id)) return std::nullopt;
      return env_.public_key(id);
    };
  }

  std::vector<NodeId> peers() const {
    std::vector<NodeId> out;
    for (NodeId id : committee().validators) {
      if (id != self()) out.push_back(id);
    }
    return out;
  }

  void send(Message m, std::vector<NodeId> to) {
    if (to.empty()) return;
    out_.out.push_back(Outbound{std::move(m), std::move(to)});
  }

  void timer(Step step, Round r, SimTime delay) {
    out_.timers.push_back(TimerRequest{delay, TimeoutEvent{s_.height, r, step}});
  }

  void observe(Observation::Kind kind, NodeId accused, Round r, std::vector<Message> msgs,
               BlockVerdict verdict = BlockVerdict::valid) {
    Observation o;
    o.kind = kind;
    o.accused = accused;
    o.height = s_.height;
    o.round = r;
    o.verdict = verdict;
    o.messages = std::move(msgs);
    out_.observations.push_back(std::move(o));
  }

  // ---- height / round transitions ----

  void enter_height(Height h) {
    s_.height = h;
    s_.rounds.clear();
    s_.blocks.clear();
    unlock();
    s_.member = committee().contains(self());
    s_.catch_up_height = 0;
    while (!s_.future.empty() && s_.future.begin()->first < h) s_.future.erase(s_.future.begin());
    while (!s_.pending_decisions.empty() && s_.pending_decisions.begin()->first < h) {
      s_.pending_decisions.erase(s_.pending_decisions.begin());
    }
    enter_round(0);

    if (auto it = s_.pending_decisions.find(h); it != s_.pending_decisions.end()) {
      Decision d = it->second;
      s_.pending_decisions.erase(it);
      if (apply_decision(d)) return;
    }
    if (auto it = s_.future.find(h); it != s_.future.end()) {
      auto buffered = std::move(it->second);
      s_.future.erase(it);
      for (const auto& m : buffered) {
        if (s_.height != h || s_.step == Step::commit_wait) break;
        on_message(m);
      }
    }
  }

  void enter_round(Round r) {
    s_.round = r;
    s_.step = Step::propose;
    s_.prevoted = false;
    s_.precommitted = false;
    s_.round_started_at = now_;
    if (!s_.member) return;
    timer(Step::propose, r, env_.timeouts.propose_for(r));
    if (leader_for(s_.height, r, committee()) == self()) propose();
  }

  void unlock() {
    s_.locked_value = crypto::kZeroDigest;
    s_.locked_round = -1;
    s_.locked_block.reset();
    s_.locked_pol.reset();
  }

  // ---- proposing ----

  ledger::LastProof build_last_proof() {
    ledger::LastProof lp;
    if (s_.height <= 1) return lp;
    lp.last_commit = s_.last_cert;
    std::vector<Bytes> leaves;
    ledger::ByteWriter all;
    all.put_u32(static_cast<std::uint32_t>(s_.last_votes.size()));
    for (const auto& v : s_.last_votes) {
      ledger::ByteWriter w;
      ledger::encode_vote(w, v);
      all.put_bytes(w.bytes());
      leaves.push_back(std::move(w).bytes());
    }
    if (leaves.empty()) leaves.push_back(Bytes{'n', 'o', '-', 'v', 'o', 't', 'e', 's'});
    lp.votes_root = crypto::MerkleTree(leaves).root();
    lp.votes_pointer = env_.store ? env_.store->put(all.bytes(), "validator-" + std::to_string(self()))
                                  : crypto::h0(all.bytes());
    return lp;
  }

  void propose() {
    std::shared_ptr<const Block> block;
    std::optional<CommitCert> pol;
    if (s_.locked() && s_.locked_block) {
      block = s_.locked_block;
      pol = s_.locked_pol;
    } else {
      auto txs = env_.mempool ? env_.mempool(self(), s_.height, s_.round) : std::vector<ledger::Transaction>{};
      block = std::make_shared<const Block>(ledger::assemble_block(std::move(txs), s_.parent_hash, s_.height,
                                                                   s_.round, s_.key, build_last_proof(),
                                                                   env_.tx_rules, *env_.scheme, false));
    }
    const auto chunks = ledger::chunk_block(*block, env_.chunk_size);
    Proposal p = make_proposal(s_.height, s_.round, s_.key, block->header.this_hash, chunks, pol, *env_.scheme);
    Message pm = make_message(self(), p);
    const auto to = peers();
    send(pm, to);
    for (const auto& c : chunks.chunks) {
      send(make_message(self(), BlockPart{s_.height, s_.round, chunks.root, c}), to);
    }
    auto& rs = s_.rounds[s_.round];
    ProposalSlot slot;
    slot.proposal = std::move(p);
    slot.message = std::move(pm);
    slot.block = block;
    slot.verdict = BlockVerdict::valid;
    rs.slot = std::move(slot);
    s_.blocks[block->header.this_hash] = block;
  }

  // ---- receiving ----

  void on_message(const Message& m) {
    switch (m.kind()) {
      case MsgKind::catch_up: answer_catch_up(m); return;
      case MsgKind::decision: on_decision(m); return;
      default: break;
    }
    const Height h = m.height();
    if (h < s_.height) return;
    if (h > s_.height) {
      if (h <= s_.height + kFutureWindow) {
        auto& buf = s_.future[h];
        if (buf.size() < env_.future_buffer_limit) buf.push_back(m);
      }
      maybe_catch_up(m.sender, h);
      return;
    }
    if (!s_.member || s_.step == Step::commit_wait) return;
    if (!committee().contains(m.sender)) return;
    switch (m.kind()) {
      case MsgKind::proposal: on_proposal(m); break;
      case MsgKind::vote: on_vote(m); break;
      case MsgKind::block_part: on_part(m); break;
      default: break;
    }
  }

  void maybe_catch_up(NodeId peer, Height seen) {
    if (peer == self()) return;
    const bool behind = seen > s_.height + 1 || (seen == s_.height + 1 && s_.step != Step::commit_wait);
    if (!behind) return;
    if (s_.catch_up_height == s_.height && now_ - s_.catch_up_at < env_.timeouts.catch_up_retry) return;
    s_.catch_up_height = s_.height;
    s_.catch_up_at = now_;
    send(make_message(self(), CatchUpRequest{s_.height}), {peer});
  }

  void answer_catch_up(const Message& m) {
    if (!env_.decision_of) return;
    const Height from = m.catch_up()->from;
    const Height upto = s_.step == Step::commit_wait ? s_.height : s_.height - 1;
    for (Height h = from; h <= upto && h < from + env_.max_catch_up; ++h) {
      auto d = env_.decision_of(self(), h);
      if (!d) break;
      send(make_message(self(), std::move(*d)), {m.sender});
    }
  }

  void on_decision(const Message& m) {
    const Decision& d = *m.decision();
    const Height h = d.header.height;
    if (h < s_.height || (h == s_.height && s_.step == Step::commit_wait)) return;
    if (h > s_.height) {
      if (h <= s_.height + env_.max_catch_up) s_.pending_decisions.try_emplace(h, d);
      maybe_catch_up(m.sender, h);
      return;
    }
    apply_decision(d);
  }

  bool apply_decision(const Decision& d) {
    const auto& hdr = d.header;
    const auto& cert = d.cert;
    if (cert.type != VoteType::precommit || hdr.height != s_.height || cert.height != s_.height) return false;
    if (cert.block_hash != hdr.this_hash || hdr.prev_hash != s_.parent_hash) return false;
    if (ledger::compute_header_hash(hdr) != hdr.this_hash) return false;
    const auto verdict = ledger::verify_commit_cert(cert, keys_for(s_.height), committee().size(), *env_.scheme,
                                                    &counter_);
    if (verdict != ledger::CertVerdict::valid) return false;
    std::shared_ptr<const Block> block;
    if (auto it = s_.blocks.find(hdr.this_hash); it != s_.blocks.end()) block = it->second;
    commit(cert.round, hdr, block, cert);
    return true;
  }

  void on_proposal(const Message& m) {
    const Proposal& p = *m.proposal();
    if (p.proposer != m.sender || p.proposer != leader_for(s_.height, p.round, committee())) return;
    auto pk = env_.public_key(p.proposer);
    ++counter_.signatures;
    if (!pk || !env_.scheme->verify(p.signature, p.sign_bytes(), *pk)) return;
    if (p.part_count == 0) return;
    auto& rs = s_.rounds[p.round];
    rs.senders.insert(m.sender);
    if (rs.slot) {
      if (!(rs.slot->proposal == p)) {
        observe(Observation::Kind::conflicting_proposal, p.proposer, p.round, {rs.slot->message, m});
      }
      return;
    }
    ProposalSlot slot;
    slot.proposal = p;
    slot.message = m;
    slot.assembler = std::make_shared<ledger::ChunkAssembler>(p.parts_root, p.part_count);
    rs.slot = std::move(slot);
    for (const auto& part : rs.early_parts) {
      const auto* bp = part.block_part();
      if (bp->parts_root == p.parts_root) rs.slot->assembler->add(bp->chunk);
    }
    rs.early_parts.clear();
    try_complete(p.round);
  }

  void on_part(const Message& m) {
    const BlockPart& bp = *m.block_part();
    auto& rs = s_.rounds[bp.round];
    if (!rs.slot) {
      if (rs.early_parts.size() < env_.future_buffer_limit) rs.early_parts.push_back(m);
      return;
    }
    auto& slot = *rs.slot;
    if (slot.block || !slot.assembler || bp.parts_root != slot.proposal.parts_root) return;
    slot.assembler->add(bp.chunk);
    try_complete(bp.round);
  }

  void try_complete(Round r) {
    auto& slot = *s_.rounds[r].slot;
    if (slot.block || !slot.assembler || !slot.assembler->complete()) return;
    std::shared_ptr<const Block> block;
    try {
      block = env_.decode ? env_.decode(*slot.assembler)
                          : std::make_shared<const Block>(slot.assembler->assemble());
    } catch (const ledger::DecodeError&) {
      block.reset();
    }
    slot.assembler.reset();
    if (!block) {
      slot.verdict = BlockVerdict::bad_hash;
      return;
    }
    slot.block = block;
    if (block->header.this_hash != slot.proposal.block_hash) {
      slot.verdict = BlockVerdict::bad_hash;
      return;
    }
    slot.verdict = validate(*block, slot.proposal);
    if (*slot.verdict == BlockVerdict::valid) s_.blocks[block->header.this_hash] = block;
  }

  BlockVerdict validate(const Block& b, const Proposal& p) {
    const Height h = s_.height;
    ledger::BlockContext ctx;
    ctx.parent_hash = s_.parent_hash;
    ctx.parent_height = h - 1;
    ctx.current_round = p.round;
    ctx.leader_at = [this, h](Round r) { return leader_for(h, r, env_.committee_for(h)); };
    ctx.proposer_keys = keys_for(h);
    if (h > 1) {
      ctx.last_commit_keys = keys_for(h - 1);
      ctx.last_committee_size = env_.committee_for(h - 1).size();
    }
    ctx.tx_rules = env_.tx_rules;
    ctx.body_verdict = env_.body_verdict;
    ctx.counter = &counter_;
    const auto v = ledger::validate_block(b, ctx, *env_.scheme);
    if (v != BlockVerdict::valid) return v;
    if (b.header.round != p.round || p.pol) {
      // A block from an earlier round needs a proof of lock between its creation and now.
      if (!p.pol) return BlockVerdict::bad_round;
      const auto& pol = *p.pol;
      if (pol.type != VoteType::prevote || pol.height != h || pol.block_hash != b.header.this_hash ||
          pol.round < b.header.round || pol.round >= p.round) {
        return BlockVerdict::bad_round;
      }
      if (ledger::verify_commit_cert(pol, keys_for(h), committee().size(), *env_.scheme, &counter_) !=
          ledger::CertVerdict::valid) {
        return BlockVerdict::bad_round;
      }
    }
    return BlockVerdict::valid;
  }

  void on_vote(const Message& m) {
    const Vote& v = *m.vote();
    if (v.voter != m.sender) return;
    auto pk = env_.public_key(v.voter);
    ++counter_.signatures;
    if (!pk || !env_.scheme->verify(v.signature, v.sign_bytes(), *pk)) return;
    auto& rs = s_.rounds[v.round];
    rs.senders.insert(v.voter);
    auto& set = v.type == VoteType::prevote ? rs.prevotes : rs.precommits;
    Vote existing;
    if (set.add(v, &existing) == VoteSet::AddResult::conflicting) {
      observe(Observation::Kind::conflicting_vote, v.voter, v.round, {make_message(v.voter, existing), m});
    }
  }

  void on_timeout(const TimeoutEvent& t) {
    if (t.step == Step::commit_wait) {
      if (s_.step == Step::commit_wait && t.height == s_.height) enter_height(s_.height + 1);
      return;
    }
    if (t.height != s_.height || t.round != s_.round || !s_.member || s_.step == Step::commit_wait) return;
    switch (t.step) {
      case Step::propose:
        if (s_.step == Step::propose) {
          auto& rs = s_.rounds[s_.round];
          if (!rs.slot) {
            observe(Observation::Kind::missing_proposal, leader_for(s_.height, s_.round, committee()), s_.round, {});
          }
          cast(VoteType::prevote, s_.locked() ? s_.locked_value : crypto::kZeroDigest);
        }
        break;
      case Step::prevote:
        if (s_.step == Step::prevote) cast(VoteType::precommit, crypto::kZeroDigest);
        break;
      case Step::precommit:
        enter_round(s_.round + 1);
        break;
      case Step::commit_wait:
        break;
    }
  }

  // ---- voting and progress ----

  void cast(VoteType type, const crypto::Digest& value) {
    Vote v = make_vote(type, s_.height, s_.round, value, s_.key, *env_.scheme);
    auto& rs = s_.rounds[s_.round];
    (type == VoteType::prevote ? rs.prevotes : rs.precommits).add(v);
    send(make_message(self(), v), peers());
    if (type == VoteType::prevote) {
      s_.prevoted = true;
      s_.step = Step::prevote;
      timer(Step::prevote, s_.round, env_.timeouts.prevote);
    } else {
      s_.precommitted = true;
      s_.step = Step::precommit;
      timer(Step::precommit, s_.round, env_.timeouts.precommit);
    }
  }

  std::shared_ptr<const Block> known_block(const crypto::Digest& hash) const {
    if (auto it = s_.blocks.find(hash); it != s_.blocks.end()) return it->second;
    if (s_.locked_block && s_.locked_block->header.this_hash == hash) return s_.locked_block;
    return nullptr;
  }

  void commit(Round r, const ledger::BlockHeader& header, std::shared_ptr<const Block> block, CommitCert cert) {
    CommitRecord rec;
    rec.height = s_.height;
    rec.round = r;
    rec.block_hash = header.this_hash;
    rec.header = header;
    rec.cert = cert;
    rec.block = block;
    rec.via_certificate = !block;
    out_.commits.push_back(std::move(rec));

    s_.last_votes.clear();
    for (const auto& [round, rs] : s_.rounds) {
      for (const auto& [id, v] : rs.prevotes.votes()) s_.last_votes.push_back(v);
      for (const auto& [id, v] : rs.precommits.votes()) s_.last_votes.push_back(v);
    }
    s_.last_cert = std::move(cert);
    s_.parent_hash = header.this_hash;
    s_.step = Step::commit_wait;
    s_.commit_time = now_;
    timer(Step::commit_wait, r, env_.timeouts.commit_wait);
    if (s_.member && block && env_.observers) {
      auto obs = env_.observers(s_.height);
      obs.erase(std::remove(obs.begin(), obs.end(), self()), obs.end());
      send(make_message(self(), Decision{header, s_.last_cert}), std::move(obs));
    }
  }

  bool try_commit() {
    const auto z = committee().size();
    for (auto& [r, rs] : s_.rounds) {
      const auto res = rs.precommits.result(z);
      if (res.kind != TallyResult::Kind::block) continue;
      auto block = known_block(res.value);
      if (!block) {
        const auto votes = rs.precommits.votes_for(res.value);
        for (const auto& v : votes) {
          if (v.voter != self()) {
            maybe_catch_up_now(v.voter);
            break;
          }
        }
        continue;
      }
      auto cert = ledger::make_commit_cert(rs.precommits.votes_for(res.value), keys_for(s_.height),
                                           env_.aggregate_certificates, *env_.scheme);
      commit(r, block->header, block, std::move(cert));
      return true;
    }
    return false;
  }

  void maybe_catch_up_now(NodeId peer) {
    if (s_.catch_up_height == s_.height && now_ - s_.catch_up_at < env_.timeouts.catch_up_retry) return;
    s_.catch_up_height = s_.height;
    s_.catch_up_at = now_;
    // Ask for the decision of the current height itself.
    send(make_message(self(), CatchUpRequest{s_.height}), {peer});
  }

  void decide_prevote(ProposalSlot& slot) {
    if (*slot.verdict != BlockVerdict::valid) {
      if (!slot.wbc_reported) {
        slot.wbc_reported = true;
        observe(Observation::Kind::invalid_block, slot.proposal.proposer, slot.proposal.round, {slot.message},
                *slot.verdict);
      }
      cast(VoteType::prevote, s_.locked() ? s_.locked_value : crypto::kZeroDigest);
      return;
    }
    const auto& hash = slot.proposal.block_hash;
    if (!s_.locked() || s_.locked_value == hash) {
      cast(VoteType::prevote, hash);
    } else if (slot.proposal.pol && static_cast<std::int64_t>(slot.proposal.pol->round) > s_.locked_round) {
      unlock();
      cast(VoteType::prevote, hash);
    } else {
      cast(VoteType::prevote, s_.locked_value);
    }
  }

  void progress() {
    for (int guard = 0; guard < 64; ++guard) {
      if (!s_.started || !s_.member || s_.step == Step::commit_wait) return;
      if (try_commit()) return;
      const auto z = committee().size();

      Round target = s_.round;
      for (const auto& [r, rs] : s_.rounds) {
        if (r > target && rs.senders.size() >= committee().max_faulty() + 1) target = r;
      }
      if (target > s_.round) {
        enter_round(target);
        continue;
      }

      if (s_.locked()) {
        for (const auto& [r, rs] : s_.rounds) {
          if (static_cast<std::int64_t>(r) <= s_.locked_round || r >= s_.round) continue;
          const auto res = rs.prevotes.result(z);
          if (res.kind != TallyResult::Kind::none && res.value != s_.locked_value) {
            unlock();
            break;
          }
        }
      }

      auto& rs = s_.rounds[s_.round];
      if (rs.precommits.result(z).kind == TallyResult::Kind::nil) {
        // the round is over whatever our own step
        enter_round(s_.round + 1);
        continue;
      }
      if (s_.step == Step::propose) {
        if (rs.slot && rs.slot->verdict) {
          decide_prevote(*rs.slot);
          continue;
        }
        return;
      }
      if (s_.step == Step::prevote) {
        const auto res = rs.prevotes.result(z);
        if (res.kind == TallyResult::Kind::block) {
          auto block = known_block(res.value);
          if (!block) return;
          s_.locked_value = res.value;
          s_.locked_round = s_.round;
          s_.locked_block = block;
          s_.locked_pol = ledger::make_commit_cert(rs.prevotes.votes_for(res.value), keys_for(s_.height), true,
                                                   *env_.scheme);
          cast(VoteType::precommit, res.value);
          continue;
        }
        if (res.kind == TallyResult::Kind::nil) {
          unlock();
          cast(VoteType::precommit, crypto::kZeroDigest);
          continue;
        }
        return;
      }
      return;
    }
  }

  const ConsensusEnv& env_;
  NodeConsensusState& s_;
  StepOutput& out_;
  SimTime now_;
  ledger::VerifyCounter counter_;
};

std::string describe(const Event& e) {
  if (std::holds_alternative<StartEvent>(e)) return "start";
  if (const auto* r = std::get_if<ReceiveEvent>(&e)) {
    std::ostringstream os;
    os << "recv " << to_string(r->msg.kind()) << " from " << r->msg.sender << " h=" << r->msg.height()
       << " r=" << r->msg.round();
    return os.str();
  }
  const auto& t = std::get<TimeoutEvent>(e);
  std::ostringstream os;
  os << "timeout " << to_string(t.step) << " h=" << t.height << " r=" << t.round;
  return os.str();
}

std::string position(const NodeConsensusState& s) {
  std::ostringstream os;
  os << s.height << "/" << s.round << "/" << to_string(s.step);
  return os.str();
}

}  // namespace

StepOutput step(const ConsensusEnv& env, NodeConsensusState&& state, const Event& event, SimTime now) {
  StepOutput out;
  out.state = std::move(state);
  const std::string before = env.trace ? position(out.state) : std::string{};
  Machine m(env, out.state, out, now);
  m.handle(event);
  if (env.trace) {
    std::ostringstream os;
    os << "{\"t\":" << now << ",\"node\":" << out.state.id() << ",\"event\":\"" << describe(event)
       << "\",\"transition\":\"" << before << " -> " << position(out.state) << "\"}";
    out.trace = os.str();
  }
  return out;
}

}  // namespace rescuesim::consensus
