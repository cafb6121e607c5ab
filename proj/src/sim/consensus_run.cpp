#include "rescuesim/sim/consensus_run.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "rescuesim/consensus/state_machine.hpp"
#include "rescuesim/ledger/chunking.hpp"
#include "rescuesim/ledger/store.hpp"
#include "rescuesim/reputation/detectors.hpp"
#include "rescuesim/reputation/report.hpp"

namespace rescuesim::sim {

namespace {

using consensus::Committee;
using consensus::Message;
using consensus::MsgKind;
using consensus::Outbound;

struct Item {
  SimTime at;
  std::uint64_t seq;
  NodeId node;
  consensus::Event ev;
  NodeId from;
  int marker = 0;  // 1 opens the partition window, 2 heals it
  bool operator>(const Item& o) const { return std::tie(at, seq) > std::tie(o.at, o.seq); }
};

bool consensus_kind(MsgKind k) {
  return k == MsgKind::proposal || k == MsgKind::vote || k == MsgKind::block_part;
}

class ConsensusRun {
 public:
  ConsensusRun(const ScenarioConfig& c, const RunOptions& opt)
      : c_(c),
        opt_(opt),
        scheme_(c.consensus.scheme),
        U_(c.network.full_nodes),
        Z_(c.consensus.committee),
        E_(c.consensus.reelection),
        transport_(c.network, c.network.full_nodes, c.seed),
        rep_(reputation_params(), all_ids()) {
    const auto& sig = crypto::default_scheme();
    const auto key_seed = derive_seed(c.seed, "keys");
    for (NodeId i = 0; i < U_; ++i) keys_.push_back(sig.keygen(key_seed, i));
    build_tx_pool();
    choose_adversary();
    setup_env();
    m_.scheme = to_string(scheme_);
    m_.seed = c.seed;
    m_.committee = Z_;
  }

  ConsensusMetrics run() {
    for (NodeId i = 0; i < U_; ++i) {
      nodes_.push_back(consensus::make_node_state(keys_[i]));
      push(0, i, consensus::StartEvent{}, i);
    }
    if (c_.network.partition.active()) {
      queue_.push(Item{seconds_to_sim(c_.network.partition.start), seq_++, 0, consensus::StartEvent{}, 0, 1});
      queue_.push(Item{seconds_to_sim(c_.network.partition.end), seq_++, 0, consensus::StartEvent{}, 0, 2});
    }
    const SimTime limit = seconds_to_sim(c_.consensus.max_time);
    SimTime now = 0;
    while (!queue_.empty() && canonical_ < c_.consensus.heights) {
      Item item = queue_.top();
      queue_.pop();
      if (item.at > limit) break;
      now = item.at;
      if (item.marker == 1) {
        open_partition();
        continue;
      }
      if (item.marker == 2) {
        on_heal();
        continue;
      }
      if (const auto* r = std::get_if<consensus::ReceiveEvent>(&item.ev)) {
        if (transport_.blocked(item.from, item.node, now)) {
          transport_.note_partition_drop();
          continue;
        }
        transport_.note_delivered();
        if (!byz_[item.node]) archive(r->msg);
      }
      handle(item.node, item.ev, now);
    }
    finish(now);
    return std::move(m_);
  }

 private:
  reputation::ReputationParams reputation_params() const {
    auto p = c_.reputation;
    if (scheme_ == ConsensusScheme::art) p.eta = 0.0;
    return p;
  }

  std::vector<NodeId> all_ids() const {
    std::vector<NodeId> ids(c_.network.full_nodes);
    for (NodeId i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
  }

  std::size_t level1_size() const { return scheme_ == ConsensusScheme::proposal ? c_.consensus.level1 : Z_; }

  // ---- setup ----

  void build_tx_pool() {
    const auto& sig = crypto::default_scheme();
    const auto seed = derive_seed(c_.seed, "transactions");
    for (std::size_t i = 0; i < c_.consensus.tx_pool; ++i) {
      const auto uav = sig.keygen(seed, static_cast<NodeId>(2 * i));
      const auto veh = sig.keygen(seed, static_cast<NodeId>(2 * i + 1));
      const std::string raw = "task-data-" + std::to_string(i);
      const std::string out = "task-result-" + std::to_string(i);
      ledger::DataPointer ptr{crypto::h0(crypto::as_bytes(raw)), crypto::h0(crypto::as_bytes(out))};
      pool_.push_back(ledger::make_offchain_tx(uav, std::span<const crypto::KeyPair>(&veh, 1), ptr,
                                               "offload task " + std::to_string(i), static_cast<std::int64_t>(i),
                                               ledger::ContentStore::certificate(ptr.raw), sig));
    }
  }

  Committee elect(std::size_t epoch) {
    Rng rng(derive_seed(c_.seed, "election-" + std::to_string(epoch)));
    std::vector<consensus::Candidate> cands;
    const NodeId colluder = colluders_.empty() ? 0 : colluders_.front();
    for (NodeId i = 0; i < U_; ++i) {
      consensus::Candidate cand;
      cand.id = i;
      cand.raw = rep_.raw(i);
      cand.normalized = rep_.normalized(i);
      if (std::find(colluders_.begin(), colluders_.end(), i) != colluders_.end()) cand.forced_vote = colluder;
      cands.push_back(cand);
    }
    consensus::ElectionConfig ec{Z_, c_.consensus.level1, c_.consensus.election_sample};
    return consensus::elect_validators(cands, ec, rng);
  }

  Committee with_level1(Committee com, std::size_t psi) const {
    com.level1.assign(com.validators.begin(), com.validators.begin() + static_cast<long>(psi));
    return com;
  }

  void choose_adversary() {
    // Byzantine members are drawn from the initial level-1 set (then the rest of the
    // initial committee), so every scheme faces the same adversaries.
    byz_.assign(U_, false);
    plan_.assign(U_, Behavior::honest);
    Committee initial = elect(0);
    std::vector<NodeId> pick = initial.level1;
    Rng rng(derive_seed(c_.seed, "adversary"));
    rng.shuffle(pick);
    std::vector<NodeId> rest(initial.validators.begin() + static_cast<long>(initial.level1.size()),
                             initial.validators.end());
    rng.shuffle(rest);
    pick.insert(pick.end(), rest.begin(), rest.end());
    const std::size_t b = std::min(c_.byzantine_count(), pick.size());
    for (std::size_t i = 0; i < b; ++i) {
      const NodeId id = pick[i];
      byz_[id] = true;
      plan_[id] = c_.adversary.behaviors[i % c_.adversary.behaviors.size()];
      m_.byzantine.push_back(id);
      if (plan_[id] == Behavior::collusion) colluders_.push_back(id);
    }
    std::sort(m_.byzantine.begin(), m_.byzantine.end());
    // The first election ran without collusion; rerun it with the colluders' forced votes.
    if (!colluders_.empty()) initial = elect(0);
    if (scheme_ == ConsensusScheme::naive) {
      initial = consensus::static_committee(initial.validators, Z_);
    } else {
      initial = with_level1(std::move(initial), level1_size());
    }
    committees_.emplace(0, std::move(initial));
    m_.committees.push_back(committees_.at(0).validators);
  }

  // The cut-off set is taken from the committee running when the window opens.
  void open_partition() {
    const auto& p = c_.network.partition;
    const auto& com = committee_of(canonical_ + 1).validators;
    const std::size_t cut = static_cast<std::size_t>(std::llround(p.fraction * static_cast<double>(Z_)));
    const std::size_t cut_byz = static_cast<std::size_t>(std::llround(p.byzantine_share * static_cast<double>(cut)));
    std::vector<NodeId> bad, good;
    for (NodeId id : com) (byz_[id] ? bad : good).push_back(id);
    Rng rng(derive_seed(c_.seed, "partition"));
    rng.shuffle(bad);
    rng.shuffle(good);
    std::vector<int> groups(U_, 0);
    std::size_t placed = 0;
    for (std::size_t i = 0; i < bad.size() && i < cut_byz && placed < cut; ++i, ++placed) groups[bad[i]] = 1;
    for (std::size_t i = 0; i < good.size() && placed < cut; ++i, ++placed) groups[good[i]] = 1;
    transport_.set_partition(std::move(groups), seconds_to_sim(p.start), seconds_to_sim(p.end));
  }

  void setup_env() {
    env_.committee_for = [this](Height h) -> const Committee& { return committee_of(h); };
    env_.public_key = [this](NodeId id) -> std::optional<crypto::PublicKey> {
      if (id < U_) return keys_[id].pk;
      return std::nullopt;
    };
    env_.observers = [this](Height h) {
      std::vector<NodeId> out;
      const auto& com = committee_of(h);
      for (NodeId i = 0; i < U_; ++i) {
        if (!com.contains(i)) out.push_back(i);
      }
      return out;
    };
    env_.mempool = [this](NodeId, Height h, Round) {
      std::vector<ledger::Transaction> txs;
      const std::size_t n = c_.consensus.block_txs;
      for (const auto& [hash, tx] : pending_reports_) {
        if (txs.size() >= n) break;
        txs.push_back(tx);
      }
      for (std::size_t i = 0; txs.size() < n; ++i) {
        txs.push_back(pool_[(static_cast<std::size_t>(h) * n + i) % pool_.size()]);
      }
      return txs;
    };
    env_.body_verdict = [this](const ledger::Block& b) {
      auto it = body_memo_.find(b.header.this_hash);
      if (it != body_memo_.end()) return it->second;
      const auto v = ledger::validate_body(b, env_.tx_rules);
      body_memo_.emplace(b.header.this_hash, v);
      return v;
    };
    env_.decode = [this](const ledger::ChunkAssembler& a) {
      auto it = decode_memo_.find(a.root());
      if (it != decode_memo_.end()) return it->second;
      auto block = std::make_shared<const ledger::Block>(a.assemble());
      decode_memo_.emplace(a.root(), block);
      return block;
    };
    env_.decision_of = [this](NodeId id, Height h) -> std::optional<consensus::Decision> {
      auto& d = decisions_[id];
      auto it = d.find(h);
      if (it == d.end()) return std::nullopt;
      return it->second;
    };
    env_.tx_rules.report_fee = c_.consensus.report_fee;
    env_.aggregate_certificates = scheme_ != ConsensusScheme::naive;
    env_.chunk_size = c_.consensus.chunk_size;
    env_.trace = opt_.trace != nullptr;
    auto& t = env_.timeouts;
    t.propose = seconds_to_sim(c_.consensus.propose_timeout);
    t.propose_increment = seconds_to_sim(c_.consensus.propose_increment);
    t.prevote = seconds_to_sim(c_.consensus.prevote_timeout);
    t.precommit = seconds_to_sim(c_.consensus.precommit_timeout);
    t.commit_wait = seconds_to_sim(c_.consensus.commit_wait);
  }

  // ---- committees ----

  const Committee& committee_of(Height h) {
    const std::size_t epoch = scheme_ == ConsensusScheme::naive ? 0 : static_cast<std::size_t>((h - 1) / E_);
    if (auto it = committees_.find(epoch); it != committees_.end()) return it->second;
    if (canonical_ < epoch * E_) {
      throw InvariantViolation("committee for epoch " + std::to_string(epoch) + " requested before height " +
                               std::to_string(epoch * E_) + " committed");
    }
    auto com = with_level1(elect(epoch), level1_size());
    m_.committees.push_back(com.validators);
    return committees_.emplace(epoch, std::move(com)).first->second;
  }

  ledger::KeyLookup keys_for(Height h) {
    const Committee* com = &committee_of(h);
    return [this, com](NodeId id) -> std::optional<crypto::PublicKey> {
      if (!com->contains(id)) return std::nullopt;
      return keys_[id].pk;
    };
  }

  // ---- event plumbing ----

  void push(SimTime at, NodeId node, consensus::Event ev, NodeId from) {
    queue_.push(Item{at, seq_++, node, std::move(ev), from, 0});
  }

  void handle(NodeId n, const consensus::Event& ev, SimTime now) {
    auto out = consensus::step(env_, std::move(nodes_[n]), ev, now);
    nodes_[n] = std::move(out.state);
    m_.verifications += out.verifications;
    if (opt_.trace && !out.trace.empty()) *opt_.trace << out.trace << '\n';
    for (const auto& rec : out.commits) on_commit(n, rec, now);
    if (!byz_[n]) {
      for (const auto& o : out.observations) observe(n, o);
    }
    auto outbound = byz_[n] ? inject(n, std::move(out.out)) : std::move(out.out);
    for (const auto& o : outbound) {
      const auto kind = o.msg.kind();
      if (!byz_[n]) archive(o.msg);
      for (NodeId to : o.recipients) {
        m_.bytes_sent += o.msg.wire_bytes;
        if (consensus_kind(kind)) ++m_.consensus_messages;
        if (auto at = transport_.send(n, to, o.msg.wire_bytes, now)) {
          push(*at, to, consensus::ReceiveEvent{o.msg}, n);
        }
      }
    }
    for (const auto& t : out.timers) push(now + t.delay, n, t.event, n);
  }

  void archive(const Message& m) {
    const auto kind = m.kind();
    if (kind != MsgKind::proposal && kind != MsgKind::vote) return;
    const Height h = m.height();
    if (h <= detected_) return;
    auto& a = archive_[h];
    if (a.seen.insert(m.payload.get()).second) a.messages.push_back(m);
  }

  void observe(NodeId n, const consensus::Observation& o) {
    using K = consensus::Observation::Kind;
    if (o.kind != K::missing_proposal && o.kind != K::invalid_block) return;
    if (o.height <= detected_) return;
    const int code = o.kind == K::missing_proposal ? -1 : static_cast<int>(o.verdict);
    observations_[o.height][{o.round, o.accused, code}].insert(n);
  }

  // ---- adversary ----

  Behavior behavior_at(NodeId n, Height h) const {
    const Behavior b = plan_[n];
    if (b == Behavior::spoofing) return h < c_.adversary.switch_height ? Behavior::honest : c_.adversary.after_switch;
    return b;
  }

  std::shared_ptr<const ledger::Block> own_block(NodeId n, Round r) const {
    const auto& s = nodes_[n];
    auto it = s.rounds.find(r);
    if (it == s.rounds.end() || !it->second.slot) return nullptr;
    return it->second.slot->block;
  }

  void emit_block(NodeId n, const ledger::Block& b, Round r, std::vector<NodeId> to, std::vector<Outbound>& out) {
    const auto& sig = crypto::default_scheme();
    const auto chunks = ledger::chunk_block(b, c_.consensus.chunk_size);
    auto p = consensus::make_proposal(b.header.height, r, keys_[n], b.header.this_hash, chunks, std::nullopt, sig);
    out.push_back(Outbound{consensus::make_message(n, p), to});
    for (const auto& ch : chunks.chunks) {
      out.push_back(Outbound{consensus::make_message(n, consensus::BlockPart{b.header.height, r, chunks.root, ch}), to});
    }
  }

  std::vector<Outbound> inject(NodeId n, std::vector<Outbound> in) {
    const auto& sig = crypto::default_scheme();
    std::vector<Outbound> out;
    std::set<crypto::Digest> replaced_roots;
    std::map<crypto::Digest, std::vector<NodeId>> restricted_roots;
    for (auto& o : in) {
      const auto kind = o.msg.kind();
      if (kind == MsgKind::decision || kind == MsgKind::catch_up) {
        if (!(plan_[n] == Behavior::spoofing && behavior_at(n, nodes_[n].height) == Behavior::silent)) {
          out.push_back(std::move(o));
        }
        continue;
      }
      const Height h = o.msg.height();
      const Round r = o.msg.round();
      const Behavior b = behavior_at(n, h);
      const bool mute = plan_[n] == Behavior::spoofing && b == Behavior::silent;
      if (mute) continue;
      if (kind == MsgKind::block_part) {
        const auto& root = o.msg.block_part()->parts_root;
        if (replaced_roots.count(root)) continue;
        if (auto it = restricted_roots.find(root); it != restricted_roots.end()) o.recipients = it->second;
      }
      switch (b) {
        case Behavior::silent:
          if (kind == MsgKind::proposal || kind == MsgKind::block_part) continue;
          out.push_back(std::move(o));
          break;
        case Behavior::cp:
          if (kind == MsgKind::proposal) {
            auto blk = own_block(n, r);
            if (!blk || o.recipients.size() < 2) {
              out.push_back(std::move(o));
              break;
            }
            const std::size_t half = o.recipients.size() / 2;
            std::vector<NodeId> first(o.recipients.begin(), o.recipients.begin() + static_cast<long>(half));
            std::vector<NodeId> second(o.recipients.begin() + static_cast<long>(half), o.recipients.end());
            restricted_roots[o.msg.proposal()->parts_root] = first;
            o.recipients = first;
            out.push_back(std::move(o));
            const auto alt = ledger::assemble_block({}, blk->header.prev_hash, h, r, keys_[n],
                                                    blk->header.last_proof, env_.tx_rules, sig, false);
            emit_block(n, alt, r, second, out);
          } else {
            out.push_back(std::move(o));
          }
          break;
        case Behavior::cv:
          if (kind == MsgKind::vote && o.recipients.size() >= 2) {
            const auto& v = *o.msg.vote();
            const crypto::Digest other =
                v.is_nil() ? crypto::tagged_hash("cv", crypto::as_bytes(std::to_string(h) + "/" + std::to_string(r)))
                           : crypto::kZeroDigest;
            const std::size_t half = o.recipients.size() / 2;
            std::vector<NodeId> second(o.recipients.begin() + static_cast<long>(half), o.recipients.end());
            o.recipients.resize(half);
            out.push_back(std::move(o));
            out.push_back(Outbound{consensus::make_message(n, consensus::make_vote(v.type, h, r, other, keys_[n], sig)),
                                   second});
          } else {
            out.push_back(std::move(o));
          }
          break;
        case Behavior::vol:
          if (kind == MsgKind::vote) {
            const auto& v = *o.msg.vote();
            const auto key = std::make_pair(h, r);
            if (v.type == ledger::VoteType::precommit && vol_done_[n].count(key)) continue;
            const bool trigger = v.type == ledger::VoteType::prevote && !v.is_nil();
            auto to = o.recipients;
            out.push_back(std::move(o));
            if (trigger && vol_done_[n].insert(key).second) {
              // precommit for a value that never gathered a prevote quorum
              const auto fake = crypto::tagged_hash("vol", crypto::as_bytes(std::to_string(h) + "/" + std::to_string(r)));
              out.push_back(Outbound{
                  consensus::make_message(n, consensus::make_vote(ledger::VoteType::precommit, h, r, fake, keys_[n], sig)), to});
            }
          } else {
            out.push_back(std::move(o));
          }
          break;
        case Behavior::invalid:
          if (kind == MsgKind::proposal) {
            auto blk = own_block(n, r);
            if (!blk) {
              out.push_back(std::move(o));
              break;
            }
            replaced_roots.insert(o.msg.proposal()->parts_root);
            ledger::Block bad = *blk;
            bad.header.tx_root = crypto::tagged_hash("corrupt", crypto::as_bytes(std::to_string(h)));
            bad.header.round = r;
            bad.header.this_hash = ledger::compute_header_hash(bad.header);
            bad.header.proposer_signature = sig.sign(bad.header.this_hash, keys_[n].sk);
            emit_block(n, bad, r, o.recipients, out);
          } else {
            out.push_back(std::move(o));
          }
          break;
        default:
          out.push_back(std::move(o));
          break;
      }
    }
    return out;
  }

  // ---- commits, reputation and forensics ----

  void on_commit(NodeId n, const consensus::CommitRecord& rec, SimTime now) {
    decisions_[n][rec.height] = consensus::Decision{rec.header, rec.cert};
    if (rec.block) blocks_[rec.block_hash] = rec.block;
    auto it = registry_.find(rec.height);
    if (it != registry_.end()) {
      if (it->second != rec.block_hash) {
        ++m_.conflicting_commits;
        std::ostringstream os;
        os << "safety violated at height " << rec.height << ": node " << n << " committed "
           << crypto::to_hex(rec.block_hash).substr(0, 16) << " but " << crypto::to_hex(it->second).substr(0, 16)
           << " was committed first (scheme " << to_string(scheme_) << ", seed " << c_.seed << ")";
        throw InvariantViolation(os.str());
      }
      return;
    }
    if (rec.height != canonical_ + 1) {
      throw InvariantViolation("height " + std::to_string(rec.height) + " committed before height " +
                               std::to_string(canonical_ + 1));
    }
    registry_.emplace(rec.height, rec.block_hash);
    canonical_ = rec.height;
    on_canonical(rec, now);
  }

  void on_canonical(const consensus::CommitRecord& rec, SimTime now) {
    const Height h = rec.height;
    HeightRecord hr;
    hr.height = h;
    hr.round = rec.round;
    hr.commit_time = sim_to_seconds(now);
    hr.latency = hr.commit_time - last_commit_time_;
    last_commit_time_ = hr.commit_time;
    hr.proposer = rec.header.proposer;
    hr.proposer_byzantine = byz_[rec.header.proposer];
    m_.total_rounds += rec.round + 1;

    const auto& p = c_.network.partition;
    // Votes already in flight when the window opens may still complete a height; the
    // cut takes full effect delta later.
    if (p.active() && hr.commit_time >= p.start + c_.network.delta && hr.commit_time < p.end) ++m_.commits_in_window;
    if (heal_round_ && hr.commit_time >= p.end && m_.rounds_to_resume < 0) {
      // rounds begun after healing; 0 when the round in progress at the heal commits
      m_.rounds_to_resume = static_cast<long>(rec.round) - static_cast<long>(*heal_round_);
      if (rec.height != heal_height_) m_.rounds_to_resume = 0;
    }

    std::shared_ptr<const ledger::Block> block = rec.block;
    if (!block) {
      if (auto it = blocks_.find(rec.block_hash); it != blocks_.end()) block = it->second;
    }
    if (!block) throw InvariantViolation("committed block for height " + std::to_string(h) + " is unknown");
    hr.block_bytes = ledger::encode_block(*block).size();

    // Reputation slot h+1: creation, verification, then committed reports.
    const auto params = rep_.params();
    rep_.record(reputation::make_record(rec.header.proposer, h + 1, reputation::Behavior::sbc, params));
    for (NodeId s : rec.cert.signers) {
      rep_.record(reputation::make_record(s, h + 1, reputation::Behavior::sbv, params));
    }
    for (const auto& tx : block->txs) {
      const auto* report = std::get_if<ledger::ReportTx>(&tx);
      if (!report) {
        ++hr.txs;
        continue;
      }
      ++hr.reports;
      pending_reports_.erase(ledger::transaction_hash(tx));
      process(*report, h);
    }
    rep_.advance();
    m_.heights.push_back(hr);

    for (auto it = blocks_.begin(); it != blocks_.end();) {
      it = it->second->header.height <= h ? blocks_.erase(it) : std::next(it);
    }
    if (h > c_.consensus.report_lag) detect(h - c_.consensus.report_lag, now);
  }

  reputation::EvidenceContext evidence_context(Height h) {
    reputation::EvidenceContext ctx;
    ctx.keys = keys_for(h);
    const Committee* com = &committee_of(h);
    ctx.leader_at = [com](Height hh, Round r) { return consensus::leader_for(hh, r, *com); };
    ctx.max_faulty = com->max_faulty();
    return ctx;
  }

  void process(const ledger::ReportTx& tx, Height committed) {
    reputation::Evidence e;
    try {
      e = reputation::decode_evidence(tx.evidence);
    } catch (const ledger::DecodeError&) {
      return;
    }
    ReportRecord rr;
    rr.evidence_height = e.height;
    rr.committed_height = committed;
    rr.kind = reputation::to_string(e.kind);
    rr.accused = e.accused;
    rr.accused_byzantine = e.accused < U_ && byz_[e.accused];
    if (!processed_.insert(e.digest()).second) return;
    auto node_of = [this](const crypto::PublicKey& pk) -> std::optional<NodeId> {
      for (NodeId i = 0; i < U_; ++i) {
        if (keys_[i].pk == pk) return i;
      }
      return std::nullopt;
    };
    auto outcome = reputation::process_report(tx, node_of, evidence_context(e.height), committed + 1, rep_.params());
    rr.valid = outcome.evidence_valid;
    for (const auto& r : outcome.records) rep_.record(r);
    if (outcome.misbehavior) rep_.record(*outcome.misbehavior);
    m_.reports.push_back(rr);
  }

  void submit(const reputation::Evidence& e, std::vector<NodeId> informers, SimTime now) {
    if (!reported_.insert(e.digest()).second) return;
    std::sort(informers.begin(), informers.end());
    std::vector<crypto::KeyPair> ks;
    for (NodeId i : informers) ks.push_back(keys_[i]);
    auto tx = reputation::make_report(e, keys_[e.accused].pk, ks, c_.consensus.report_fee, now);
    ledger::Transaction t = tx;
    pending_reports_.emplace(ledger::transaction_hash(t), std::move(t));
  }

  void detect(Height eh, SimTime now) {
    detected_ = eh;
    const Committee& com = committee_of(eh);
    const std::size_t f = com.max_faulty();
    std::vector<NodeId> honest;
    for (NodeId id : com.validators) {
      if (!byz_[id]) honest.push_back(id);
    }
    std::sort(honest.begin(), honest.end());
    if (honest.size() > f + 1) honest.resize(f + 1);
    const auto keys = keys_for(eh);

    auto ait = archive_.find(eh);
    if (ait != archive_.end()) {
      const auto& msgs = ait->second.messages;
      for (const auto& e : reputation::detect_equivocation(msgs, keys)) submit(e, honest, now);
      std::vector<ledger::Vote> votes;
      std::vector<ledger::CommitCert> pols;
      for (const auto& m : msgs) {
        if (const auto* v = m.vote()) votes.push_back(*v);
        if (const auto* p = m.proposal(); p && p->pol) pols.push_back(*p->pol);
      }
      auto lock = reputation::detect_lock_violation(eh, votes, pols, com.size(), true, keys);
      for (const auto& e : lock.evidence) submit(e, honest, now);
    }

    if (auto oit = observations_.find(eh); oit != observations_.end()) {
      for (const auto& [key, who] : oit->second) {
        if (who.size() <= f) continue;
        const auto& [round, leader, code] = key;
        reputation::ProposalObservation po;
        po.height = eh;
        po.round = round;
        po.leader = leader;
        if (code < 0) {
          po.timed_out = true;
        } else {
          po.verdict = static_cast<ledger::BlockVerdict>(code);
          if (ait != archive_.end()) {
            for (const auto& m : ait->second.messages) {
              const auto* p = m.proposal();
              if (p && p->round == round && p->proposer == leader) {
                po.proposal = *p;
                break;
              }
            }
          }
          if (!po.proposal) continue;
        }
        std::vector<reputation::ProposalObservation> one{po};
        std::vector<NodeId> informers(who.begin(), who.end());
        if (informers.size() > f + 1) informers.resize(f + 1);
        for (const auto& e : reputation::detect_block_faults(one)) submit(e, informers, now);
      }
      observations_.erase(oit);
    }
    if (ait != archive_.end()) archive_.erase(ait);
  }

  void on_heal() {
    const Height next = canonical_ + 1;
    Round best = 0;
    for (NodeId i = 0; i < U_; ++i) {
      const auto& s = nodes_[i];
      if (byz_[i] || !s.member || s.height != next) continue;
      best = std::max(best, s.round);
    }
    heal_round_ = best;
    heal_height_ = next;
  }

  void finish(SimTime now) {
    m_.completed = canonical_ >= c_.consensus.heights;
    m_.sim_seconds = m_.heights.empty() ? sim_to_seconds(now) : m_.heights.back().commit_time;
    std::size_t txs = 0;
    double lat = 0.0;
    for (const auto& h : m_.heights) {
      txs += h.txs;
      lat += h.latency;
    }
    const double n = static_cast<double>(m_.heights.size());
    if (!m_.heights.empty()) {
      m_.mean_rounds = static_cast<double>(m_.total_rounds) / n;
      m_.mean_latency = lat / n;
      m_.energy_per_block = 0.0;
    }
    if (m_.sim_seconds > 0.0) m_.throughput = static_cast<double>(txs) / m_.sim_seconds;
    if (m_.total_rounds > 0) {
      m_.messages_per_round = static_cast<double>(m_.consensus_messages) / static_cast<double>(m_.total_rounds);
    }
    m_.energy = static_cast<double>(m_.bytes_sent) * c_.consensus.energy_per_byte +
                static_cast<double>(m_.verifications) * c_.consensus.energy_per_verification;
    if (!m_.heights.empty()) m_.energy_per_block = m_.energy / n;
    m_.transport = transport_.stats();
    m_.reputation = rep_.history();
  }

  struct Archive {
    std::set<const void*> seen;
    std::vector<Message> messages;
  };

  const ScenarioConfig& c_;
  RunOptions opt_;
  ConsensusScheme scheme_;
  std::size_t U_, Z_, E_;
  Transport transport_;
  reputation::ReputationLedger rep_;
  std::vector<crypto::KeyPair> keys_;
  std::vector<ledger::Transaction> pool_;
  std::map<crypto::Digest, ledger::Transaction> pending_reports_;
  std::vector<bool> byz_;
  std::vector<Behavior> plan_;
  std::vector<NodeId> colluders_;
  std::map<std::size_t, Committee> committees_;
  consensus::ConsensusEnv env_;
  std::vector<consensus::NodeConsensusState> nodes_;
  std::map<NodeId, std::map<Height, consensus::Decision>> decisions_;
  std::map<crypto::Digest, ledger::BlockVerdict> body_memo_;
  std::map<crypto::Digest, std::shared_ptr<const ledger::Block>> decode_memo_;
  std::map<crypto::Digest, std::shared_ptr<const ledger::Block>> blocks_;
  std::map<Height, crypto::Digest> registry_;
  std::map<Height, Archive> archive_;
  std::map<Height, std::map<std::tuple<Round, NodeId, int>, std::set<NodeId>>> observations_;
  std::map<NodeId, std::set<std::pair<Height, Round>>> vol_done_;
  std::set<crypto::Digest> reported_, processed_;
  Height canonical_ = 0;
  Height detected_ = 0;
  double last_commit_time_ = 0.0;
  std::optional<Round> heal_round_;
  Height heal_height_ = 0;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  ConsensusMetrics m_;
};

}  // namespace

ConsensusMetrics run_consensus(const ScenarioConfig& config, const RunOptions& options) {
  config.check();
  ConsensusRun run(config, options);
  return run.run();
}

void write_heights_csv(std::ostream& os, const ConsensusMetrics& m) {
  os << "height,round,rounds,commit_time,latency,txs,reports,block_bytes,proposer,proposer_byzantine\n";
  for (const auto& h : m.heights) {
    os << h.height << ',' << h.round << ',' << h.round + 1 << ',' << h.commit_time << ',' << h.latency << ','
       << h.txs << ',' << h.reports << ',' << h.block_bytes << ',' << h.proposer << ','
       << (h.proposer_byzantine ? 1 : 0) << '\n';
  }
}

Json summary_json(const ConsensusMetrics& m) {
  Json j;
  j["scheme"] = m.scheme;
  j["seed"] = m.seed;
  j["committee"] = m.committee;
  j["heights"] = m.heights.size();
  j["completed"] = m.completed;
  j["sim_seconds"] = m.sim_seconds;
  j["throughput_tx_per_s"] = m.throughput;
  j["mean_rounds"] = m.mean_rounds;
  j["mean_latency_s"] = m.mean_latency;
  j["consensus_messages"] = m.consensus_messages;
  j["messages_per_round"] = m.messages_per_round;
  j["bytes_sent"] = m.bytes_sent;
  j["verifications"] = m.verifications;
  j["energy_j"] = m.energy;
  j["energy_per_block_j"] = m.energy_per_block;
  j["conflicting_commits"] = m.conflicting_commits;
  j["commits_in_partition_window"] = m.commits_in_window;
  j["rounds_to_resume"] = m.rounds_to_resume;
  j["byzantine"] = m.byzantine;
  j["committees"] = m.committees;
  std::size_t valid = 0, against_byz = 0;
  for (const auto& r : m.reports) {
    valid += r.valid;
    against_byz += r.accused_byzantine;
  }
  j["reports"] = {{"committed", m.reports.size()}, {"valid", valid}, {"against_byzantine", against_byz}};
  j["transport"] = {{"sent", m.transport.sent},
                    {"delivered", m.transport.delivered},
                    {"dropped_pre_gst", m.transport.dropped_pre_gst},
                    {"dropped_partition", m.transport.dropped_partition},
                    {"max_post_gst_delay_s", m.transport.max_post_gst_delay},
                    {"late_after_gst", m.transport.late_after_gst}};
  return j;
}

}  // namespace rescuesim::sim
