#pragma once

// Per-validator Tendermint state machine with proof-of-lock locking, driven by
// a pure step function: (state, event) -> (state', messages, timers, commits).

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rescuesim/consensus/committee.hpp"
#include "rescuesim/consensus/messages.hpp"
#include "rescuesim/consensus/tally.hpp"
#include "rescuesim/ledger/store.hpp"

namespace rescuesim::consensus {

enum class Step : std::uint8_t { propose, prevote, precommit, commit_wait };
const char* to_string(Step s);

struct TimeoutConfig {
  SimTime propose = seconds_to_sim(6.0);
  SimTime propose_increment = seconds_to_sim(0.5);
  SimTime prevote = seconds_to_sim(3.0);
  SimTime precommit = seconds_to_sim(3.0);
  SimTime commit_wait = seconds_to_sim(0.001);
  SimTime catch_up_retry = seconds_to_sim(2.0);

  SimTime propose_for(Round r) const { return propose + propose_increment * static_cast<SimTime>(r); }
};

/// Read-only context shared by all nodes of a run.
struct ConsensusEnv {
  const crypto::SignatureScheme* scheme = &crypto::default_scheme();
  std::function<const Committee&(Height)> committee_for;
  std::function<std::optional<crypto::PublicKey>(NodeId)> public_key;
  /// Full nodes outside committee(h); they follow the chain through decisions.
  std::function<std::vector<NodeId>(Height)> observers;
  std::function<std::vector<ledger::Transaction>(NodeId, Height, Round)> mempool;
  /// Optional memoized context-free body check.
  std::function<ledger::BlockVerdict(const ledger::Block&)> body_verdict;
  /// Optional memoized block decoder keyed by the T2 root.
  std::function<std::shared_ptr<const ledger::Block>(const ledger::ChunkAssembler&)> decode;
  /// Decision a node holds for a committed height, used to answer catch-up requests.
  std::function<std::optional<Decision>(NodeId, Height)> decision_of;
  ledger::ContentStore* store = nullptr;
  ledger::TxRules tx_rules;
  TimeoutConfig timeouts;
  bool aggregate_certificates = true;
  std::size_t chunk_size = 64 * 1024;
  std::size_t max_catch_up = 32;
  std::size_t future_buffer_limit = 8192;
  bool trace = false;
};

struct ProposalSlot {
  Proposal proposal;
  Message message;
  std::shared_ptr<ledger::ChunkAssembler> assembler;
  std::shared_ptr<const ledger::Block> block;
  std::optional<ledger::BlockVerdict> verdict;
  bool wbc_reported = false;
};

struct RoundState {
  std::optional<ProposalSlot> slot;
  std::vector<Message> early_parts;
  VoteSet prevotes;
  VoteSet precommits;
  std::set<NodeId> senders;
};

/// One node's consensus state. Moved through step(); the shared pointers inside
/// are treated as owned by a single state value at a time.
struct NodeConsensusState {
  crypto::KeyPair key;
  bool started = false;
  bool member = false;
  Height height = 1;
  Round round = 0;
  Step step = Step::propose;
  bool prevoted = false;
  bool precommitted = false;

  crypto::Digest parent_hash{};
  ledger::CommitCert last_cert;
  std::vector<Vote> last_votes;

  crypto::Digest locked_value{};
  std::int64_t locked_round = -1;
  std::shared_ptr<const ledger::Block> locked_block;
  std::optional<ledger::CommitCert> locked_pol;

  std::map<Round, RoundState> rounds;
  std::map<crypto::Digest, std::shared_ptr<const ledger::Block>> blocks;
  std::map<Height, std::vector<Message>> future;
  std::map<Height, Decision> pending_decisions;

  SimTime round_started_at = 0;
  SimTime commit_time = -1;
  Height catch_up_height = 0;
  SimTime catch_up_at = 0;

  NodeId id() const { return key.owner; }
  bool locked() const { return locked_round >= 0; }
};

NodeConsensusState make_node_state(const crypto::KeyPair& key);

struct StartEvent {};
struct ReceiveEvent {
  Message msg;
};
struct TimeoutEvent {
  Height height = 0;
  Round round = 0;
  Step step = Step::propose;
};
using Event = std::variant<StartEvent, ReceiveEvent, TimeoutEvent>;

struct Outbound {
  Message msg;
  std::vector<NodeId> recipients;
};

struct TimerRequest {
  SimTime delay = 0;
  TimeoutEvent event;
};

struct CommitRecord {
  Height height = 0;
  Round round = 0;
  crypto::Digest block_hash{};
  ledger::BlockHeader header;
  ledger::CommitCert cert;
  std::shared_ptr<const ledger::Block> block;  // null when adopted through a certificate
  bool via_certificate = false;
};

/// Locally observed misbehavior; the forensic detectors in the reputation
/// module work from archives instead, these are hints and trace material.
struct Observation {
  enum class Kind { conflicting_proposal, conflicting_vote, invalid_block, missing_proposal };
  Kind kind = Kind::missing_proposal;
  NodeId accused = 0;
  Height height = 0;
  Round round = 0;
  ledger::BlockVerdict verdict = ledger::BlockVerdict::valid;
  std::vector<Message> messages;
};

struct StepOutput {
  NodeConsensusState state;
  std::vector<Outbound> out;
  std::vector<TimerRequest> timers;
  std::vector<CommitRecord> commits;
  std::vector<Observation> observations;
  std::uint64_t verifications = 0;
  std::string trace;  // one JSON object when env.trace is set
};

StepOutput step(const ConsensusEnv& env, NodeConsensusState&& state, const Event& event, SimTime now);

}  // namespace rescuesim::consensus
