#pragma once

// Full consensus scenario: U full nodes, reputation-elected committees per epoch,
// adversary injection, forensic reports and a global commit registry.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rescuesim/sim/config.hpp"
#include "rescuesim/sim/transport.hpp"

namespace rescuesim::sim {

struct HeightRecord {
  Height height = 0;
  Round round = 0;             // round of the first commit
  double commit_time = 0.0;    // seconds, first honest commit
  double latency = 0.0;        // seconds since the previous height's first commit
  std::size_t txs = 0;
  std::size_t reports = 0;
  std::size_t block_bytes = 0;
  NodeId proposer = 0;
  bool proposer_byzantine = false;
};

struct ReportRecord {
  Height evidence_height = 0;
  Height committed_height = 0;
  std::string kind;
  NodeId accused = 0;
  bool accused_byzantine = false;
  bool valid = false;
};

struct ConsensusMetrics {
  std::string scheme;
  std::uint64_t seed = 0;
  std::size_t committee = 0;
  std::vector<HeightRecord> heights;
  std::vector<ReportRecord> reports;
  std::vector<NodeId> byzantine;
  std::vector<std::vector<NodeId>> committees;  // per epoch

  double sim_seconds = 0.0;
  double throughput = 0.0;       // committed tx per simulated second
  double mean_rounds = 0.0;      // mean of round + 1
  double mean_latency = 0.0;     // seconds per block
  std::uint64_t consensus_messages = 0;  // proposal, vote and block-part copies
  std::uint64_t total_rounds = 0;        // sum of round + 1 over committed heights
  double messages_per_round = 0.0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t verifications = 0;
  double energy = 0.0;           // committee proxy: bytes x e_tx + verifications x e_verify
  double energy_per_block = 0.0;
  std::size_t conflicting_commits = 0;  // must stay zero

  // Commits from delta after the window opens until it heals.
  std::size_t commits_in_window = 0;
  long rounds_to_resume = -1;  // rounds begun after healing before the first commit; -1 without a heal

  DelayStats transport;
  std::vector<reputation::ReputationLedger::Row> reputation;  // canonical reputation per slot
  bool completed = false;  // reached the configured number of heights before max_time
};

struct RunOptions {
  std::ostream* trace = nullptr;  // JSON lines, one per state transition
};

/// Deterministic for a fixed config. Throws InvariantViolation when two honest
/// nodes commit different blocks at one height.
ConsensusMetrics run_consensus(const ScenarioConfig& config, const RunOptions& options = {});

/// One row per height: height,round,rounds,commit_time,latency,txs,reports,block_bytes,proposer,proposer_byzantine
void write_heights_csv(std::ostream& os, const ConsensusMetrics& m);
/// Summary object of a run (everything except per-height and reputation series).
Json summary_json(const ConsensusMetrics& m);

}  // namespace rescuesim::sim
