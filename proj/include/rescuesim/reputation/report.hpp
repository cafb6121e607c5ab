#pragma once

#include <functional>
#include <map>
#include <optional>

#include "rescuesim/ledger/transaction.hpp"
#include "rescuesim/reputation/detectors.hpp"

namespace rescuesim::reputation {

struct ReportOutcome {
  bool evidence_valid = false;
  std::optional<Evidence> evidence;
  std::vector<BehaviorRecord> records;       // report deltas: informers and accused
  std::optional<BehaviorRecord> misbehavior;  // penalty for the proven behavior itself
  std::map<NodeId, double> refunds;  // fee share per informer when the report holds
  double forfeited = 0.0;
};

using NodeOfKey = std::function<std::optional<NodeId>(const crypto::PublicKey&)>;

/// Applies a committed report whose multi-signature was already checked. A report that
/// holds gives every informer +Delta_rep and the accused -Delta_acc, refunds the fee
/// evenly, and separately yields the penalty for the misbehavior itself. Otherwise the fee is lost and nothing
/// is recorded.
ReportOutcome process_report(const ledger::ReportTx& tx, const NodeOfKey& node_of, const EvidenceContext& ctx,
                             std::uint64_t slot, const ReputationParams& params);

/// Builds a report for `e` signed by `informers`.
ledger::ReportTx make_report(const Evidence& e, const crypto::PublicKey& accused,
                             std::span<const crypto::KeyPair> informers, std::uint64_t fee, std::int64_t timestamp,
                             const crypto::SignatureScheme& scheme = crypto::default_scheme());

}  // namespace rescuesim::reputation
