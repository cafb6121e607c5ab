#include "rescuesim/reputation/report.hpp"

namespace rescuesim::reputation {

ReportOutcome process_report(const ledger::ReportTx& tx, const NodeOfKey& node_of, const EvidenceContext& ctx,
                             std::uint64_t slot, const ReputationParams& params) {
  ReportOutcome out;
  out.forfeited = static_cast<double>(tx.fee);

  Evidence e;
  try {
    e = decode_evidence(tx.evidence);
  } catch (const ledger::DecodeError&) {
    return out;
  }
  const auto accused = node_of(tx.accused);
  if (!accused || *accused != e.accused) return out;

  std::vector<NodeId> informers;
  for (const auto& pk : tx.informers) {
    auto id = node_of(pk);
    if (!id || *id == e.accused) return out;
    informers.push_back(*id);
  }
  if (informers.empty() || !verify_evidence(e, ctx, informers.size())) return out;

  out.evidence_valid = true;
  out.forfeited = 0.0;
  const double share = static_cast<double>(tx.fee) / static_cast<double>(informers.size());
  const auto digest = e.digest();
  for (NodeId id : informers) {
    out.records.push_back(make_record(id, slot, Behavior::rep_informer, params, digest));
    out.refunds[id] += share;
  }
  out.records.push_back(make_record(e.accused, slot, Behavior::rep_accused, params, digest));
  out.misbehavior = make_record(e.accused, slot, behavior_of(e.kind), params, digest);
  out.evidence = std::move(e);
  return out;
}

ledger::ReportTx make_report(const Evidence& e, const crypto::PublicKey& accused,
                             std::span<const crypto::KeyPair> informers, std::uint64_t fee, std::int64_t timestamp,
                             const crypto::SignatureScheme& scheme) {
  return ledger::make_report_tx(accused, informers, encode_evidence(e), fee, timestamp, scheme);
}

}  // namespace rescuesim::reputation
