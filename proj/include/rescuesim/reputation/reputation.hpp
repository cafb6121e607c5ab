#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "rescuesim/crypto/hash.hpp"
#include "rescuesim/types.hpp"

namespace rescuesim::reputation {

enum class Behavior : std::uint8_t { sbc, sbv, cp, cv, wbc, nbc, vol, rep_informer, rep_accused };

const char* to_string(Behavior b);
std::optional<Behavior> parse_behavior(std::string_view s);

/// +1 for successful block creation, successful block verification and informing; -1 otherwise.
int behavior_sign(Behavior b);

struct ReputationParams {
  double initial = 3.0;  // value at slot 1
  double eta = 0.5;      // decay: previous value is weighted by e^-eta
  double delta_sbc = 4.0;
  double delta_sbv = 2.0;
  double delta_cp = 5.0;
  double delta_cv = 3.0;
  double delta_wbc = 5.0;
  double delta_nbc = 1.5;
  double delta_vol = 3.0;
  double delta_rep = 1.5;
  double delta_acc = 2.5;

  double magnitude(Behavior b) const;
  void check() const;
};

struct BehaviorRecord {
  NodeId node = 0;
  std::uint64_t slot = 0;
  Behavior behavior = Behavior::sbv;
  double magnitude = 0.0;
  int sign = 1;
  crypto::Digest evidence{};
};

BehaviorRecord make_record(NodeId node, std::uint64_t slot, Behavior b, const ReputationParams& p,
                           const crypto::Digest& evidence = {});

double sigmoid(double x);

/// One node's value at slot n: the initial value for n = 1, else
/// sum(beta_b * Delta_b) + e^-eta * previous. Records for other nodes or slots are ignored.
double update_reputation(double previous, std::uint64_t n, NodeId node, std::span<const BehaviorRecord> records,
                         const ReputationParams& p);

/// Per-node raw and normalized reputation, advanced one slot at a time.
class ReputationLedger {
 public:
  ReputationLedger(ReputationParams params, std::span<const NodeId> nodes);

  /// Queues a record for the next advance(); its slot must be the upcoming slot.
  void record(const BehaviorRecord& r);
  /// Applies the update for slot() + 1 to every node.
  void advance();

  std::uint64_t slot() const { return slot_; }
  double raw(NodeId id) const;
  double normalized(NodeId id) const { return sigmoid(raw(id)); }
  const std::map<NodeId, double>& values() const { return raw_; }
  const ReputationParams& params() const { return params_; }
  const std::vector<BehaviorRecord>& applied() const { return applied_; }

  struct Row {
    std::uint64_t slot;
    NodeId node;
    double raw;
    double normalized;
  };
  const std::vector<Row>& history() const { return history_; }
  /// CSV with header slot,node,raw,normalized.
  void write_csv(std::ostream& os) const;

 private:
  void snapshot();

  ReputationParams params_;
  std::uint64_t slot_ = 1;
  std::map<NodeId, double> raw_;
  std::vector<BehaviorRecord> pending_;
  std::vector<BehaviorRecord> applied_;
  std::vector<Row> history_;
};

}  // namespace rescuesim::reputation
