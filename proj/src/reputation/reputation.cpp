#include "rescuesim/reputation/reputation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rescuesim::reputation {

namespace {
constexpr std::pair<Behavior, const char*> kNames[] = {
    {Behavior::sbc, "sbc"}, {Behavior::sbv, "sbv"}, {Behavior::cp, "cp"},
    {Behavior::cv, "cv"},   {Behavior::wbc, "wbc"}, {Behavior::nbc, "nbc"},
    {Behavior::vol, "vol"}, {Behavior::rep_informer, "rep-informer"}, {Behavior::rep_accused, "rep-accused"},
};
}  // namespace

const char* to_string(Behavior b) {
  for (const auto& [k, name] : kNames) {
    if (k == b) return name;
  }
  return "?";
}

std::optional<Behavior> parse_behavior(std::string_view s) {
  for (const auto& [k, name] : kNames) {
    if (s == name) return k;
  }
  return std::nullopt;
}

int behavior_sign(Behavior b) {
  return (b == Behavior::sbc || b == Behavior::sbv || b == Behavior::rep_informer) ? 1 : -1;
}

double ReputationParams::magnitude(Behavior b) const {
  switch (b) {
    case Behavior::sbc: return delta_sbc;
    case Behavior::sbv: return delta_sbv;
    case Behavior::cp: return delta_cp;
    case Behavior::cv: return delta_cv;
    case Behavior::wbc: return delta_wbc;
    case Behavior::nbc: return delta_nbc;
    case Behavior::vol: return delta_vol;
    case Behavior::rep_informer: return delta_rep;
    case Behavior::rep_accused: return delta_acc;
  }
  return 0.0;
}

void ReputationParams::check() const {
  if (eta < 0.0 || !std::isfinite(eta)) throw ConfigError("reputation.eta must be finite and >= 0");
  for (double d : {delta_sbc, delta_sbv, delta_cp, delta_cv, delta_wbc, delta_nbc, delta_vol, delta_rep, delta_acc}) {
    if (d < 0.0 || !std::isfinite(d)) throw ConfigError("reputation deltas must be finite and >= 0");
  }
}

BehaviorRecord make_record(NodeId node, std::uint64_t slot, Behavior b, const ReputationParams& p,
                           const crypto::Digest& evidence) {
  return BehaviorRecord{node, slot, b, p.magnitude(b), behavior_sign(b), evidence};
}

double sigmoid(double x) {
  // Split by sign so large |x| never overflows exp.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double update_reputation(double previous, std::uint64_t n, NodeId node, std::span<const BehaviorRecord> records,
                         const ReputationParams& p) {
  if (n == 0) throw std::domain_error("reputation slots start at 1");
  if (n == 1) return p.initial;
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.node == node && r.slot == n) sum += r.sign * r.magnitude;
  }
  return sum + std::exp(-p.eta) * previous;
}

ReputationLedger::ReputationLedger(ReputationParams params, std::span<const NodeId> nodes) : params_(params) {
  params_.check();
  for (NodeId id : nodes) raw_[id] = params_.initial;
  snapshot();
}

void ReputationLedger::record(const BehaviorRecord& r) {
  if (!raw_.count(r.node)) throw std::domain_error("reputation record for unknown node " + std::to_string(r.node));
  if (r.slot != slot_ + 1) throw std::domain_error("reputation record must target the upcoming slot");
  pending_.push_back(r);
}

void ReputationLedger::advance() {
  ++slot_;
  for (auto& [id, value] : raw_) value = update_reputation(value, slot_, id, pending_, params_);
  applied_.insert(applied_.end(), pending_.begin(), pending_.end());
  pending_.clear();
  snapshot();
}

double ReputationLedger::raw(NodeId id) const {
  auto it = raw_.find(id);
  if (it == raw_.end()) throw std::domain_error("unknown node " + std::to_string(id));
  return it->second;
}

void ReputationLedger::snapshot() {
  for (const auto& [id, v] : raw_) history_.push_back(Row{slot_, id, v, sigmoid(v)});
}

void ReputationLedger::write_csv(std::ostream& os) const {
  os << "slot,node,raw,normalized\n";
  os.precision(12);
  for (const auto& r : history_) os << r.slot << ',' << r.node << ',' << r.raw << ',' << r.normalized << '\n';
}

}  // namespace rescuesim::reputation
