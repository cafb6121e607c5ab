#include "rescuesim/ledger/transaction.hpp"

#include "rescuesim/ledger/store.hpp"
#include "rescuesim/ledger/wire.hpp"

namespace rescuesim::ledger {

namespace {

constexpr std::uint8_t kOffchainTag = 1;
constexpr std::uint8_t kReportTag = 2;

void put_keys(ByteWriter& w, const std::vector<crypto::PublicKey>& keys) {
  w.put_u32(static_cast<std::uint32_t>(keys.size()));
  for (const auto& k : keys) put_public_key(w, k);
}

std::vector<crypto::PublicKey> get_keys(ByteReader& r) {
  const auto n = r.get_count(public_key_wire_size());
  std::vector<crypto::PublicKey> keys;
  keys.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) keys.push_back(get_public_key(r));
  return keys;
}

void put_offchain_body(ByteWriter& w, const OffchainTx& tx) {
  put_public_key(w, tx.uav_pk);
  put_keys(w, tx.vehicle_pks);
  put_digest(w, tx.pointer.raw);
  put_digest(w, tx.pointer.out);
  w.put_string(tx.description);
  w.put_i64(tx.timestamp);
}

void put_report_body(ByteWriter& w, const ReportTx& tx) {
  put_public_key(w, tx.accused);
  put_keys(w, tx.informers);
  w.put_bytes(tx.evidence);
  w.put_u64(tx.fee);
  w.put_i64(tx.timestamp);
}

bool verify_multi(const crypto::Signature& combined, const std::vector<crypto::PublicKey>& keys, const Bytes& msg,
                  const crypto::SignatureScheme& scheme) {
  crypto::AggregateSignature agg;
  agg.combined = combined;
  agg.keys = keys;
  for (const auto& k : keys) agg.weights.push_back(scheme.aggregation_weight(k, keys));
  return scheme.verify_aggregate(agg, msg);
}

crypto::Signature multi_sign(std::span<const crypto::KeyPair> signers, const Bytes& msg,
                             const crypto::SignatureScheme& scheme) {
  std::vector<crypto::Signature> sigs;
  std::vector<crypto::PublicKey> keys;
  for (const auto& kp : signers) {
    sigs.push_back(scheme.sign(msg, kp.sk));
    keys.push_back(kp.pk);
  }
  return scheme.aggregate(sigs, keys).combined;
}

}  // namespace

Bytes OffchainTx::sign_bytes() const {
  ByteWriter w;
  w.put_string("rescuesim/offchain-tx");
  put_offchain_body(w, *this);
  return std::move(w).bytes();
}

Bytes ReportTx::sign_bytes() const {
  ByteWriter w;
  w.put_string("rescuesim/report-tx");
  put_report_body(w, *this);
  return std::move(w).bytes();
}

void encode_transaction(ByteWriter& w, const Transaction& tx) {
  if (const auto* o = std::get_if<OffchainTx>(&tx)) {
    w.put_u8(kOffchainTag);
    put_offchain_body(w, *o);
    put_signature(w, o->uav_signature);
    put_signature(w, o->vehicle_signature);
    put_digest(w, o->store_certificate);
  } else {
    const auto& rep = std::get<ReportTx>(tx);
    w.put_u8(kReportTag);
    put_report_body(w, rep);
    put_signature(w, rep.informer_signature);
  }
}

Transaction decode_transaction(ByteReader& r) {
  const auto tag = r.get_u8();
  if (tag == kOffchainTag) {
    OffchainTx o;
    o.uav_pk = get_public_key(r);
    o.vehicle_pks = get_keys(r);
    o.pointer.raw = get_digest(r);
    o.pointer.out = get_digest(r);
    o.description = r.get_string();
    o.timestamp = r.get_i64();
    o.uav_signature = get_signature(r);
    o.vehicle_signature = get_signature(r);
    o.store_certificate = get_digest(r);
    return o;
  }
  if (tag == kReportTag) {
    ReportTx rep;
    rep.accused = get_public_key(r);
    rep.informers = get_keys(r);
    rep.evidence = r.get_bytes();
    rep.fee = r.get_u64();
    rep.timestamp = r.get_i64();
    rep.informer_signature = get_signature(r);
    return rep;
  }
  throw DecodeError("unknown transaction tag");
}

Bytes encode_transaction(const Transaction& tx) {
  ByteWriter w;
  encode_transaction(w, tx);
  return std::move(w).bytes();
}

crypto::Digest transaction_hash(const Transaction& tx) { return crypto::h0(encode_transaction(tx)); }

OffchainTx make_offchain_tx(const crypto::KeyPair& uav, std::span<const crypto::KeyPair> vehicles,
                            DataPointer pointer, std::string description, std::int64_t timestamp,
                            const crypto::Digest& store_certificate, const crypto::SignatureScheme& scheme) {
  OffchainTx tx;
  tx.uav_pk = uav.pk;
  for (const auto& v : vehicles) tx.vehicle_pks.push_back(v.pk);
  tx.pointer = pointer;
  tx.description = std::move(description);
  tx.timestamp = timestamp;
  tx.store_certificate = store_certificate;
  const Bytes msg = tx.sign_bytes();
  tx.uav_signature = scheme.sign(msg, uav.sk);
  if (!vehicles.empty()) tx.vehicle_signature = multi_sign(vehicles, msg, scheme);
  return tx;
}

ReportTx make_report_tx(const crypto::PublicKey& accused, std::span<const crypto::KeyPair> informers, Bytes evidence,
                        std::uint64_t fee, std::int64_t timestamp, const crypto::SignatureScheme& scheme) {
  ReportTx tx;
  tx.accused = accused;
  for (const auto& i : informers) tx.informers.push_back(i.pk);
  tx.evidence = std::move(evidence);
  tx.fee = fee;
  tx.timestamp = timestamp;
  if (!informers.empty()) tx.informer_signature = multi_sign(informers, tx.sign_bytes(), scheme);
  return tx;
}

const char* to_string(TxVerdict v) {
  switch (v) {
    case TxVerdict::valid: return "valid";
    case TxVerdict::bad_uav_signature: return "bad_uav_signature";
    case TxVerdict::bad_vehicle_signature: return "bad_vehicle_signature";
    case TxVerdict::bad_store_certificate: return "bad_store_certificate";
    case TxVerdict::unresolved_pointer: return "unresolved_pointer";
    case TxVerdict::no_signers: return "no_signers";
    case TxVerdict::bad_informer_signature: return "bad_informer_signature";
    case TxVerdict::wrong_fee: return "wrong_fee";
  }
  return "?";
}

TxVerdict verify_transaction(const Transaction& tx, const TxRules& rules, const crypto::SignatureScheme& scheme) {
  if (const auto* o = std::get_if<OffchainTx>(&tx)) {
    const Bytes msg = o->sign_bytes();
    if (!scheme.verify(o->uav_signature, msg, o->uav_pk)) return TxVerdict::bad_uav_signature;
    if (o->vehicle_pks.empty()) return TxVerdict::no_signers;
    if (!verify_multi(o->vehicle_signature, o->vehicle_pks, msg, scheme)) return TxVerdict::bad_vehicle_signature;
    if (o->store_certificate != ContentStore::certificate(o->pointer.raw)) return TxVerdict::bad_store_certificate;
    if (rules.store && (!rules.store->contains(o->pointer.raw) || !rules.store->contains(o->pointer.out))) {
      return TxVerdict::unresolved_pointer;
    }
    return TxVerdict::valid;
  }
  const auto& rep = std::get<ReportTx>(tx);
  if (rep.informers.empty()) return TxVerdict::no_signers;
  if (!verify_multi(rep.informer_signature, rep.informers, rep.sign_bytes(), scheme)) {
    return TxVerdict::bad_informer_signature;
  }
  if (rep.fee != rules.report_fee) return TxVerdict::wrong_fee;
  return TxVerdict::valid;
}

std::size_t transaction_signature_checks(const Transaction& tx) {
  return std::holds_alternative<OffchainTx>(tx) ? 2 : 1;
}

}  // namespace rescuesim::ledger
