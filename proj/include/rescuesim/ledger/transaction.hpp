#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/ledger/codec.hpp"

namespace rescuesim::ledger {

class ContentStore;

/// Off-chain data pointer {H0(d_raw), H0(d_out)}.
struct DataPointer {
  crypto::Digest raw{};
  crypto::Digest out{};
  friend bool operator==(const DataPointer&, const DataPointer&) = default;
};

/// Records that a UAV's task data and the vehicles' results live in the store.
struct OffchainTx {
  crypto::PublicKey uav_pk;
  std::vector<crypto::PublicKey> vehicle_pks;
  DataPointer pointer;
  std::string description;
  std::int64_t timestamp = 0;
  crypto::Signature uav_signature;
  crypto::Signature vehicle_signature;  // combined multi-signature over the same bytes
  crypto::Digest store_certificate{};

  Bytes sign_bytes() const;
  friend bool operator==(const OffchainTx&, const OffchainTx&) = default;
};

/// Accuses a node of misbehavior, signed by N_rep informers.
struct ReportTx {
  crypto::PublicKey accused;
  std::vector<crypto::PublicKey> informers;
  Bytes evidence;
  std::uint64_t fee = 0;
  std::int64_t timestamp = 0;
  crypto::Signature informer_signature;

  Bytes sign_bytes() const;
  friend bool operator==(const ReportTx&, const ReportTx&) = default;
};

using Transaction = std::variant<OffchainTx, ReportTx>;

void encode_transaction(ByteWriter& w, const Transaction& tx);
Transaction decode_transaction(ByteReader& r);
Bytes encode_transaction(const Transaction& tx);
crypto::Digest transaction_hash(const Transaction& tx);

/// Signs with the UAV key and every vehicle key, and fills the store certificate.
OffchainTx make_offchain_tx(const crypto::KeyPair& uav, std::span<const crypto::KeyPair> vehicles,
                            DataPointer pointer, std::string description, std::int64_t timestamp,
                            const crypto::Digest& store_certificate,
                            const crypto::SignatureScheme& scheme = crypto::default_scheme());

ReportTx make_report_tx(const crypto::PublicKey& accused, std::span<const crypto::KeyPair> informers,
                        Bytes evidence, std::uint64_t fee, std::int64_t timestamp,
                        const crypto::SignatureScheme& scheme = crypto::default_scheme());

enum class TxVerdict { valid, bad_uav_signature, bad_vehicle_signature, bad_store_certificate, unresolved_pointer,
                       no_signers, bad_informer_signature, wrong_fee };
const char* to_string(TxVerdict v);

struct TxRules {
  std::uint64_t report_fee = 1;
  const ContentStore* store = nullptr;  // when set, pointers must resolve
};

TxVerdict verify_transaction(const Transaction& tx, const TxRules& rules,
                             const crypto::SignatureScheme& scheme = crypto::default_scheme());

/// Number of signature checks verify_transaction performs (energy accounting).
std::size_t transaction_signature_checks(const Transaction& tx);

}  // namespace rescuesim::ledger
