#include "rescuesim/crypto/signature.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rescuesim::crypto {

namespace {

__extension__ using u128 = unsigned __int128;
constexpr std::uint64_t kQ = SimulatedBls::kModulus;
// Fixed generator of the second group.
constexpr std::uint64_t kG2 = 0x1b873593cc9e2d51ULL % kQ;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  const u128 p = static_cast<u128>(a) * b;
  // Mersenne reduction.
  std::uint64_t lo = static_cast<std::uint64_t>(p & kQ);
  std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
  std::uint64_t r = lo + hi;
  while (r >= kQ) r -= kQ;
  return r;
}

std::uint64_t addmod(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  if (r >= kQ) r -= kQ;
  return r;
}

// Reduce a digest to a nonzero field element.
std::uint64_t to_scalar(const Digest& d) {
  std::uint64_t v = digest_prefix_u64(d) % kQ;
  return v == 0 ? 1 : v;
}

bool in_field(std::uint64_t v) { return v < kQ; }

void put_padded(ledger::ByteWriter& w, std::uint64_t v, std::size_t width) {
  w.put_u64(v);
  for (std::size_t i = 8; i < width; ++i) w.put_u8(0);
}

std::uint64_t get_padded(ledger::ByteReader& r, std::size_t width) {
  std::uint64_t v = r.get_u64();
  bool ok = in_field(v);
  for (std::size_t i = 8; i < width; ++i) ok = (r.get_u8() == 0) && ok;
  return ok ? v : SimulatedBls::kInvalid;
}

}  // namespace

Backend parse_backend(std::string_view name) {
  if (name == "simulation" || name == "sim") return Backend::simulation;
  if (name == "pairing" || name == "bls") return Backend::pairing;
  throw ConfigError("unknown signature backend '" + std::string(name) + "'");
}

std::uint64_t SimulatedBls::hash_to_group(std::span<const std::uint8_t> message) {
  return to_scalar(h0(message));
}

KeyPair SimulatedBls::keygen(std::uint64_t seed, NodeId owner, std::uint32_t index) const {
  ledger::ByteWriter w;
  w.put_u64(seed);
  w.put_u32(owner);
  w.put_u32(index);
  KeyPair kp;
  kp.sk.scalar = to_scalar(tagged_hash("rescuesim/keygen", w.bytes()));
  kp.pk.element = mulmod(kp.sk.scalar, kG2);
  kp.owner = owner;
  kp.index = index;
  return kp;
}

Signature SimulatedBls::sign(std::span<const std::uint8_t> message, const SecretKey& sk) const {
  return Signature{mulmod(sk.scalar, hash_to_group(message))};
}

bool SimulatedBls::verify(const Signature& sig, std::span<const std::uint8_t> message, const PublicKey& pk) const {
  if (!in_field(sig.element) || !in_field(pk.element) || pk.element == 0) return false;
  return mulmod(sig.element, kG2) == mulmod(hash_to_group(message), pk.element);
}

std::uint64_t SimulatedBls::aggregation_weight(const PublicKey& pk, std::span<const PublicKey> all) const {
  ledger::ByteWriter w;
  w.put_u64(pk.element);
  w.put_u32(static_cast<std::uint32_t>(all.size()));
  for (const auto& k : all) w.put_u64(k.element);
  return to_scalar(tagged_hash("rescuesim/H1", w.bytes()));
}

AggregateSignature SimulatedBls::aggregate(std::span<const Signature> sigs, std::span<const PublicKey> keys) const {
  if (sigs.size() != keys.size() || sigs.empty()) {
    throw std::domain_error("aggregate: need matching, non-empty signature and key lists");
  }
  AggregateSignature agg;
  agg.keys.assign(keys.begin(), keys.end());
  agg.weights.reserve(keys.size());
  std::uint64_t acc = 0;
  bool malformed = false;
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    const auto w = aggregation_weight(keys[i], keys);
    agg.weights.push_back(w);
    if (!in_field(sigs[i].element)) malformed = true;
    else acc = addmod(acc, mulmod(w, sigs[i].element));
  }
  agg.combined.element = malformed ? kInvalid : acc;
  return agg;
}

bool SimulatedBls::verify_aggregate(const AggregateSignature& agg, std::span<const std::uint8_t> message) const {
  if (agg.keys.empty() || agg.keys.size() != agg.weights.size()) return false;
  if (!in_field(agg.combined.element)) return false;
  std::uint64_t apk = 0;
  for (std::size_t i = 0; i < agg.keys.size(); ++i) {
    const auto& pk = agg.keys[i];
    if (!in_field(pk.element) || pk.element == 0) return false;
    // Weights are recomputed, never trusted from the wire.
    if (agg.weights[i] != aggregation_weight(pk, agg.keys)) return false;
    apk = addmod(apk, mulmod(agg.weights[i], pk.element));
  }
  return mulmod(agg.combined.element, kG2) == mulmod(hash_to_group(message), apk);
}

void SimulatedBls::encode(ledger::ByteWriter& w, const Signature& sig) const {
  put_padded(w, sig.element, signature_size());
}

void SimulatedBls::encode(ledger::ByteWriter& w, const PublicKey& pk) const {
  put_padded(w, pk.element, public_key_size());
}

Signature SimulatedBls::decode_signature(ledger::ByteReader& r) const {
  return Signature{get_padded(r, signature_size())};
}

PublicKey SimulatedBls::decode_public_key(ledger::ByteReader& r) const {
  return PublicKey{get_padded(r, public_key_size())};
}

std::unique_ptr<SignatureScheme> make_signature_scheme(Backend backend) {
  if (backend == Backend::pairing) {
    throw ConfigError("pairing signature backend is not available in this build; use 'simulation'");
  }
  return std::make_unique<SimulatedBls>();
}

const SignatureScheme& default_scheme() {
  static const SimulatedBls scheme;
  return scheme;
}

}  // namespace rescuesim::crypto
