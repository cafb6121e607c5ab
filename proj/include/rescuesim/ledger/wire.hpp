#pragma once

// Wire helpers for crypto values inside ledger/consensus codecs.

#include "rescuesim/crypto/signature.hpp"
#include "rescuesim/ledger/codec.hpp"

namespace rescuesim::ledger {

inline void put_digest(ByteWriter& w, const crypto::Digest& d) { w.put_fixed(d); }
inline crypto::Digest get_digest(ByteReader& r) { return r.get_fixed<32>(); }

inline void put_signature(ByteWriter& w, const crypto::Signature& s) { crypto::default_scheme().encode(w, s); }
inline crypto::Signature get_signature(ByteReader& r) { return crypto::default_scheme().decode_signature(r); }

inline void put_public_key(ByteWriter& w, const crypto::PublicKey& pk) { crypto::default_scheme().encode(w, pk); }
inline crypto::PublicKey get_public_key(ByteReader& r) { return crypto::default_scheme().decode_public_key(r); }

inline std::size_t signature_wire_size() { return crypto::default_scheme().signature_size(); }
inline std::size_t public_key_wire_size() { return crypto::default_scheme().public_key_size(); }

}  // namespace rescuesim::ledger
