#pragma once

// Canonical binary codec: little-endian fixed-width integers, u32 length
// prefixes for variable-size fields, fields always written in declaration order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rescuesim/types.hpp"

namespace rescuesim::ledger {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(v); }

  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void put_bool(bool v) { put_u8(v ? 1 : 0); }

  /// Raw bytes without a length prefix (fixed-size fields).
  void put_raw(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  template <std::size_t N>
  void put_fixed(const std::array<std::uint8_t, N>& a) {
    put_raw(a);
  }

  /// Length-prefixed bytes.
  void put_bytes(std::span<const std::uint8_t> data) {
    put_u32(static_cast<std::uint32_t>(data.size()));
    put_raw(data);
  }

  void put_string(std::string_view s) {
    put_bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

  const Bytes& bytes() const& { return buf_; }
  Bytes bytes() && { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t get_u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }

  bool get_bool() {
    const auto v = get_u8();
    if (v > 1) throw DecodeError("invalid boolean byte");
    return v == 1;
  }

  std::span<const std::uint8_t> get_raw(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> get_fixed() {
    std::array<std::uint8_t, N> a;
    auto s = get_raw(N);
    std::memcpy(a.data(), s.data(), N);
    return a;
  }

  Bytes get_bytes() {
    const auto n = get_u32();
    auto s = get_raw(n);
    return Bytes(s.begin(), s.end());
  }

  std::string get_string() {
    const auto n = get_u32();
    auto s = get_raw(n);
    return std::string(s.begin(), s.end());
  }

  /// Element count for a repeated field; bounded by the bytes left so a
  /// corrupted count cannot trigger a huge allocation.
  std::uint32_t get_count(std::size_t min_element_size = 1) {
    const auto n = get_u32();
    if (static_cast<std::size_t>(n) * std::max<std::size_t>(min_element_size, 1) > remaining()) {
      throw DecodeError("element count exceeds remaining input");
    }
    return n;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

  void expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after decoded value");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DecodeError("unexpected end of input");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace rescuesim::ledger
