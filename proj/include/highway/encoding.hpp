/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "highway/types.hpp"

namespace highway {

  using Bytes = std::vector<std::uint8_t>;

  /// Little-endian fixed-width writer for canonical encodings.
  class ByteWriter {
   public:
    void u8(std::uint8_t v) {
      out_.push_back(v);
    }
    void u32(std::uint32_t v) {
      put(v, 4);
    }
    void u64(std::uint64_t v) {
      put(v, 8);
    }
    void i64(std::int64_t v) {
      put(static_cast<std::uint64_t>(v), 8);
    }
    void digest(Digest d) {
      u64(d.value);
    }
    void bytes(std::span<const std::uint8_t> b) {
      u32(static_cast<std::uint32_t>(b.size()));
      out_.insert(out_.end(), b.begin(), b.end());
    }

    const Bytes &data() const {
      return out_;
    }
    Bytes take() {
      return std::move(out_);
    }

   private:
    void put(std::uint64_t v, int width) {
      for (int i = 0; i < width; ++i) {
        out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
      }
    }

    Bytes out_;
  };

  class DecodeError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
  };

  class ByteReader {
   public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
      return static_cast<std::uint8_t>(get(1));
    }
    std::uint32_t u32() {
      return static_cast<std::uint32_t>(get(4));
    }
    std::uint64_t u64() {
      return get(8);
    }
    std::int64_t i64() {
      return static_cast<std::int64_t>(get(8));
    }
    Digest digest() {
      return Digest{u64()};
    }
    Bytes bytes() {
      auto len = u32();
      need(len);
      Bytes b(data_.begin() + pos_, data_.begin() + pos_ + len);
      pos_ += len;
      return b;
    }
    bool done() const {
      return pos_ == data_.size();
    }

   private:
    void need(std::size_t n) const {
      if (pos_ + n > data_.size()) {
        throw DecodeError("truncated encoding");
      }
    }
    std::uint64_t get(int width) {
      need(width);
      std::uint64_t v = 0;
      for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
      }
      pos_ += width;
      return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
  };

  /// Deterministic 64-bit digest (FNV-1a followed by a splitmix finalizer).
  Digest hash64(std::span<const std::uint8_t> data);

  /// Streaming form of hash64 for large inputs such as whole trace files.
  class Hasher {
   public:
    void update(std::string_view text);
    void update(std::span<const std::uint8_t> data);
    Digest finish() const;

   private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
  };

  std::uint64_t mix64(std::uint64_t x);

  std::string toHex(std::span<const std::uint8_t> data);
  Bytes fromHex(std::string_view text);

}  // namespace highway
