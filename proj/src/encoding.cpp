/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/encoding.hpp"

#include <cstdio>

namespace highway {

  namespace {
    constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

    int nibble(char c) {
      if (c >= '0' && c <= '9') {
        return c - '0';
      }
      if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
      }
      if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
      }
      throw DecodeError(std::string("bad hex digit '") + c + "'");
    }
  }  // namespace

  std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  void Hasher::update(std::string_view text) {
    for (char c : text) {
      state_ = (state_ ^ static_cast<std::uint8_t>(c)) * kFnvPrime;
    }
  }

  void Hasher::update(std::span<const std::uint8_t> data) {
    for (auto b : data) {
      state_ = (state_ ^ b) * kFnvPrime;
    }
  }

  Digest Hasher::finish() const {
    return Digest{mix64(state_)};
  }

  Digest hash64(std::span<const std::uint8_t> data) {
    Hasher h;
    h.update(data);
    return h.finish();
  }

  std::string toHex(std::span<const std::uint8_t> data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0xf]);
    }
    return out;
  }

  Bytes fromHex(std::string_view text) {
    if (text.size() % 2 != 0) {
      throw DecodeError("odd-length hex string");
    }
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4
                                         | nibble(text[2 * i + 1]));
    }
    return out;
  }

  std::string Digest::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(value));
    return buf;
  }

  Digest Digest::fromHex(const std::string &text) {
    if (text.empty() || text.size() > 16) {
      throw DecodeError("bad digest '" + text + "'");
    }
    std::uint64_t v = 0;
    for (char c : text) {
      v = (v << 4) | static_cast<std::uint64_t>(nibble(c));
    }
    return Digest{v};
  }

  WeightMap::WeightMap(std::vector<Weight> weights)
      : weights_(std::move(weights)) {
    for (auto w : weights_) {
      if (w <= 0) {
        throw std::invalid_argument("validator weights must be positive");
      }
    }
    total_ = std::accumulate(weights_.begin(), weights_.end(), Weight{0});
  }

}  // namespace highway
