/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace highway {

  using ValidatorId = std::uint32_t;
  using Tick = std::int64_t;
  using Weight = std::int64_t;

  /// Opaque 64-bit digest. Ordering is the tie-break order used everywhere.
  struct Digest {
    std::uint64_t value = 0;

    auto operator<=>(const Digest &) const = default;

    std::string hex() const;
    static Digest fromHex(const std::string &text);
  };

  using UnitHash = Digest;
  using BlockHash = Digest;

  /// Per-validator voting weight. Unweighted mode is all ones.
  class WeightMap {
   public:
    WeightMap() = default;
    explicit WeightMap(std::vector<Weight> weights);

    static WeightMap uniform(std::size_t n) {
      return WeightMap(std::vector<Weight>(n, 1));
    }

    std::size_t size() const {
      return weights_.size();
    }
    Weight total() const {
      return total_;
    }
    Weight operator[](ValidatorId v) const {
      return weights_.at(v);
    }
    const std::vector<Weight> &values() const {
      return weights_;
    }

    template <typename Range>
    Weight sum(const Range &ids) const {
      Weight w = 0;
      for (ValidatorId v : ids) {
        w += weights_.at(v);
      }
      return w;
    }

   private:
    std::vector<Weight> weights_;
    Weight total_ = 0;
  };

}  // namespace highway

template <>
struct std::hash<highway::Digest> {
  std::size_t operator()(const highway::Digest &d) const noexcept {
    return static_cast<std::size_t>(d.value);
  }
};
