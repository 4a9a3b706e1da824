/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <set>
#include <unordered_map>
#include <vector>

#include "highway/view.hpp"

namespace highway {

  struct Endorsement {
    ValidatorId endorser = 0;
    UnitHash target;

    auto operator<=>(const Endorsement &) const = default;
  };

  Bytes encodeEndorsement(const Endorsement &e);
  Endorsement decodeEndorsement(std::span<const std::uint8_t> data);

  /// Endorser sets per unit hash. A unit is endorsed once its endorsers'
  /// weight exceeds half the total; the flag never reverts.
  class EndorsementLedger {
   public:
    enum class Result { kRecorded, kDuplicate, kNewlyEndorsed };

    explicit EndorsementLedger(WeightMap weights);

    Result record(const Endorsement &e);

    bool isEndorsed(UnitHash target) const {
      return endorsed_.contains(target);
    }
    const std::set<ValidatorId> &endorsers(UnitHash target) const;
    std::size_t endorsedCount() const {
      return endorsed_.size();
    }
    /// Bumped on every newly endorsed unit.
    std::uint64_t version() const {
      return version_;
    }
    void clear();

   private:
    struct Entry {
      std::set<ValidatorId> endorsers;
      Weight weight = 0;
    };

    WeightMap weights_;
    std::unordered_map<UnitHash, Entry> entries_;
    std::set<UnitHash> endorsed_;
    std::uint64_t version_ = 0;
  };

  const char *toString(EndorsementLedger::Result r);

  /// Units below x (or below a prospective unit with the given strict
  /// downset) that lie under some endorsed unit of that downset.
  UnitSet endorsedCover(const LocalView &view,
                        const EndorsementLedger &ledger,
                        const UnitSet &strict_downset);

  /// u >ₙ v: u > v with no endorsed w such that u > w ≥ v.
  bool naivelyCites(const LocalView &view,
                    const EndorsementLedger &ledger,
                    std::size_t u,
                    std::size_t v);

  /// Limited Naivety Criterion for a unit whose citations are present in
  /// the view (the unit itself need not be inserted).
  bool lncCheck(const LocalView &view,
                const EndorsementLedger &ledger,
                const Unit &unit);

  enum class EndorsementMode { kOff, kNaive, kRefined };

  const char *toString(EndorsementMode m);

  /// Naive: sender has no known equivocation. Refined: additionally some
  /// known equivocator W, not faulty below u, has a unit below u that u's
  /// predecessor by the same sender does not see.
  bool shouldEndorse(const LocalView &view,
                     EndorsementMode mode,
                     std::size_t u);

  /// Layered fork-bomb pattern for a coalition of 2k validators. Layer 0
  /// (top) holds 2 units by coalition[0], coalition[1]; layer i holds 2^(i+1)
  /// units split between coalition[2i] and coalition[2i+1], each parent
  /// citing one unit of each. Returned bottom-up, in citation order.
  std::vector<UnitPtr> forkBomb(const std::vector<ValidatorId> &coalition,
                                std::size_t depth,
                                const std::vector<UnitHash> &base,
                                Tick round_id,
                                Tick timestamp,
                                const std::vector<std::uint64_t> &first_seq);

}  // namespace highway
