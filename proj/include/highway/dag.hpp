/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "highway/encoding.hpp"
#include "highway/types.hpp"

namespace highway {

  /// A block proposal. Genesis is the only block without a parent.
  struct Block {
    BlockHash hash;
    std::optional<BlockHash> parent;
    std::uint64_t height = 0;
    Bytes payload;
    ValidatorId creator = 0;
    Tick slot = 0;

    bool operator==(const Block &) const = default;
  };

  Block makeBlock(BlockHash parent,
                  std::uint64_t parent_height,
                  Bytes payload,
                  ValidatorId creator,
                  Tick slot);
  Block makeGenesis(std::uint64_t tag = 0);

  Bytes encodeBlock(const Block &block);
  Block decodeBlock(std::span<const std::uint8_t> data);

  enum class UnitKind : std::uint8_t {
    kProposal = 0,
    kConfirmation = 1,
    kWitness = 2,
  };

  const char *toString(UnitKind kind);

  struct Unit {
    ValidatorId sender = 0;
    std::uint64_t seq = 0;
    Tick round_id = 0;
    Tick timestamp = 0;
    UnitKind kind = UnitKind::kWitness;
    /// Sorted ascending, no duplicates.
    std::vector<UnitHash> citations;
    std::optional<Block> block;
    /// Transport metadata; not part of the canonical encoding.
    std::uint32_t era = 0;
    UnitHash hash;

    bool operator==(const Unit &) const = default;
  };

  using UnitPtr = std::shared_ptr<const Unit>;

  struct UnitFields {
    ValidatorId sender = 0;
    std::uint64_t seq = 0;
    Tick round_id = 0;
    Tick timestamp = 0;
    UnitKind kind = UnitKind::kWitness;
    std::vector<UnitHash> citations;
    std::optional<Block> block;
    std::uint32_t era = 0;
  };

  /// Sorts citations and computes the hash over the canonical encoding.
  UnitPtr makeUnit(UnitFields fields);

  /// Canonical encoding: sender, seq, round_id, timestamp, kind, sorted
  /// citations, optional block hash. Integers are little-endian fixed width.
  Bytes encodeUnit(const Unit &unit);

  /// Inverse of encodeUnit. The block body and era travel separately.
  UnitFields decodeUnit(std::span<const std::uint8_t> data,
                        BlockHash *block_hash);

  /// Authorship hook. The simulator trusts the transport boundary.
  class SignatureVerifier {
   public:
    virtual ~SignatureVerifier() = default;
    virtual bool verify(const Unit &unit) const = 0;
  };

  class TrustedSender final : public SignatureVerifier {
   public:
    bool verify(const Unit &) const override {
      return true;
    }
  };

  /// Growable bitset over local unit indices.
  class UnitSet {
   public:
    bool test(std::size_t i) const {
      auto w = i / 64;
      return w < words_.size() && ((words_[w] >> (i % 64)) & 1U);
    }
    void set(std::size_t i) {
      auto w = i / 64;
      if (w >= words_.size()) {
        words_.resize(w + 1, 0);
      }
      words_[w] |= std::uint64_t{1} << (i % 64);
    }
    void reset(std::size_t i) {
      auto w = i / 64;
      if (w < words_.size()) {
        words_[w] &= ~(std::uint64_t{1} << (i % 64));
      }
    }
    void merge(const UnitSet &other) {
      if (other.words_.size() > words_.size()) {
        words_.resize(other.words_.size(), 0);
      }
      for (std::size_t i = 0; i < other.words_.size(); ++i) {
        words_[i] |= other.words_[i];
      }
    }
    std::size_t count() const;
    std::vector<std::size_t> indices() const;
    /// Members of this set missing from other, ascending.
    std::vector<std::size_t> minus(const UnitSet &other) const;

   private:
    std::vector<std::uint64_t> words_;
  };

  struct EvidencePair {
    UnitHash first;
    UnitHash second;

    auto operator<=>(const EvidencePair &) const = default;
  };

  /// What a unit's strict downset says about one validator.
  struct SeenEntry {
    enum class Kind : std::uint8_t { kNone, kUnit, kFaulty };
    Kind kind = Kind::kNone;
    std::size_t index = 0;
  };

  using Panorama = std::vector<SeenEntry>;

  struct InsertOutcome {
    enum class Status { kAccepted, kDuplicate, kMissingDependencies, kRejected };

    Status status = Status::kRejected;
    std::vector<UnitHash> missing;
    std::string reason;
    std::size_t index = 0;

    bool accepted() const {
      return status == Status::kAccepted;
    }
  };

  const char *toString(InsertOutcome::Status status);

  enum class Scope {
    kStrict,  ///< D(S)
    kClosed,  ///< D̄(S)
  };

  class UnknownUnit : public std::out_of_range {
   public:
    explicit UnknownUnit(UnitHash h)
        : std::out_of_range("unknown unit " + h.hex()) {}
  };

  /// A citation-closed set of units with equivocation evidence.
  ///
  /// Units receive dense local indices in insertion order; every query that
  /// takes an index is the fast path for the hash-based variant.
  class ProtocolState {
   public:
    explicit ProtocolState(std::size_t validator_count);

    std::size_t validatorCount() const {
      return validator_count_;
    }
    std::size_t size() const {
      return records_.size();
    }

    /// Checks well-formedness and dependencies without mutating.
    InsertOutcome check(const Unit &unit) const;

    /// Strict downset and panorama a unit with these citations would have.
    /// All citations must be present.
    struct Preview {
      UnitSet strict_downset;
      Panorama panorama;
      std::optional<std::size_t> self_parent;
    };
    Preview preview(const Unit &unit) const;
    InsertOutcome insert(UnitPtr unit);

    bool contains(UnitHash h) const {
      return by_hash_.contains(h);
    }
    std::optional<std::size_t> indexOf(UnitHash h) const;
    std::size_t require(UnitHash h) const;

    const Unit &unit(std::size_t idx) const {
      return *records_[idx].unit;
    }
    const UnitPtr &unitPtr(std::size_t idx) const {
      return records_[idx].unit;
    }

    /// b ≤ a (reflexive).
    bool justifies(UnitHash a, UnitHash b) const;
    bool justifiesIdx(std::size_t a, std::size_t b) const {
      return records_[a].closed_downset.test(b);
    }
    const UnitSet &closedDownset(std::size_t idx) const {
      return records_[idx].closed_downset;
    }

    std::vector<UnitHash> downset(UnitHash u, Scope scope = Scope::kStrict) const;
    std::vector<UnitHash> downsetOf(std::span<const UnitHash> units,
                                    Scope scope = Scope::kStrict) const;

    bool isEquivocation(UnitHash a, UnitHash b) const;
    bool isEquivocationIdx(std::size_t a, std::size_t b) const;

    /// E(S) evaluated over D(S) or D̄(S).
    std::set<ValidatorId> equivocators(std::span<const UnitHash> units,
                                       Scope scope) const;
    std::set<ValidatorId> equivocatorsIdx(std::span<const std::size_t> units,
                                          Scope scope) const;
    /// E(σ): validators with recorded evidence anywhere in the state.
    const std::set<ValidatorId> &equivocators() const {
      return known_equivocators_;
    }
    const std::vector<EvidencePair> &evidence() const {
      return evidence_;
    }

    /// L(u), keyed by validator.
    std::vector<std::pair<ValidatorId, UnitHash>> latestMessages(UnitHash u) const;
    /// L_V(u), or nullopt for ⊥.
    std::optional<UnitHash> latestMessage(UnitHash u, ValidatorId v) const;
    const Panorama &panorama(std::size_t idx) const {
      return records_[idx].panorama;
    }

    /// Local indices of v's units in insertion order.
    const std::vector<std::size_t> &unitsBy(ValidatorId v) const {
      return by_sender_.at(v);
    }
    /// v's units that no other unit of v is above.
    const std::vector<std::size_t> &tipsOf(ValidatorId v) const {
      return tips_.at(v);
    }
    /// Units not cited by any other unit.
    const std::set<std::size_t> &maximalUnits() const {
      return maximal_;
    }

    /// Previous unit by the same sender among the direct citations, if any.
    std::optional<std::size_t> selfParent(std::size_t idx) const {
      return records_[idx].self_parent;
    }

   private:
    struct Record {
      UnitPtr unit;
      UnitSet closed_downset;
      Panorama panorama;
      std::optional<std::size_t> self_parent;
    };

    void mergeSeen(SeenEntry &acc, const SeenEntry &cand) const;

    std::size_t validator_count_;
    std::vector<Record> records_;
    std::unordered_map<UnitHash, std::size_t> by_hash_;
    std::vector<std::vector<std::size_t>> by_sender_;
    std::vector<std::vector<std::size_t>> tips_;
    std::set<std::size_t> maximal_;
    std::vector<EvidencePair> evidence_;
    std::set<ValidatorId> known_equivocators_;
  };

  /// Size of the largest pairwise-incomparable subset (Dilworth via
  /// bipartite matching on the comparability relation).
  std::size_t maxAntichain(const ProtocolState &state,
                           std::span<const std::size_t> units);

}  // namespace highway
