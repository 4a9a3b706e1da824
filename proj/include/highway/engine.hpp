/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "highway/endorsements.hpp"
#include "highway/finality.hpp"
#include "highway/view.hpp"

namespace highway {

  enum class ScheduleKind { kRoundRobin, kSeeded };

  struct LeaderSchedule {
    ScheduleKind kind = ScheduleKind::kRoundRobin;
    std::uint64_t seed = 0;
    std::size_t n = 1;

    /// round_robin: round_index mod n; seeded: hash(seed, key) mod n.
    ValidatorId leader(std::uint64_t round_index) const;
  };

  struct DynamicRounds {
    unsigned n_min = 4;
    unsigned n_max = 10;
    Weight t0 = 0;
    unsigned c_fail = 10;
    unsigned c_succ = 32;
    unsigned c = 40;
    unsigned d = 3;
  };

  struct ValidatorConfig {
    ValidatorId id = 0;
    WeightMap weights;
    std::vector<Weight> thresholds{0};
    EndorsementMode endorsement = EndorsementMode::kOff;
    LeaderSchedule schedule;
    /// Fixed round length in ticks; ignored when dynamic is set.
    Tick round_length = 30;
    std::optional<DynamicRounds> dynamic;
    std::uint64_t era_length = 1000;
    std::size_t lnc_buffer_cap = 4096;
    std::uint64_t genesis_tag = 0;
  };

  struct Message {
    enum class Kind { kUnit, kEndorse, kEndorseBatch };

    Kind kind = Kind::kUnit;
    ValidatorId from = 0;
    std::uint32_t era = 0;
    UnitPtr unit;
    std::vector<Endorsement> endorsements;
  };

  struct Outbound {
    Message msg;
    /// Empty means broadcast to every other validator.
    std::optional<ValidatorId> to;
  };

  /// Looks up a unit by hash among everything ever sent. Downsets travel
  /// with units, so a receiver can always fetch missing citations.
  using UnitResolver = std::function<UnitPtr(UnitHash)>;

  /// Observer for trace output.
  class EventSink {
   public:
    virtual ~EventSink() = default;
    virtual void unitCreated(Tick, ValidatorId, const Unit &) {}
    virtual void unitAdded(Tick, ValidatorId, const Unit &) {}
    virtual void unitDropped(Tick, ValidatorId, const Unit &, const char *) {}
    virtual void lncParked(Tick, ValidatorId, const Unit &) {}
    virtual void endorsed(Tick, ValidatorId, const Endorsement &) {}
    virtual void finalized(Tick, ValidatorId, Weight, const Block &) {}
    virtual void exponentChanged(Tick, ValidatorId, unsigned) {}
    virtual void eraStarted(Tick, ValidatorId, std::uint32_t, const Block &) {}
    virtual void modeChanged(Tick, ValidatorId, bool) {}
  };

  struct ValidatorStats {
    std::size_t units_created = 0;
    std::size_t endorsements_sent = 0;
    std::size_t dropped_spam = 0;
    std::size_t dropped_invalid = 0;
    std::size_t dropped_stale = 0;
    std::size_t lnc_parked = 0;
    std::size_t lnc_overflow = 0;
    std::size_t confirmations_skipped = 0;
  };

  /// Per-validator protocol state machine driven by timers and deliveries.
  class Validator {
   public:
    Validator(ValidatorConfig config, UnitResolver resolver, EventSink *sink);

    ValidatorId id() const {
      return config_.id;
    }
    const ValidatorConfig &config() const {
      return config_;
    }

    /// Next tick at which onTimer must be called.
    Tick nextWakeup() const {
      return next_wakeup_;
    }
    std::vector<Outbound> onTimer(Tick now);
    std::vector<Outbound> onMessage(const Message &msg, Tick now);

    const LocalView &view() const {
      return *view_;
    }
    const EndorsementLedger &ledger() const {
      return ledger_;
    }
    bool cautious() const {
      return cautious_;
    }
    std::uint32_t era() const {
      return era_;
    }
    unsigned exponent() const {
      return exponent_;
    }
    std::uint64_t nextSeq() const {
      return next_seq_;
    }
    Tick roundStart() const {
      return round_start_;
    }
    Tick roundLength() const {
      return round_length_;
    }
    const std::set<ValidatorId> &banned() const {
      return banned_;
    }
    const ValidatorStats &stats() const {
      return stats_;
    }
    /// Finalized blocks per threshold across all eras, genesis first.
    const std::vector<Block> &finalized(Weight t) const;
    /// Own units in creation order (current era).
    const std::vector<UnitHash> &ownUnits() const {
      return own_units_;
    }
    /// Every endorsement this validator emitted.
    const std::vector<Endorsement> &emittedEndorsements() const {
      return emitted_;
    }
    std::size_t lncBufferSize() const {
      return lnc_buffer_.size();
    }

    /// Units for the current maximal-citation policy, exposed for drivers.
    std::vector<UnitHash> chooseCitations() const;

   private:
    enum class Slot { kEarly, kMiddle, kLate };
    enum class AdmitResult { kOk, kLnc, kInvalid };

    Slot slotAt(Tick now) const;
    ValidatorId leaderOf(Tick round_start) const;
    void startRound(Tick now);
    void scheduleNext();
    void updateExponent(Tick now);

    /// Inserts a unit and any missing ancestors. Returns true when the unit
    /// itself is in the DAG afterwards.
    bool admit(const UnitPtr &unit, Tick now);
    AdmitResult admitTracked(const UnitPtr &unit, Tick now);
    AdmitResult admitOne(const UnitPtr &unit, Tick now);
    bool passesFilters(const Unit &unit, Tick now, const char **why) const;
    void parkLnc(const UnitPtr &unit, Tick now);
    void afterInsert(std::size_t idx, Tick now);
    void forwardEvidence();
    void endorse(std::size_t idx, Tick now);
    void onNewlyEndorsed(UnitHash target, Tick now);
    void retryLncBuffer(Tick now);
    bool lncAffected(const Unit &unit, const std::vector<UnitHash> &triggers) const;
    void drainBuffer(Tick now);

    UnitPtr createUnit(UnitKind kind, Tick now);
    void maybeConfirm(Tick now);
    void checkFinality(Tick now);
    void maybeSwitchEra(Tick now);

    void emit(Message msg);

    ValidatorConfig config_;
    UnitResolver resolver_;
    EventSink *sink_;
    std::unique_ptr<LocalView> view_;
    EndorsementLedger ledger_;

    std::uint32_t era_ = 0;
    Tick era_start_ = 0;
    std::set<ValidatorId> banned_;
    bool cautious_ = false;
    std::size_t known_equivocators_ = 0;

    Tick round_start_ = 0;
    Tick round_length_ = 0;
    unsigned exponent_ = 0;
    Tick next_wakeup_ = 0;
    int phase_ = 0;  // 0: round start, 1: R/3, 2: 2R/3
    unsigned cnt_succ_ = 0;
    Tick exponent_since_ = 0;

    std::uint64_t next_seq_ = 0;
    std::optional<UnitHash> last_own_;
    std::vector<UnitHash> own_units_;
    std::optional<UnitHash> pending_confirmation_;
    bool confirmed_this_round_ = false;

    std::deque<UnitPtr> timing_buffer_;
    std::deque<UnitPtr> lnc_buffer_;
    bool retrying_ = false;
    bool retry_again_ = false;
    std::vector<UnitHash> lnc_triggers_;
    std::vector<Message> future_era_;
    std::set<UnitHash> spread_done_;
    std::set<ValidatorId> evidence_forwarded_;
    std::set<UnitHash> endorsed_by_me_;

    std::map<Weight, std::vector<BlockHash>> chains_;  // current era
    std::map<Weight, std::vector<Block>> finalized_;   // all eras
    std::vector<Tick> t0_final_ticks_;
    std::optional<Tick> era_switch_at_;
    std::optional<BlockHash> era_switch_block_;

    std::vector<Outbound> out_;
    std::vector<Endorsement> emitted_;
    ValidatorStats stats_;
  };

}  // namespace highway
