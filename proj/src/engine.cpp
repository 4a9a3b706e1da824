/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace highway {

  ValidatorId LeaderSchedule::leader(std::uint64_t key) const {
    if (kind == ScheduleKind::kRoundRobin) {
      return static_cast<ValidatorId>(key % n);
    }
    return static_cast<ValidatorId>(mix64(seed ^ mix64(key)) % n);
  }

  Validator::Validator(ValidatorConfig config,
                       UnitResolver resolver,
                       EventSink *sink)
      : config_(std::move(config)),
        resolver_(std::move(resolver)),
        sink_(sink),
        ledger_(config_.weights) {
    auto genesis = makeGenesis(config_.genesis_tag);
    view_ = std::make_unique<LocalView>(config_.weights, genesis);
    std::vector<Weight> tracked = config_.thresholds;
    if (config_.dynamic) {
      tracked.push_back(config_.dynamic->t0);
      exponent_ = config_.dynamic->n_min;
      round_length_ = Tick{1} << exponent_;
    } else {
      round_length_ = config_.round_length;
    }
    for (auto t : tracked) {
      chains_[t] = {genesis.hash};
      finalized_[t] = {genesis};
    }
  }

  const std::vector<Block> &Validator::finalized(Weight t) const {
    return finalized_.at(t);
  }

  ValidatorId Validator::leaderOf(Tick round_start) const {
    auto start = static_cast<std::uint64_t>(round_start);
    if (config_.dynamic) {
      return config_.schedule.leader(start >> config_.dynamic->n_min);
    }
    return config_.schedule.leader(start / static_cast<std::uint64_t>(round_length_));
  }

  Validator::Slot Validator::slotAt(Tick now) const {
    auto off = now - round_start_;
    if (off < round_length_ / 3) {
      return Slot::kEarly;
    }
    if (off < 2 * round_length_ / 3) {
      return Slot::kMiddle;
    }
    return Slot::kLate;
  }

  void Validator::emit(Message msg) {
    msg.from = config_.id;
    msg.era = era_;
    out_.push_back(Outbound{std::move(msg), std::nullopt});
  }

  std::vector<Outbound> Validator::onTimer(Tick now) {
    out_.clear();
    switch (phase_) {
      case 0:
        startRound(now);
        break;
      case 1:
        if (pending_confirmation_ || !confirmed_this_round_) {
          if (leaderOf(round_start_) != config_.id) {
            ++stats_.confirmations_skipped;
          }
        }
        pending_confirmation_.reset();
        drainBuffer(now);
        break;
      default:
        createUnit(UnitKind::kWitness, now);
        break;
    }
    checkFinality(now);
    scheduleNext();
    return std::move(out_);
  }

  void Validator::scheduleNext() {
    phase_ = (phase_ + 1) % 3;
    switch (phase_) {
      case 0:
        next_wakeup_ = round_start_ + round_length_;
        break;
      case 1:
        next_wakeup_ = round_start_ + round_length_ / 3;
        break;
      default:
        next_wakeup_ = round_start_ + 2 * round_length_ / 3;
        break;
    }
  }

  void Validator::startRound(Tick now) {
    if (config_.dynamic && now > 0) {
      updateExponent(now);
      round_length_ = Tick{1} << exponent_;
    }
    round_start_ = now;
    confirmed_this_round_ = false;
    pending_confirmation_.reset();
    maybeSwitchEra(now);
    if (leaderOf(now) == config_.id) {
      drainBuffer(now);
      createUnit(UnitKind::kProposal, now);
    }
  }

  void Validator::updateExponent(Tick now) {
    const auto &p = *config_.dynamic;
    const auto m = exponent_;
    if (now % (Tick{2} << m) != 0) {
      return;
    }
    const Tick window = Tick{p.c} << m;
    if (now - exponent_since_ < window) {
      return;
    }
    const auto b_fin = static_cast<unsigned>(std::count_if(
        t0_final_ticks_.begin(), t0_final_ticks_.end(),
        [&](Tick t) { return t > now - window; }));
    auto next = m;
    if (b_fin <= p.c_fail) {
      next = std::min(m + 1, p.n_max);
    }
    if (b_fin >= p.c_succ) {
      ++cnt_succ_;
    } else {
      cnt_succ_ = 0;
    }
    if (now % (Tick{p.c} * (Tick{2} << m)) == 0 && cnt_succ_ >= p.d) {
      next = std::max(m - 1, p.n_min);
      cnt_succ_ = 0;
    }
    if (next != m) {
      exponent_ = next;
      exponent_since_ = now;
      if (sink_ != nullptr) {
        sink_->exponentChanged(now, config_.id, next);
      }
    }
  }

  std::vector<Outbound> Validator::onMessage(const Message &msg, Tick now) {
    out_.clear();
    if (msg.era < era_) {
      ++stats_.dropped_stale;
      return {};
    }
    if (msg.era > era_) {
      future_era_.push_back(msg);
      return {};
    }
    if (msg.kind == Message::Kind::kUnit) {
      const auto &u = msg.unit;
      if (view_->state().contains(u->hash)) {
        return {};
      }
      switch (slotAt(now)) {
        case Slot::kEarly: {
          auto leader = leaderOf(round_start_);
          if (u->kind == UnitKind::kProposal && u->sender == leader
              && u->round_id == round_start_ && leader != config_.id) {
            if (admit(u, now)) {
              pending_confirmation_ = u->hash;
              maybeConfirm(now);
            }
          } else {
            timing_buffer_.push_back(u);
          }
          break;
        }
        case Slot::kMiddle:
          admit(u, now);
          break;
        case Slot::kLate:
          timing_buffer_.push_back(u);
          break;
      }
    } else {
      for (const auto &e : msg.endorsements) {
        if (banned_.contains(e.endorser) || e.endorser >= config_.weights.size()) {
          continue;
        }
        if (ledger_.record(e) == EndorsementLedger::Result::kNewlyEndorsed) {
          onNewlyEndorsed(e.target, now);
        }
      }
    }
    return std::move(out_);
  }

  void Validator::onNewlyEndorsed(UnitHash target, Tick now) {
    if (config_.endorsement != EndorsementMode::kOff
        && spread_done_.insert(target).second) {
      Message batch;
      batch.kind = Message::Kind::kEndorseBatch;
      for (auto v : ledger_.endorsers(target)) {
        batch.endorsements.push_back(Endorsement{v, target});
      }
      emit(std::move(batch));
    }
    lnc_triggers_.push_back(target);
    retryLncBuffer(now);
    if (pending_confirmation_ && *pending_confirmation_ == target) {
      maybeConfirm(now);
    }
  }

  bool Validator::passesFilters(const Unit &unit, Tick now, const char **why) const {
    if (unit.era != era_) {
      *why = "wrong era";
      return false;
    }
    if (banned_.contains(unit.sender)) {
      *why = "banned sender";
      return false;
    }
    if (unit.timestamp > now) {
      *why = "timestamp in the future";
      return false;
    }
    const Tick r_min = config_.dynamic ? (Tick{1} << config_.dynamic->n_min)
                                       : config_.round_length;
    const auto elapsed = std::max<Tick>(0, unit.timestamp - era_start_);
    const auto budget = static_cast<std::uint64_t>(2 * (elapsed / r_min + 2));
    if (unit.seq > budget) {
      *why = "unit budget exceeded";
      return false;
    }
    return true;
  }

  Validator::AdmitResult Validator::admitOne(const UnitPtr &unit, Tick now) {
    if (view_->state().contains(unit->hash)) {
      return AdmitResult::kOk;
    }
    const char *why = nullptr;
    if (!passesFilters(*unit, now, &why)) {
      ++stats_.dropped_spam;
      if (sink_ != nullptr) {
        sink_->unitDropped(now, config_.id, *unit, why);
      }
      return AdmitResult::kInvalid;
    }
    if (config_.endorsement != EndorsementMode::kOff
        && !lncCheck(*view_, ledger_, *unit)) {
      return AdmitResult::kLnc;
    }
    auto r = view_->insert(unit);
    if (!r.accepted()) {
      ++stats_.dropped_invalid;
      if (sink_ != nullptr) {
        sink_->unitDropped(now, config_.id, *unit, r.reason.c_str());
      }
      return AdmitResult::kInvalid;
    }
    afterInsert(r.index, now);
    return AdmitResult::kOk;
  }

  bool Validator::admit(const UnitPtr &unit, Tick now) {
    return admitTracked(unit, now) == AdmitResult::kOk;
  }

  Validator::AdmitResult Validator::admitTracked(const UnitPtr &unit, Tick now) {
    const auto &state = view_->state();
    if (state.contains(unit->hash)) {
      return AdmitResult::kOk;
    }
    // Post-order walk over missing ancestors.
    std::vector<UnitPtr> order;
    std::set<UnitHash> seen{unit->hash};
    std::vector<std::pair<UnitPtr, std::size_t>> stack{{unit, 0}};
    while (!stack.empty()) {
      auto &[u, next] = stack.back();
      if (next < u->citations.size()) {
        auto h = u->citations[next++];
        if (state.contains(h) || !seen.insert(h).second) {
          continue;
        }
        auto dep = resolver_ ? resolver_(h) : nullptr;
        if (!dep) {
          ++stats_.dropped_invalid;
          return AdmitResult::kInvalid;
        }
        stack.emplace_back(dep, 0);
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
    for (const auto &u : order) {
      auto r = admitOne(u, now);
      if (r == AdmitResult::kLnc) {
        parkLnc(unit, now);
        return r;
      }
      if (r != AdmitResult::kOk) {
        return r;
      }
    }
    return AdmitResult::kOk;
  }

  void Validator::parkLnc(const UnitPtr &unit, Tick now) {
    for (const auto &p : lnc_buffer_) {
      if (p->hash == unit->hash) {
        return;
      }
    }
    if (!retrying_) {
      ++stats_.lnc_parked;
      if (sink_ != nullptr) {
        sink_->lncParked(now, config_.id, *unit);
      }
    }
    lnc_buffer_.push_back(unit);
    while (lnc_buffer_.size() > config_.lnc_buffer_cap) {
      auto it = std::find_if(lnc_buffer_.begin(), lnc_buffer_.end(),
                             [](const UnitPtr &u) {
                               return u->kind != UnitKind::kProposal;
                             });
      if (it == lnc_buffer_.end()) {
        it = lnc_buffer_.begin();
      }
      lnc_buffer_.erase(it);
      ++stats_.lnc_overflow;
    }
  }

  // A parked unit's LNC outcome depends only on endorsements inside its
  // downset, so only units above a newly endorsed unit are retried.
  bool Validator::lncAffected(const Unit &unit,
                              const std::vector<UnitHash> &triggers) const {
    const auto &state = view_->state();
    for (auto c : unit.citations) {
      auto ci = state.indexOf(c);
      if (!ci) {
        return true;
      }
      for (auto x : triggers) {
        auto xi = state.indexOf(x);
        if (xi && state.justifiesIdx(*ci, *xi)) {
          return true;
        }
      }
    }
    return false;
  }

  void Validator::retryLncBuffer(Tick now) {
    if (retrying_) {
      retry_again_ = true;
      return;
    }
    retrying_ = true;
    bool everything = false;
    do {
      retry_again_ = false;
      auto triggers = std::move(lnc_triggers_);
      lnc_triggers_.clear();
      auto parked = std::move(lnc_buffer_);
      lnc_buffer_.clear();
      const bool all = everything;
      everything = false;
      for (const auto &u : parked) {
        if (!all && !lncAffected(*u, triggers)) {
          lnc_buffer_.push_back(u);
          continue;
        }
        if (admitTracked(u, now) == AdmitResult::kOk) {
          retry_again_ = true;
          everything = true;
        }
      }
    } while (retry_again_);
    retrying_ = false;
  }

  void Validator::drainBuffer(Tick now) {
    auto pending = std::move(timing_buffer_);
    timing_buffer_.clear();
    for (const auto &u : pending) {
      admit(u, now);
    }
  }

  void Validator::afterInsert(std::size_t idx, Tick now) {
    const auto &state = view_->state();
    const auto &unit = state.unit(idx);
    if (sink_ != nullptr) {
      sink_->unitAdded(now, config_.id, unit);
    }
    if (config_.endorsement == EndorsementMode::kOff) {
      return;
    }
    const auto known = state.equivocators().size();
    if (known > known_equivocators_) {
      known_equivocators_ = known;
      forwardEvidence();
      if (!cautious_) {
        cautious_ = true;
        if (sink_ != nullptr) {
          sink_->modeChanged(now, config_.id, true);
        }
      }
      // Entering cautious mode or learning a new equivocator can make
      // already-known units eligible.
      for (std::size_t i = 0; i < state.size(); ++i) {
        if (shouldEndorse(*view_, config_.endorsement, i)) {
          endorse(i, now);
        }
      }
      return;
    }
    if (cautious_ && shouldEndorse(*view_, config_.endorsement, idx)) {
      endorse(idx, now);
    }
  }

  // Twins may reach only part of the honest set, and cautious validators
  // never cite them. Forward one pair per equivocator so every honest
  // validator turns cautious and endorses.
  void Validator::forwardEvidence() {
    const auto &state = view_->state();
    for (const auto &ev : state.evidence()) {
      auto a = state.require(ev.first);
      if (!evidence_forwarded_.insert(state.unit(a).sender).second) {
        continue;
      }
      for (auto h : {ev.first, ev.second}) {
        Message m;
        m.kind = Message::Kind::kUnit;
        m.unit = state.unitPtr(state.require(h));
        emit(std::move(m));
      }
    }
  }

  void Validator::endorse(std::size_t idx, Tick now) {
    const auto &unit = view_->state().unit(idx);
    if (!endorsed_by_me_.insert(unit.hash).second) {
      return;
    }
    Endorsement e{config_.id, unit.hash};
    emitted_.push_back(e);
    ++stats_.endorsements_sent;
    if (sink_ != nullptr) {
      sink_->endorsed(now, config_.id, e);
    }
    Message m;
    m.kind = Message::Kind::kEndorse;
    m.endorsements.push_back(e);
    emit(std::move(m));
    if (ledger_.record(e) == EndorsementLedger::Result::kNewlyEndorsed) {
      onNewlyEndorsed(e.target, now);
    }
  }

  std::vector<UnitHash> Validator::chooseCitations() const {
    const auto &state = view_->state();
    std::vector<UnitHash> all;
    for (auto i : state.maximalUnits()) {
      all.push_back(state.unit(i).hash);
    }
    if (config_.endorsement == EndorsementMode::kOff || !cautious_) {
      return all;
    }
    auto lncOk = [&](const std::vector<UnitHash> &cits) {
      Unit probe;
      probe.sender = config_.id;
      probe.citations = cits;
      std::sort(probe.citations.begin(), probe.citations.end());
      return lncCheck(*view_, ledger_, probe);
    };
    std::vector<UnitHash> cits;
    if (last_own_) {
      cits.push_back(*last_own_);
    }
    if (config_.endorsement == EndorsementMode::kNaive) {
      for (ValidatorId y = 0; y < state.validatorCount(); ++y) {
        std::vector<std::size_t> picked;
        const auto &units = state.unitsBy(y);
        for (auto it = units.rbegin(); it != units.rend(); ++it) {
          if (!ledger_.isEndorsed(state.unit(*it).hash)) {
            continue;
          }
          bool covered = std::any_of(picked.begin(), picked.end(), [&](auto p) {
            return state.justifiesIdx(p, *it);
          });
          if (!covered) {
            picked.push_back(*it);
          }
        }
        for (auto p : picked) {
          cits.push_back(state.unit(p).hash);
        }
      }
      std::sort(cits.begin(), cits.end());
      cits.erase(std::unique(cits.begin(), cits.end()), cits.end());
      if (lncOk(cits)) {
        return cits;
      }
      cits.clear();
      if (last_own_) {
        cits.push_back(*last_own_);
      }
      return cits;
    }
    // Refined: add maximal units greedily while the criterion holds,
    // units by known-honest senders first.
    std::vector<std::size_t> order(state.maximalUnits().begin(),
                                   state.maximalUnits().end());
    const auto &faulty = state.equivocators();
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return !faulty.contains(state.unit(a).sender)
             && faulty.contains(state.unit(b).sender);
    });
    for (auto i : order) {
      auto h = state.unit(i).hash;
      if (std::find(cits.begin(), cits.end(), h) != cits.end()) {
        continue;
      }
      cits.push_back(h);
      if (!lncOk(cits)) {
        cits.pop_back();
      }
    }
    return cits;
  }

  UnitPtr Validator::createUnit(UnitKind kind, Tick now) {
    auto citations = chooseCitations();
    UnitFields f;
    f.sender = config_.id;
    f.seq = next_seq_++;
    f.round_id = round_start_;
    f.timestamp = now;
    f.kind = kind;
    f.era = era_;
    if (kind == UnitKind::kProposal) {
      auto parent = view_->chooseProposalParent(config_.id, citations);
      ByteWriter payload;
      payload.u32(era_);
      payload.i64(round_start_);
      payload.u32(config_.id);
      f.block = makeBlock(parent, view_->tree().get(parent).height,
                          payload.take(), config_.id, now);
    }
    f.citations = std::move(citations);
    auto unit = makeUnit(std::move(f));
    auto r = view_->insert(unit);
    if (!r.accepted()) {
      throw std::logic_error("own unit rejected: " + r.reason);
    }
    last_own_ = unit->hash;
    own_units_.push_back(unit->hash);
    ++stats_.units_created;
    if (sink_ != nullptr) {
      sink_->unitCreated(now, config_.id, *unit);
    }
    afterInsert(r.index, now);
    Message m;
    m.kind = Message::Kind::kUnit;
    m.unit = unit;
    emit(std::move(m));
    return unit;
  }

  void Validator::maybeConfirm(Tick now) {
    if (!pending_confirmation_ || confirmed_this_round_
        || slotAt(now) != Slot::kEarly) {
      return;
    }
    if (config_.endorsement == EndorsementMode::kNaive && cautious_
        && !ledger_.isEndorsed(*pending_confirmation_)) {
      return;
    }
    pending_confirmation_.reset();
    confirmed_this_round_ = true;
    createUnit(UnitKind::kConfirmation, now);
  }

  void Validator::checkFinality(Tick now) {
    const auto t0 = config_.dynamic ? std::optional<Weight>(config_.dynamic->t0)
                                    : std::nullopt;
    // Past the switch block the era is over; later blocks are discarded.
    const auto cap = config_.era_length > 0
                         ? config_.era_length * (era_ + 1) - 1
                         : std::numeric_limits<std::uint64_t>::max();
    for (auto &[t, chain] : chains_) {
      auto before = chain.size();
      if (view_->tree().get(chain.back()).height < cap) {
        extendFinalized(*view_, t, chain);
      }
      while (chain.size() > before && view_->tree().get(chain.back()).height > cap) {
        chain.pop_back();
      }
      for (auto i = before; i < chain.size(); ++i) {
        const auto &b = view_->tree().get(chain[i]);
        finalized_[t].push_back(b);
        if (t0 && t == *t0) {
          t0_final_ticks_.push_back(now);
        }
        if (sink_ != nullptr) {
          sink_->finalized(now, config_.id, t, b);
        }
      }
    }
    if (era_switch_block_ || config_.era_length == 0) {
      return;
    }
    const auto t_min = *std::min_element(config_.thresholds.begin(),
                                          config_.thresholds.end());
    const auto target = config_.era_length * (era_ + 1) - 1;
    for (auto h : chains_[t_min]) {
      if (view_->tree().get(h).height == target) {
        const auto t_max = *std::max_element(config_.thresholds.begin(),
                                              config_.thresholds.end());
        auto grace = static_cast<Tick>(
                         std::ceil(std::log2(static_cast<double>(t_max) + 1)))
                     + 3;
        era_switch_block_ = h;
        era_switch_at_ = now + grace * round_length_;
        break;
      }
    }
  }

  void Validator::maybeSwitchEra(Tick now) {
    if (!era_switch_at_ || now < *era_switch_at_) {
      return;
    }
    const auto &old_tree = view_->tree();
    auto genesis = old_tree.get(*era_switch_block_);
    auto path = old_tree.pathTo(genesis.hash);
    for (auto &[t, blocks] : finalized_) {
      for (auto h : path) {
        const auto &b = old_tree.get(h);
        if (b.height > blocks.back().height) {
          blocks.push_back(b);
          if (sink_ != nullptr) {
            sink_->finalized(now, config_.id, t, b);
          }
        }
      }
    }
    for (auto v : view_->state().equivocators()) {
      banned_.insert(v);
    }
    view_ = std::make_unique<LocalView>(config_.weights, genesis);
    ledger_.clear();
    lnc_buffer_.clear();
    timing_buffer_.clear();
    spread_done_.clear();
    lnc_triggers_.clear();
    evidence_forwarded_.clear();
    endorsed_by_me_.clear();
    cautious_ = false;
    known_equivocators_ = 0;
    ++era_;
    era_start_ = now;
    next_seq_ = 0;
    last_own_.reset();
    own_units_.clear();
    pending_confirmation_.reset();
    for (auto &[t, chain] : chains_) {
      chain = {genesis.hash};
    }
    era_switch_block_.reset();
    era_switch_at_.reset();
    if (sink_ != nullptr) {
      sink_->eraStarted(now, config_.id, era_, genesis);
    }
    auto waiting = std::move(future_era_);
    future_era_.clear();
    auto saved = std::move(out_);
    for (const auto &m : waiting) {
      auto more = onMessage(m, now);
      saved.insert(saved.end(), more.begin(), more.end());
    }
    out_ = std::move(saved);
  }

}  // namespace highway
