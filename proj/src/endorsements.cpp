/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/endorsements.hpp"

#include <algorithm>
#include <map>

namespace highway {

  Bytes encodeEndorsement(const Endorsement &e) {
    ByteWriter w;
    w.u32(e.endorser);
    w.digest(e.target);
    return w.take();
  }

  Endorsement decodeEndorsement(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Endorsement e;
    e.endorser = r.u32();
    e.target = r.digest();
    if (!r.done()) {
      throw DecodeError("trailing bytes after endorsement");
    }
    return e;
  }

  EndorsementLedger::EndorsementLedger(WeightMap weights)
      : weights_(std::move(weights)) {}

  EndorsementLedger::Result EndorsementLedger::record(const Endorsement &e) {
    auto &entry = entries_[e.target];
    if (!entry.endorsers.insert(e.endorser).second) {
      return Result::kDuplicate;
    }
    entry.weight += weights_[e.endorser];
    if (!endorsed_.contains(e.target) && 2 * entry.weight > weights_.total()) {
      endorsed_.insert(e.target);
      ++version_;
      return Result::kNewlyEndorsed;
    }
    return Result::kRecorded;
  }

  const std::set<ValidatorId> &EndorsementLedger::endorsers(
      UnitHash target) const {
    static const std::set<ValidatorId> kNone;
    auto it = entries_.find(target);
    return it == entries_.end() ? kNone : it->second.endorsers;
  }

  void EndorsementLedger::clear() {
    entries_.clear();
    endorsed_.clear();
    ++version_;
  }

  const char *toString(EndorsementLedger::Result r) {
    switch (r) {
      case EndorsementLedger::Result::kRecorded:
        return "recorded";
      case EndorsementLedger::Result::kDuplicate:
        return "duplicate";
      case EndorsementLedger::Result::kNewlyEndorsed:
        return "newly_endorsed";
    }
    return "?";
  }

  const char *toString(EndorsementMode m) {
    switch (m) {
      case EndorsementMode::kOff:
        return "off";
      case EndorsementMode::kNaive:
        return "naive";
      case EndorsementMode::kRefined:
        return "refined";
    }
    return "?";
  }

  namespace {
    /// Adds D̄(w) to cover for every endorsed w among candidates, scanning
    /// from the top so that lower endorsed units are usually covered already.
    void absorbEndorsed(const LocalView &view,
                        const EndorsementLedger &ledger,
                        const std::vector<std::size_t> &candidates,
                        UnitSet &cover) {
      const auto &state = view.state();
      for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        if (!cover.test(*it) && ledger.isEndorsed(state.unit(*it).hash)) {
          cover.merge(state.closedDownset(*it));
        }
      }
    }

    UnitSet strictOf(const ProtocolState &state, std::size_t x) {
      auto s = state.closedDownset(x);
      s.reset(x);
      return s;
    }

    bool hasIncomparablePair(const ProtocolState &state,
                             const std::vector<std::size_t> &units) {
      for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t j = i + 1; j < units.size(); ++j) {
          if (state.isEquivocationIdx(units[i], units[j])) {
            return true;
          }
        }
      }
      return false;
    }
  }  // namespace

  UnitSet endorsedCover(const LocalView &view,
                        const EndorsementLedger &ledger,
                        const UnitSet &strict_downset) {
    UnitSet cover;
    absorbEndorsed(view, ledger, strict_downset.indices(), cover);
    return cover;
  }

  bool naivelyCites(const LocalView &view,
                    const EndorsementLedger &ledger,
                    std::size_t u,
                    std::size_t v) {
    const auto &state = view.state();
    if (u == v || !state.justifiesIdx(u, v)) {
      return false;
    }
    return !endorsedCover(view, ledger, strictOf(state, u)).test(v);
  }

  bool lncCheck(const LocalView &view,
                const EndorsementLedger &ledger,
                const Unit &unit) {
    const auto &state = view.state();
    auto pv = state.preview(unit);
    std::vector<bool> faulty(state.validatorCount(), false);
    bool any = false;
    for (std::size_t w = 0; w < faulty.size(); ++w) {
      if (pv.panorama[w].kind == SeenEntry::Kind::kFaulty) {
        faulty[w] = true;
        any = true;
      }
    }
    if (!any) {
      return true;
    }

    const auto sender = unit.sender;
    std::vector<std::size_t> own;
    for (auto i : state.unitsBy(sender)) {
      if (pv.strict_downset.test(i)) {
        own.push_back(i);
      }
    }
    std::map<ValidatorId, std::vector<std::size_t>> naive;
    auto collect = [&](const std::vector<std::size_t> &region,
                       const UnitSet &cover) {
      for (auto v : region) {
        auto w = state.unit(v).sender;
        if (faulty[w] && !cover.test(v)) {
          naive[w].push_back(v);
        }
      }
    };

    if (!faulty[sender]) {
      // Own units form a chain; each unit below u is judged against the
      // lowest own unit above it, and the cover only grows along the chain.
      UnitSet cover;
      UnitSet prev;
      auto step = [&](const UnitSet &strict) {
        auto region = strict.minus(prev);
        absorbEndorsed(view, ledger, region, cover);
        collect(region, cover);
        prev = strict;
      };
      for (auto x : own) {
        step(strictOf(state, x));
      }
      step(pv.strict_downset);
    } else {
      for (auto x : own) {
        auto strict = strictOf(state, x);
        collect(strict.indices(), endorsedCover(view, ledger, strict));
      }
      collect(pv.strict_downset.indices(),
              endorsedCover(view, ledger, pv.strict_downset));
    }

    for (auto &[w, units] : naive) {
      std::sort(units.begin(), units.end());
      units.erase(std::unique(units.begin(), units.end()), units.end());
      if (hasIncomparablePair(state, units)) {
        return false;
      }
    }
    return true;
  }

  bool shouldEndorse(const LocalView &view, EndorsementMode mode, std::size_t u) {
    const auto &state = view.state();
    const auto &known = state.equivocators();
    const auto sender = state.unit(u).sender;
    if (mode == EndorsementMode::kOff || known.contains(sender)) {
      return false;
    }
    if (mode == EndorsementMode::kNaive) {
      return true;
    }
    const auto &pano = state.panorama(u);
    const auto &prev = pano[sender];
    for (auto w : known) {
      const auto &latest = pano[w];
      if (latest.kind != SeenEntry::Kind::kUnit) {
        continue;  // faulty below u, or nothing by w below u
      }
      if (prev.kind != SeenEntry::Kind::kUnit
          || !state.justifiesIdx(prev.index, latest.index)) {
        return true;
      }
    }
    return false;
  }

  std::vector<UnitPtr> forkBomb(const std::vector<ValidatorId> &coalition,
                                std::size_t depth,
                                const std::vector<UnitHash> &base,
                                Tick round_id,
                                Tick timestamp,
                                const std::vector<std::uint64_t> &first_seq) {
    if (depth == 0 || coalition.size() < 2 * depth
        || first_seq.size() < 2 * depth) {
      throw std::invalid_argument("fork bomb needs 2k coalition members");
    }
    std::vector<UnitPtr> out;
    std::vector<UnitHash> below;  // previous (lower) layer
    for (std::size_t layer = depth; layer-- > 0;) {
      const std::size_t width = std::size_t{2} << layer;
      std::vector<UnitHash> current;
      for (std::size_t j = 0; j < width; ++j) {
        const auto member = 2 * layer + (j & 1);
        UnitFields f;
        f.sender = coalition[member];
        f.seq = first_seq[member];
        f.round_id = round_id;
        f.timestamp = timestamp + static_cast<Tick>(j / 2);
        f.kind = UnitKind::kWitness;
        f.citations = base;
        if (!below.empty()) {
          f.citations.push_back(below[2 * j]);
          f.citations.push_back(below[2 * j + 1]);
        }
        auto u = makeUnit(std::move(f));
        current.push_back(u->hash);
        out.push_back(std::move(u));
      }
      below = std::move(current);
    }
    return out;
  }

}  // namespace highway
