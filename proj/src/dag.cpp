/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/dag.hpp"

#include <algorithm>
#include <bit>
#include <functional>

namespace highway {

  Block makeBlock(BlockHash parent,
                  std::uint64_t parent_height,
                  Bytes payload,
                  ValidatorId creator,
                  Tick slot) {
    Block b;
    b.parent = parent;
    b.height = parent_height + 1;
    b.payload = std::move(payload);
    b.creator = creator;
    b.slot = slot;
    auto enc = encodeBlock(b);
    b.hash = hash64(enc);
    return b;
  }

  Block makeGenesis(std::uint64_t tag) {
    Block g;
    ByteWriter w;
    w.u64(tag);
    g.payload = w.take();
    g.hash = hash64(encodeBlock(g));
    return g;
  }

  Bytes encodeBlock(const Block &block) {
    ByteWriter w;
    w.u8(block.parent ? 1 : 0);
    if (block.parent) {
      w.digest(*block.parent);
    }
    w.u64(block.height);
    w.u32(block.creator);
    w.i64(block.slot);
    w.bytes(block.payload);
    return w.take();
  }

  Block decodeBlock(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Block b;
    if (r.u8() != 0) {
      b.parent = r.digest();
    }
    b.height = r.u64();
    b.creator = r.u32();
    b.slot = r.i64();
    b.payload = r.bytes();
    if (!r.done()) {
      throw DecodeError("trailing bytes after block");
    }
    b.hash = hash64(encodeBlock(b));
    return b;
  }

  const char *toString(UnitKind kind) {
    switch (kind) {
      case UnitKind::kProposal:
        return "proposal";
      case UnitKind::kConfirmation:
        return "confirmation";
      case UnitKind::kWitness:
        return "witness";
    }
    return "?";
  }

  const char *toString(InsertOutcome::Status status) {
    switch (status) {
      case InsertOutcome::Status::kAccepted:
        return "accepted";
      case InsertOutcome::Status::kDuplicate:
        return "duplicate";
      case InsertOutcome::Status::kMissingDependencies:
        return "missing_dependencies";
      case InsertOutcome::Status::kRejected:
        return "rejected";
    }
    return "?";
  }

  Bytes encodeUnit(const Unit &unit) {
    ByteWriter w;
    w.u32(unit.sender);
    w.u64(unit.seq);
    w.i64(unit.round_id);
    w.i64(unit.timestamp);
    w.u8(static_cast<std::uint8_t>(unit.kind));
    w.u32(static_cast<std::uint32_t>(unit.citations.size()));
    for (auto c : unit.citations) {
      w.digest(c);
    }
    w.u8(unit.block ? 1 : 0);
    if (unit.block) {
      w.digest(unit.block->hash);
    }
    return w.take();
  }

  UnitFields decodeUnit(std::span<const std::uint8_t> data,
                        BlockHash *block_hash) {
    ByteReader r(data);
    UnitFields f;
    f.sender = r.u32();
    f.seq = r.u64();
    f.round_id = r.i64();
    f.timestamp = r.i64();
    auto kind = r.u8();
    if (kind > 2) {
      throw DecodeError("bad unit kind");
    }
    f.kind = static_cast<UnitKind>(kind);
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      f.citations.push_back(r.digest());
    }
    bool has_block = r.u8() != 0;
    BlockHash bh;
    if (has_block) {
      bh = r.digest();
    }
    if (block_hash != nullptr) {
      *block_hash = has_block ? bh : BlockHash{};
    }
    if (!r.done()) {
      throw DecodeError("trailing bytes after unit");
    }
    return f;
  }

  UnitPtr makeUnit(UnitFields fields) {
    auto u = std::make_shared<Unit>();
    u->sender = fields.sender;
    u->seq = fields.seq;
    u->round_id = fields.round_id;
    u->timestamp = fields.timestamp;
    u->kind = fields.kind;
    u->citations = std::move(fields.citations);
    std::sort(u->citations.begin(), u->citations.end());
    u->citations.erase(std::unique(u->citations.begin(), u->citations.end()),
                       u->citations.end());
    u->block = std::move(fields.block);
    u->era = fields.era;
    u->hash = hash64(encodeUnit(*u));
    return u;
  }

  std::size_t UnitSet::count() const {
    std::size_t c = 0;
    for (auto w : words_) {
      c += static_cast<std::size_t>(std::popcount(w));
    }
    return c;
  }

  std::vector<std::size_t> UnitSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      auto word = words_[w];
      while (word != 0) {
        auto bit = static_cast<std::size_t>(std::countr_zero(word));
        out.push_back(w * 64 + bit);
        word &= word - 1;
      }
    }
    return out;
  }

  std::vector<std::size_t> UnitSet::minus(const UnitSet &other) const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      auto word = words_[w];
      if (w < other.words_.size()) {
        word &= ~other.words_[w];
      }
      while (word != 0) {
        auto bit = static_cast<std::size_t>(std::countr_zero(word));
        out.push_back(w * 64 + bit);
        word &= word - 1;
      }
    }
    return out;
  }

  ProtocolState::ProtocolState(std::size_t validator_count)
      : validator_count_(validator_count),
        by_sender_(validator_count),
        tips_(validator_count) {}

  std::optional<std::size_t> ProtocolState::indexOf(UnitHash h) const {
    auto it = by_hash_.find(h);
    if (it == by_hash_.end()) {
      return std::nullopt;
    }
    return it->second;
  }

  std::size_t ProtocolState::require(UnitHash h) const {
    auto it = by_hash_.find(h);
    if (it == by_hash_.end()) {
      throw UnknownUnit(h);
    }
    return it->second;
  }

  InsertOutcome ProtocolState::check(const Unit &unit) const {
    InsertOutcome out;
    if (auto it = by_hash_.find(unit.hash); it != by_hash_.end()) {
      if (*records_[it->second].unit != unit) {
        out.reason = "digest collision with a different unit";
        return out;
      }
      out.status = InsertOutcome::Status::kDuplicate;
      out.index = it->second;
      return out;
    }
    if (unit.sender >= validator_count_) {
      out.reason = "sender out of range";
      return out;
    }
    if ((unit.kind == UnitKind::kProposal) != unit.block.has_value()) {
      out.reason = "proposal units carry a block and only they do";
      return out;
    }
    if (unit.block && unit.block->creator != unit.sender) {
      out.reason = "block creator differs from unit sender";
      return out;
    }
    if (!std::is_sorted(unit.citations.begin(), unit.citations.end())
        || std::adjacent_find(unit.citations.begin(), unit.citations.end())
               != unit.citations.end()) {
      out.reason = "citations not canonical";
      return out;
    }
    for (auto c : unit.citations) {
      if (!by_hash_.contains(c)) {
        out.missing.push_back(c);
      }
    }
    if (!out.missing.empty()) {
      out.status = InsertOutcome::Status::kMissingDependencies;
      return out;
    }
    out.status = InsertOutcome::Status::kAccepted;
    return out;
  }

  void ProtocolState::mergeSeen(SeenEntry &acc, const SeenEntry &cand) const {
    using K = SeenEntry::Kind;
    if (acc.kind == K::kFaulty || cand.kind == K::kNone) {
      return;
    }
    if (cand.kind == K::kFaulty || acc.kind == K::kNone) {
      acc = cand;
      return;
    }
    if (acc.index == cand.index || justifiesIdx(acc.index, cand.index)) {
      return;
    }
    if (justifiesIdx(cand.index, acc.index)) {
      acc = cand;
      return;
    }
    acc = SeenEntry{K::kFaulty, 0};
  }

  ProtocolState::Preview ProtocolState::preview(const Unit &unit) const {
    Preview pv;
    pv.panorama.assign(validator_count_, SeenEntry{});
    for (auto c : unit.citations) {
      auto ci = require(c);
      const auto &cited = records_[ci];
      pv.strict_downset.merge(cited.closed_downset);
      for (std::size_t v = 0; v < validator_count_; ++v) {
        mergeSeen(pv.panorama[v], cited.panorama[v]);
      }
      mergeSeen(pv.panorama[cited.unit->sender],
                SeenEntry{SeenEntry::Kind::kUnit, ci});
      if (cited.unit->sender == unit.sender
          && (!pv.self_parent || justifiesIdx(ci, *pv.self_parent))) {
        pv.self_parent = ci;
      }
    }
    return pv;
  }

  InsertOutcome ProtocolState::insert(UnitPtr unit) {
    auto out = check(*unit);
    if (out.status != InsertOutcome::Status::kAccepted) {
      return out;
    }

    const auto idx = records_.size();
    auto pv = preview(*unit);
    Record rec;
    rec.unit = unit;
    rec.closed_downset = std::move(pv.strict_downset);
    rec.panorama = std::move(pv.panorama);
    rec.self_parent = pv.self_parent;
    rec.closed_downset.set(idx);

    // Any existing tip of the sender not below the new unit is a fork.
    auto &tips = tips_[unit->sender];
    std::vector<std::size_t> kept;
    for (auto t : tips) {
      if (rec.closed_downset.test(t)) {
        continue;
      }
      kept.push_back(t);
      evidence_.push_back(EvidencePair{records_[t].unit->hash, unit->hash});
      known_equivocators_.insert(unit->sender);
    }
    kept.push_back(idx);
    tips = std::move(kept);

    for (auto c : unit->citations) {
      maximal_.erase(by_hash_.at(c));
    }
    maximal_.insert(idx);

    by_sender_[unit->sender].push_back(idx);
    by_hash_.emplace(unit->hash, idx);
    records_.push_back(std::move(rec));
    out.index = idx;
    return out;
  }

  bool ProtocolState::justifies(UnitHash a, UnitHash b) const {
    return justifiesIdx(require(a), require(b));
  }

  std::vector<UnitHash> ProtocolState::downset(UnitHash u, Scope scope) const {
    UnitHash one[] = {u};
    return downsetOf(one, scope);
  }

  std::vector<UnitHash> ProtocolState::downsetOf(std::span<const UnitHash> units,
                                                 Scope scope) const {
    UnitSet acc;
    for (auto h : units) {
      auto i = require(h);
      const auto &rec = records_[i];
      for (auto c : rec.unit->citations) {
        acc.merge(records_[by_hash_.at(c)].closed_downset);
      }
      if (scope == Scope::kClosed) {
        acc.set(i);
      }
    }
    std::vector<UnitHash> out;
    for (auto i : acc.indices()) {
      out.push_back(records_[i].unit->hash);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool ProtocolState::isEquivocationIdx(std::size_t a, std::size_t b) const {
    return records_[a].unit->sender == records_[b].unit->sender
           && !justifiesIdx(a, b) && !justifiesIdx(b, a);
  }

  bool ProtocolState::isEquivocation(UnitHash a, UnitHash b) const {
    return isEquivocationIdx(require(a), require(b));
  }

  std::set<ValidatorId> ProtocolState::equivocatorsIdx(
      std::span<const std::size_t> units, Scope scope) const {
    Panorama acc(validator_count_);
    for (auto i : units) {
      const auto &rec = records_[i];
      for (std::size_t v = 0; v < validator_count_; ++v) {
        mergeSeen(acc[v], rec.panorama[v]);
      }
      if (scope == Scope::kClosed) {
        mergeSeen(acc[rec.unit->sender], SeenEntry{SeenEntry::Kind::kUnit, i});
      }
    }
    std::set<ValidatorId> out;
    for (std::size_t v = 0; v < validator_count_; ++v) {
      if (acc[v].kind == SeenEntry::Kind::kFaulty) {
        out.insert(static_cast<ValidatorId>(v));
      }
    }
    return out;
  }

  std::set<ValidatorId> ProtocolState::equivocators(
      std::span<const UnitHash> units, Scope scope) const {
    std::vector<std::size_t> idx;
    for (auto h : units) {
      idx.push_back(require(h));
    }
    return equivocatorsIdx(idx, scope);
  }

  std::vector<std::pair<ValidatorId, UnitHash>> ProtocolState::latestMessages(
      UnitHash u) const {
    const auto &pano = records_[require(u)].panorama;
    std::vector<std::pair<ValidatorId, UnitHash>> out;
    for (std::size_t v = 0; v < validator_count_; ++v) {
      if (pano[v].kind == SeenEntry::Kind::kUnit) {
        out.emplace_back(static_cast<ValidatorId>(v),
                         records_[pano[v].index].unit->hash);
      }
    }
    return out;
  }

  std::optional<UnitHash> ProtocolState::latestMessage(UnitHash u,
                                                       ValidatorId v) const {
    const auto &e = records_[require(u)].panorama.at(v);
    if (e.kind != SeenEntry::Kind::kUnit) {
      return std::nullopt;
    }
    return records_[e.index].unit->hash;
  }

  std::size_t maxAntichain(const ProtocolState &state,
                           std::span<const std::size_t> units) {
    // Minimum chain cover of a finite poset = |P| - maximum matching in the
    // bipartite graph with an edge a -> b whenever a < b.
    const auto m = units.size();
    std::vector<std::vector<std::size_t>> adj(m);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        if (a != b && units[a] != units[b]
            && state.justifiesIdx(units[b], units[a])) {
          adj[a].push_back(b);
        }
      }
    }
    std::vector<std::ptrdiff_t> match_right(m, -1);
    std::function<bool(std::size_t, std::vector<bool> &)> augment =
        [&](std::size_t a, std::vector<bool> &seen) {
          for (auto b : adj[a]) {
            if (seen[b]) {
              continue;
            }
            seen[b] = true;
            if (match_right[b] < 0
                || augment(static_cast<std::size_t>(match_right[b]), seen)) {
              match_right[b] = static_cast<std::ptrdiff_t>(a);
              return true;
            }
          }
          return false;
        };
    std::size_t matching = 0;
    for (std::size_t a = 0; a < m; ++a) {
      std::vector<bool> seen(m, false);
      if (augment(a, seen)) {
        ++matching;
      }
    }
    return m - matching;
  }

}  // namespace highway
