/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/view.hpp"

namespace highway {

  namespace {
    const std::vector<std::size_t> kNoCarriers;
  }

  LocalView::LocalView(WeightMap weights, Block genesis)
      : weights_(std::move(weights)),
        state_(weights_.size()),
        tree_(std::move(genesis)) {}

  const std::vector<std::size_t> &LocalView::carriers(BlockHash b) const {
    auto it = carriers_.find(b);
    return it == carriers_.end() ? kNoCarriers : it->second;
  }

  BlockHash LocalView::evaluate(const ProtocolState::Preview &pv,
                                const std::optional<BlockHash> &own_block) const {
    OpinionMap opinions(state_.validatorCount());
    for (std::size_t v = 0; v < opinions.size(); ++v) {
      const auto &e = pv.panorama[v];
      if (e.kind == SeenEntry::Kind::kUnit) {
        opinions[v] = votes_[e.index];
      }
    }
    auto genesis = tree_.genesis().hash;
    BlockFilter member = [&](BlockHash b) {
      if (b == genesis || (own_block && b == *own_block)) {
        return true;
      }
      for (auto c : carriers(b)) {
        if (pv.strict_downset.test(c)) {
          return true;
        }
      }
      return false;
    };
    return ghost(tree_, opinions, weights_, member);
  }

  InsertOutcome LocalView::insert(UnitPtr unit) {
    auto out = state_.check(*unit);
    if (out.status != InsertOutcome::Status::kAccepted) {
      return out;
    }
    auto pv = state_.preview(*unit);
    std::optional<BlockHash> own;
    if (unit->block) {
      const auto &b = *unit->block;
      if (!b.parent || !tree_.contains(*b.parent)) {
        out.status = InsertOutcome::Status::kRejected;
        out.reason = "block parent unknown";
        return out;
      }
      bool parent_seen = *b.parent == tree_.genesis().hash;
      for (auto c : carriers(*b.parent)) {
        parent_seen = parent_seen || pv.strict_downset.test(c);
      }
      if (!parent_seen) {
        out.status = InsertOutcome::Status::kRejected;
        out.reason = "block parent not below the unit";
        return out;
      }
      if (b.height != tree_.get(*b.parent).height + 1) {
        out.status = InsertOutcome::Status::kRejected;
        out.reason = "block height does not follow parent";
        return out;
      }
      tree_.add(b);
      own = b.hash;
    }
    auto v = evaluate(pv, own);
    if (own && v != *own) {
      out.status = InsertOutcome::Status::kRejected;
      out.reason = "unit does not vote for its own block";
      return out;
    }
    out = state_.insert(unit);
    if (!out.accepted()) {
      return out;
    }
    votes_.push_back(v);
    if (own) {
      carriers_[*own].push_back(out.index);
    }
    return out;
  }

  BlockHash LocalView::opinionOf(UnitHash u, ValidatorId v) const {
    auto l = state_.latestMessage(u, v);
    return l ? vote(*l) : tree_.genesis().hash;
  }

  BlockHash LocalView::chooseProposalParent(
      ValidatorId sender, std::span<const UnitHash> citations) const {
    Unit probe;
    probe.sender = sender;
    probe.citations.assign(citations.begin(), citations.end());
    return evaluate(state_.preview(probe), std::nullopt);
  }

  std::vector<BlockHash> LocalView::recomputeVotes() const {
    // Insertion order is a topological order of the DAG.
    std::vector<BlockHash> fresh;
    fresh.reserve(state_.size());
    auto genesis = tree_.genesis().hash;
    for (std::size_t idx = 0; idx < state_.size(); ++idx) {
      const auto &u = state_.unit(idx);
      auto pv = state_.preview(u);
      OpinionMap opinions(state_.validatorCount());
      for (std::size_t v = 0; v < opinions.size(); ++v) {
        const auto &e = pv.panorama[v];
        if (e.kind == SeenEntry::Kind::kUnit) {
          opinions[v] = fresh[e.index];
        }
      }
      BlockFilter member = [&](BlockHash b) {
        if (b == genesis || (u.block && b == u.block->hash)) {
          return true;
        }
        for (auto c : carriers(b)) {
          if (pv.strict_downset.test(c)) {
            return true;
          }
        }
        return false;
      };
      fresh.push_back(ghost(tree_, opinions, weights_, member));
    }
    return fresh;
  }

}  // namespace highway
