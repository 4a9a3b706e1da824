/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "highway/dag.hpp"
#include "highway/ghost.hpp"

namespace highway {

  /// A validator's local DAG together with the block tree and the memoized
  /// vote of every unit.
  class LocalView {
   public:
    LocalView(WeightMap weights, Block genesis);

    /// Inserts a unit whose citations are present. Proposal units must carry
    /// a block whose parent lies in the unit's downset and whose vote is that
    /// block; otherwise the unit is rejected.
    InsertOutcome insert(UnitPtr unit);

    const ProtocolState &state() const {
      return state_;
    }
    const BlockTree &tree() const {
      return tree_;
    }
    const WeightMap &weights() const {
      return weights_;
    }
    const Block &genesis() const {
      return tree_.genesis();
    }

    BlockHash vote(UnitHash u) const {
      return votes_[state_.require(u)];
    }
    BlockHash voteIdx(std::size_t idx) const {
      return votes_[idx];
    }
    /// vote(u) ≥ b.
    bool votesFor(std::size_t idx, BlockHash b) const {
      return tree_.isDescendant(votes_[idx], b);
    }

    /// opinion_u(V): vote of L_V(u), or genesis.
    BlockHash opinionOf(UnitHash u, ValidatorId v) const;

    /// GHOST head over the blocks and latest messages below a prospective
    /// unit with these citations. Used as the parent of a new block.
    BlockHash chooseProposalParent(ValidatorId sender,
                                   std::span<const UnitHash> citations) const;

    /// Every vote recomputed from scratch, ignoring the memo table.
    std::vector<BlockHash> recomputeVotes() const;

    /// Units carrying block b.
    const std::vector<std::size_t> &carriers(BlockHash b) const;

   private:
    BlockHash evaluate(const ProtocolState::Preview &pv,
                       const std::optional<BlockHash> &own_block) const;

    WeightMap weights_;
    ProtocolState state_;
    BlockTree tree_;
    std::vector<BlockHash> votes_;
    std::unordered_map<BlockHash, std::vector<std::size_t>> carriers_;
  };

}  // namespace highway
