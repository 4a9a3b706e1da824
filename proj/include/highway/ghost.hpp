/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "highway/dag.hpp"
#include "highway/types.hpp"

namespace highway {

  /// Tree of blocks rooted at an era genesis.
  class BlockTree {
   public:
    explicit BlockTree(Block genesis);

    const Block &genesis() const {
      return nodes_.front().block;
    }

    /// Adds a block whose parent is already present. Returns false for
    /// duplicates; throws if the parent is unknown or the height is wrong.
    bool add(const Block &block);

    bool contains(BlockHash h) const {
      return index_.contains(h);
    }
    const Block &get(BlockHash h) const;
    std::size_t size() const {
      return nodes_.size();
    }

    /// Distance from the tree root (the era genesis has depth 0).
    std::uint64_t depth(BlockHash h) const;
    BlockHash ancestorAt(BlockHash h, std::uint64_t depth) const;
    /// anc ≤ desc along parent links (reflexive).
    bool isDescendant(BlockHash desc, BlockHash anc) const;
    bool competing(BlockHash a, BlockHash b) const {
      return !isDescendant(a, b) && !isDescendant(b, a);
    }
    /// next(B), sorted ascending by hash.
    const std::vector<BlockHash> &children(BlockHash h) const;

    /// Blocks from the root to h inclusive.
    std::vector<BlockHash> pathTo(BlockHash h) const;

   private:
    struct Node {
      Block block;
      std::uint64_t depth = 0;
      std::vector<std::size_t> jumps;  // jumps[i]: ancestor 2^i levels up
      std::vector<BlockHash> children;
    };

    std::size_t nodeOf(BlockHash h) const;
    std::size_t ancestorIdx(std::size_t node, std::uint64_t depth) const;

    std::vector<Node> nodes_;
    std::unordered_map<BlockHash, std::size_t> index_;
  };

  /// opinion(V) for every validator; nullopt contributes nothing.
  using OpinionMap = std::vector<std::optional<BlockHash>>;

  using BlockFilter = std::function<bool(BlockHash)>;

  /// Walks from the root choosing the child with the largest supporting
  /// weight (ties: smallest hash) until reaching a leaf of the filtered tree.
  BlockHash ghost(const BlockTree &tree,
                  const OpinionMap &opinions,
                  const WeightMap &weights,
                  const BlockFilter &member = {});

  /// Plain longest-chain head for comparison (ties: smallest hash).
  BlockHash longestChainHead(const BlockTree &tree);

}  // namespace highway
