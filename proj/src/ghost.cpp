/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/ghost.hpp"

#include <algorithm>
#include <map>

namespace highway {

  BlockTree::BlockTree(Block genesis) {
    Node root;
    root.block = std::move(genesis);
    index_.emplace(root.block.hash, 0);
    nodes_.push_back(std::move(root));
  }

  std::size_t BlockTree::nodeOf(BlockHash h) const {
    auto it = index_.find(h);
    if (it == index_.end()) {
      throw std::out_of_range("unknown block " + h.hex());
    }
    return it->second;
  }

  bool BlockTree::add(const Block &block) {
    if (index_.contains(block.hash)) {
      return false;
    }
    if (!block.parent) {
      throw std::invalid_argument("second root block");
    }
    auto p = nodeOf(*block.parent);
    if (block.height != nodes_[p].block.height + 1) {
      throw std::invalid_argument("block height does not follow parent");
    }
    Node node;
    node.block = block;
    node.depth = nodes_[p].depth + 1;
    node.jumps.push_back(p);
    for (std::size_t i = 0;; ++i) {
      const auto &mid = nodes_[node.jumps[i]];
      if (i >= mid.jumps.size()) {
        break;
      }
      node.jumps.push_back(mid.jumps[i]);
    }
    auto &siblings = nodes_[p].children;
    siblings.insert(std::upper_bound(siblings.begin(), siblings.end(), block.hash),
                    block.hash);
    index_.emplace(block.hash, nodes_.size());
    nodes_.push_back(std::move(node));
    return true;
  }

  const Block &BlockTree::get(BlockHash h) const {
    return nodes_[nodeOf(h)].block;
  }

  std::uint64_t BlockTree::depth(BlockHash h) const {
    return nodes_[nodeOf(h)].depth;
  }

  std::size_t BlockTree::ancestorIdx(std::size_t node,
                                     std::uint64_t depth) const {
    while (nodes_[node].depth > depth) {
      auto diff = nodes_[node].depth - depth;
      std::size_t step = 0;
      while (step + 1 < nodes_[node].jumps.size()
             && (std::uint64_t{1} << (step + 1)) <= diff) {
        ++step;
      }
      node = nodes_[node].jumps[step];
    }
    return node;
  }

  BlockHash BlockTree::ancestorAt(BlockHash h, std::uint64_t depth) const {
    auto n = nodeOf(h);
    if (depth > nodes_[n].depth) {
      throw std::out_of_range("ancestor depth below block");
    }
    return nodes_[ancestorIdx(n, depth)].block.hash;
  }

  bool BlockTree::isDescendant(BlockHash desc, BlockHash anc) const {
    auto d = nodeOf(desc);
    auto a = nodeOf(anc);
    if (nodes_[a].depth > nodes_[d].depth) {
      return false;
    }
    return ancestorIdx(d, nodes_[a].depth) == a;
  }

  const std::vector<BlockHash> &BlockTree::children(BlockHash h) const {
    return nodes_[nodeOf(h)].children;
  }

  std::vector<BlockHash> BlockTree::pathTo(BlockHash h) const {
    std::vector<BlockHash> path;
    auto n = nodeOf(h);
    for (;;) {
      path.push_back(nodes_[n].block.hash);
      if (nodes_[n].jumps.empty()) {
        break;
      }
      n = nodes_[n].jumps[0];
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  BlockHash ghost(const BlockTree &tree,
                  const OpinionMap &opinions,
                  const WeightMap &weights,
                  const BlockFilter &member) {
    auto current = tree.genesis().hash;
    std::vector<std::pair<BlockHash, Weight>> live;
    for (std::size_t v = 0; v < opinions.size(); ++v) {
      if (opinions[v]) {
        live.emplace_back(*opinions[v], weights[static_cast<ValidatorId>(v)]);
      }
    }
    for (;;) {
      const auto &kids = tree.children(current);
      std::optional<BlockHash> best;
      Weight best_total = -1;
      std::map<BlockHash, Weight> totals;
      auto depth = tree.depth(current);
      for (const auto &[target, w] : live) {
        if (tree.depth(target) > depth) {
          totals[tree.ancestorAt(target, depth + 1)] += w;
        }
      }
      for (auto kid : kids) {  // ascending hash: first max wins ties
        if (member && !member(kid)) {
          continue;
        }
        auto it = totals.find(kid);
        Weight total = it == totals.end() ? 0 : it->second;
        if (total > best_total) {
          best_total = total;
          best = kid;
        }
      }
      if (!best) {
        return current;
      }
      current = *best;
      std::erase_if(live, [&](const auto &entry) {
        return tree.depth(entry.first) <= depth
               || tree.ancestorAt(entry.first, depth + 1) != current;
      });
    }
  }

  BlockHash longestChainHead(const BlockTree &tree) {
    auto best = tree.genesis().hash;
    std::uint64_t best_depth = 0;
    std::vector<BlockHash> stack{best};
    while (!stack.empty()) {
      auto h = stack.back();
      stack.pop_back();
      auto d = tree.depth(h);
      if (d > best_depth || (d == best_depth && h < best)) {
        best = h;
        best_depth = d;
      }
      for (auto c : tree.children(h)) {
        stack.push_back(c);
      }
    }
    return best;
  }

}  // namespace highway
