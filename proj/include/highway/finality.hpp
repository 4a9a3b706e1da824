/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <string>
#include <vector>

#include "highway/view.hpp"

namespace highway {

  /// Level count is capped; with a quorum no larger than one validator's
  /// weight the levels never shrink.
  inline constexpr std::size_t kMaxSummitHeight = 60;

  struct Summit {
    BlockHash block;
    Weight quorum = 0;
    /// levels[i] holds local unit indices, ascending.
    std::vector<std::vector<std::size_t>> levels;

    std::size_t height() const {
      return levels.empty() ? 0 : levels.size() - 1;
    }
  };

  /// Greedy maximal summit for block b with quorum q.
  Summit findSummit(const LocalView &view,
                    BlockHash b,
                    Weight q,
                    std::size_t max_height = kMaxSummitHeight);

  struct SummitCheck {
    bool ok = true;
    std::string reason;
  };

  /// Checks nesting, unanimity, honesty, convexity and density directly.
  SummitCheck validateSummit(const LocalView &view, const Summit &summit);

  /// (2q − n)(1 − 2^−k) > t, evaluated exactly.
  bool finalFormula(Weight n, Weight q, std::size_t k, Weight t);

  /// Largest integer t with finalFormula(n, q, k, t), or −1.
  Weight maxThreshold(Weight n, Weight q, std::size_t k);

  bool isFinal(const LocalView &view, BlockHash b, Weight t);

  /// Largest t with isFinal, or −1.
  Weight confidence(const LocalView &view, BlockHash b);

  /// Chain from the era genesis of blocks final at t.
  std::vector<BlockHash> finalizedChain(const LocalView &view, Weight t);

  std::map<Weight, std::vector<BlockHash>> finalizedChains(
      const LocalView &view, const std::vector<Weight> &thresholds);

  /// Extends a known finalized chain (whose last element stays final) in
  /// place; returns the number of blocks added.
  std::size_t extendFinalized(const LocalView &view,
                              Weight t,
                              std::vector<BlockHash> &chain);

}  // namespace highway
