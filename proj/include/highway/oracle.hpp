/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "highway/finality.hpp"

namespace highway {

  /// Largest DAG the brute-force enumeration accepts.
  inline constexpr std::size_t kOracleMaxUnits = 12;

  class FixtureError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
  };

  /// A small named DAG for oracle comparisons.
  ///
  ///   weights = [1, 1, 1, 1]          (or: validators = 4)
  ///   unit a0 sender=0 cites=[] block=B1
  ///   unit b0 sender=1 cites=[a0]
  ///   unit c0 sender=2 cites=[a0,b0] block=B2 parent=B1
  ///
  /// Without parent= a block extends the GHOST head below its unit.
  class Fixture {
   public:
    explicit Fixture(WeightMap weights);

    std::size_t addUnit(const std::string &name,
                        ValidatorId sender,
                        const std::vector<std::string> &cites,
                        const std::optional<std::string> &block = std::nullopt,
                        const std::optional<std::string> &parent = std::nullopt);

    const LocalView &view() const {
      return *view_;
    }
    /// Block by label; "genesis" is always defined.
    BlockHash block(const std::string &label) const;
    const std::map<std::string, BlockHash> &blocks() const {
      return blocks_;
    }
    const std::string &unitName(std::size_t idx) const {
      return names_.at(idx);
    }
    std::string blockName(BlockHash h) const;

   private:
    std::unique_ptr<LocalView> view_;
    std::vector<std::string> names_;
    std::map<std::string, std::size_t> by_name_;
    std::map<std::string, BlockHash> blocks_;
    std::vector<std::size_t> per_sender_;
  };

  Fixture parseFixture(const std::string &text);
  Fixture loadFixture(const std::string &path);

  /// Random DAG with up to `units` units over `validators` validators.
  /// Some senders fork their own chain; some units carry blocks.
  Fixture randomFixture(std::uint64_t seed, std::size_t validators, std::size_t units);

  struct OracleReport {
    Summit greedy;
    /// Union of every brute-force summit's level i.
    std::vector<std::vector<std::size_t>> brute_levels;
    /// Tallest brute-force summit; kMaxSummitHeight when unbounded.
    std::size_t brute_height = 0;
    std::size_t candidates = 0;
    std::vector<std::string> violations;
    /// Same comparison with level 0 candidates limited to per-sender
    /// suffixes ending at the sender's latest unit, the shape the greedy
    /// algorithm starts from. Diagnostic only.
    std::vector<std::string> suffix_violations;

    bool ok() const {
      return violations.empty();
    }
  };

  /// Enumerates every (q, k)-summit for b by checking the definition on
  /// all candidate level sequences, recomputing reachability, equivocation
  /// and votes from raw citations, and compares against findSummit.
  /// Throws FixtureError above kOracleMaxUnits units.
  OracleReport runOracle(const LocalView &view, BlockHash b, Weight q);

  std::string formatOracleReport(const Fixture &fixture, const OracleReport &report);

}  // namespace highway
