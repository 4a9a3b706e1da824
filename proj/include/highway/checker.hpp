/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "highway/sim.hpp"

namespace highway {

  class CorruptTrace : public std::runtime_error {
   public:
    CorruptTrace(std::size_t line, const std::string &message)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + message) {}
  };

  struct TraceHeader {
    std::size_t n = 0;
    std::vector<Weight> weights;
    std::set<ValidatorId> byzantine;
    std::set<ValidatorId> crash;
    std::vector<Weight> thresholds;
    std::uint64_t era_length = 0;
    std::uint64_t seed = 0;
  };

  struct ChainEntry {
    std::uint64_t height = 0;
    BlockHash block;

    bool operator==(const ChainEntry &) const = default;
  };

  struct SafetyViolation {
    std::uint64_t height = 0;
    ValidatorId first_validator = 0;
    Weight first_threshold = 0;
    BlockHash first_block;
    ValidatorId second_validator = 0;
    Weight second_threshold = 0;
    BlockHash second_block;
    /// min(thresholds) ≥ the fault weight, so the guarantee was broken.
    bool fatal = false;
  };

  struct CheckReport {
    TraceHeader header;
    std::vector<Weight> thresholds;
    std::set<ValidatorId> observed_equivocators;
    /// Weight of declared Byzantine validators and observed equivocators.
    Weight fault_weight = 0;
    /// Finalized chain per (validator, threshold) rebuilt by replay,
    /// genesis first. Honest and crash validators only.
    std::map<std::pair<ValidatorId, Weight>, std::vector<ChainEntry>> chains;
    std::vector<SafetyViolation> violations;
    /// Recorded in-run finality events not matching the replayed chains.
    std::size_t recorded_mismatches = 0;
    std::size_t units = 0;

    bool clean() const;
    std::string text() const;
  };

  TraceHeader parseTraceHeader(const std::string &trace);

  /// Rebuilds every honest view from the trace and recomputes finality at
  /// the given thresholds. Throws CorruptTrace.
  CheckReport checkTrace(const std::string &trace, const std::vector<Weight> &thresholds);

}  // namespace highway
