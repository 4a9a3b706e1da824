/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>

#include "highway/checker.hpp"
#include "highway/sim.hpp"

namespace highway {

  struct RunReport {
    std::string text;
    /// One JSON object per line.
    std::string jsonl;
  };

  /// Latencies, chain agreement, per-validator statistics and the safety
  /// verdict for a finished run. Byte-identical for identical inputs.
  RunReport buildReport(const Simulation &sim, const RunResult &result, const CheckReport &check);

}  // namespace highway
