/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

#include "highway/sim.hpp"

namespace highway {

  class ParseError : public std::runtime_error {
   public:
    ParseError(std::size_t line, std::string field, const std::string &message);

    std::size_t line;  ///< 1-based; 0 when the problem is not tied to a line
    std::string field;
  };

  /// Parses the flat `key = value` scenario format described in README.md.
  /// Throws ParseError on syntax errors, unknown keys, missing required
  /// fields and values that fail validation.
  Scenario parseScenario(const std::string &text);
  Scenario loadScenario(const std::string &path);

  /// Inverse of parseScenario, up to formatting.
  std::string formatScenario(const Scenario &scenario);

}  // namespace highway
