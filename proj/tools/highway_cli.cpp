/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "highway/checker.hpp"
#include "highway/oracle.hpp"
#include "highway/report.hpp"
#include "highway/scenario_file.hpp"

namespace {
  enum Exit { kOk = 0, kUsage = 1, kParse = 2, kUnsafe = 3, kOracleMismatch = 4 };

  std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  void spit(const std::filesystem::path &path, const std::string &data) {
    std::ofstream out(path, std::ios::binary);
    out << data;
    if (!out) {
      throw std::runtime_error("cannot write " + path.string());
    }
  }

  int cmdRun(const std::string &file, std::optional<std::uint64_t> seed, std::string out_dir) {
    highway::Scenario sc;
    try {
      sc = highway::loadScenario(file);
    } catch (const highway::ParseError &e) {
      std::cerr << file << ": " << e.what() << "\n";
      return kParse;
    }
    if (seed) {
      sc.seed = *seed;
    }
    if (out_dir.empty()) {
      const char *env = std::getenv("HIGHWAY_OUT_DIR");
      out_dir = env != nullptr && *env != '\0' ? env : ".";
    }
    highway::Simulation sim(sc, true);
    auto result = sim.run();
    auto check = highway::checkTrace(result.trace, sc.allThresholds());
    auto report = highway::buildReport(sim, result, check);

    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    spit(dir / "trace.tsv", result.trace);
    spit(dir / "report.txt", report.text);
    spit(dir / "report.jsonl", report.jsonl);
    std::cout << report.text;
    std::cout << "wrote " << (dir / "trace.tsv").string() << ", report.txt, report.jsonl\n";
    if (!check.clean()) {
      for (const auto &v : check.violations) {
        if (v.fatal) {
          std::cerr << "safety violation at height " << v.height << ": validator "
                    << v.first_validator << " block " << v.first_block.hex() << " threshold "
                    << v.first_threshold << " vs validator " << v.second_validator << " block "
                    << v.second_block.hex() << " threshold " << v.second_threshold << "\n";
        }
      }
      return kUnsafe;
    }
    return kOk;
  }

  int cmdCheck(const std::string &file, const std::vector<highway::Weight> &thresholds) {
    highway::CheckReport report;
    try {
      report = highway::checkTrace(slurp(file), thresholds);
    } catch (const highway::CorruptTrace &e) {
      std::cerr << file << ": " << e.what() << "\n";
      return kParse;
    } catch (const std::invalid_argument &e) {
      std::cerr << e.what() << "\n";
      return kUsage;
    }
    std::cout << report.text();
    for (const auto &[key, chain] : report.chains) {
      std::cout << "chain v" << key.first << " t" << key.second << ":";
      for (const auto &e : chain) {
        std::cout << " " << e.block.hex();
      }
      std::cout << "\n";
    }
    return report.clean() ? kOk : kUnsafe;
  }

  int cmdOracle(const std::string &file, const std::string &block, highway::Weight q) {
    try {
      auto fx = highway::loadFixture(file);
      auto b = fx.blocks().contains(block) ? fx.block(block) : highway::Digest::fromHex(block);
      auto report = highway::runOracle(fx.view(), b, q);
      std::cout << highway::formatOracleReport(fx, report);
      return report.ok() ? kOk : kOracleMismatch;
    } catch (const highway::FixtureError &e) {
      std::cerr << file << ": " << e.what() << "\n";
      return kParse;
    } catch (const highway::DecodeError &e) {
      std::cerr << "unknown block '" << block << "'\n";
      return kUsage;
    }
  }
}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Highway consensus simulator"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "Simulate a scenario and write trace and reports");
  std::string scenario_file;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  run->add_option("file", scenario_file, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default $HIGHWAY_OUT_DIR or .)");

  auto *check = app.add_subcommand("check", "Replay a trace and verify finality safety");
  std::string trace_file;
  std::vector<highway::Weight> thresholds;
  check->add_option("trace", trace_file, "Trace file")->required();
  check->add_option("--thresholds", thresholds, "Comma-separated thresholds")
      ->required()
      ->delimiter(',');

  auto *oracle = app.add_subcommand("oracle", "Compare the greedy summit with brute force");
  std::string fixture_file;
  std::string block;
  highway::Weight q = 0;
  oracle->add_option("fixture", fixture_file, "DAG fixture")->required();
  oracle->add_option("--block", block, "Block label or hash")->required();
  oracle->add_option("--q", q, "Quorum")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) {
      return cmdRun(scenario_file, seed, out_dir);
    }
    if (check->parsed()) {
      return cmdCheck(trace_file, thresholds);
    }
    return cmdOracle(fixture_file, block, q);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
