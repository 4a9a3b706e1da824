/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace highway {

  namespace {
    const char *roleName(Role r) {
      switch (r) {
        case Role::kHonest:
          return "honest";
        case Role::kCrash:
          return "crash";
        case Role::kByzantine:
          return "byzantine";
      }
      return "?";
    }

    /// Length of the common prefix of two chains, genesis first.
    std::size_t commonPrefix(const std::vector<ChainEntry> &a, const std::vector<ChainEntry> &b) {
      std::size_t i = 0;
      while (i < a.size() && i < b.size() && a[i] == b[i]) {
        ++i;
      }
      return i;
    }
  }  // namespace

  RunReport buildReport(const Simulation &sim, const RunResult &result, const CheckReport &check) {
    using nlohmann::json;
    const auto &sc = sim.scenario();
    std::ostringstream text;
    std::ostringstream lines;
    auto emit = [&](const json &j) { lines << j.dump() << '\n'; };

    text << "scenario: n=" << sc.n << " delta=" << sc.delta << " gst=" << sc.gst
         << " horizon=" << sc.horizon << " endorsements=" << toString(sc.endorsement)
         << " seed=" << sc.seed << "\n";
    for (const auto &a : sc.adversaries) {
      text << "adversary: " << describe(a) << "\n";
    }
    text << "trace digest " << result.digest.hex() << " (" << result.trace_lines
         << " lines), sends " << result.sends << ", deliveries " << result.deliveries
         << ", max post-GST delay " << result.max_post_gst_delay << "\n";
    emit({{"kind", "run"},
          {"n", sc.n},
          {"seed", sc.seed},
          {"digest", result.digest.hex()},
          {"trace_lines", result.trace_lines},
          {"sends", result.sends},
          {"deliveries", result.deliveries},
          {"max_post_gst_delay", result.max_post_gst_delay},
          {"bomb_units", result.bomb_units}});

    text << "\nfinalization latency (ticks from proposal, honest validators)\n";
    for (auto t : sc.allThresholds()) {
      std::vector<Tick> lat;
      for (const auto &f : result.finals) {
        if (f.threshold == t && sim.role(f.validator) != Role::kByzantine && f.height > 0) {
          lat.push_back(f.tick - f.proposed);
        }
      }
      std::sort(lat.begin(), lat.end());
      double mean = 0;
      for (auto x : lat) {
        mean += static_cast<double>(x);
      }
      mean = lat.empty() ? 0 : mean / static_cast<double>(lat.size());
      Tick p50 = lat.empty() ? 0 : lat[lat.size() / 2];
      Tick mx = lat.empty() ? 0 : lat.back();
      text << "  t=" << t << ": " << lat.size() << " finalizations, mean " << std::fixed
           << std::setprecision(1) << mean << ", median " << p50 << ", max " << mx << "\n";
      emit({{"kind", "latency"},
            {"threshold", t},
            {"count", lat.size()},
            {"mean", std::round(mean * 10) / 10},
            {"median", p50},
            {"max", mx}});
    }

    text << "\nchain agreement ('=' prefix-consistent, 'x' diverged)\n";
    for (auto t : check.thresholds) {
      std::vector<ValidatorId> vs;
      for (const auto &[key, chain] : check.chains) {
        if (key.second == t) {
          vs.push_back(key.first);
        }
      }
      std::size_t diverged = 0;
      text << "  t=" << t << "\n";
      for (auto a : vs) {
        text << "    v" << std::setw(2) << std::left << a << std::right << " ";
        const auto &ca = check.chains.at({a, t});
        for (auto b : vs) {
          const auto &cb = check.chains.at({b, t});
          bool ok = commonPrefix(ca, cb) == std::min(ca.size(), cb.size());
          diverged += ok ? 0 : 1;
          text << (ok ? '=' : 'x');
        }
        text << "  height " << ca.back().height << "\n";
      }
      emit({{"kind", "agreement"},
            {"threshold", t},
            {"validators", vs.size()},
            {"diverged_pairs", diverged / 2}});
    }
    for (const auto &[key, chain] : check.chains) {
      emit({{"kind", "chain"},
            {"validator", key.first},
            {"threshold", key.second},
            {"height", chain.back().height},
            {"head", chain.back().block.hex()}});
    }

    text << "\nvalidators\n";
    text << "  id role       era exp  units    dag  endorse  parked dropped\n";
    for (ValidatorId v = 0; v < sim.size(); ++v) {
      const auto &val = sim.validator(v);
      const auto &st = val.stats();
      auto dropped = st.dropped_invalid + st.dropped_spam + st.dropped_stale;
      text << "  " << std::setw(2) << v << " " << std::setw(10) << std::left
           << roleName(sim.role(v)) << std::right << std::setw(4) << val.era() << std::setw(4)
           << val.exponent() << std::setw(7) << st.units_created << std::setw(7)
           << val.view().state().size() << std::setw(9) << st.endorsements_sent
           << std::setw(8) << st.lnc_parked << std::setw(8) << dropped << "\n";
      emit({{"kind", "validator"},
            {"id", v},
            {"role", roleName(sim.role(v))},
            {"era", val.era()},
            {"exponent", val.exponent()},
            {"units_created", st.units_created},
            {"dag_size", val.view().state().size()},
            {"endorsements_sent", st.endorsements_sent},
            {"lnc_parked", st.lnc_parked},
            {"lnc_overflow", st.lnc_overflow},
            {"dropped", dropped},
            {"cautious", val.cautious()}});
    }

    text << "\nsafety\n" << check.text();
    json violations = json::array();
    for (const auto &v : check.violations) {
      violations.push_back({{"height", v.height},
                            {"fatal", v.fatal},
                            {"first", {v.first_validator, v.first_threshold, v.first_block.hex()}},
                            {"second",
                             {v.second_validator, v.second_threshold, v.second_block.hex()}}});
    }
    std::vector<ValidatorId> observed(check.observed_equivocators.begin(),
                                      check.observed_equivocators.end());
    emit({{"kind", "verdict"},
          {"clean", check.clean()},
          {"fault_weight", check.fault_weight},
          {"observed_equivocators", observed},
          {"recorded_mismatches", check.recorded_mismatches},
          {"violations", violations}});
    return RunReport{text.str(), lines.str()};
  }

}  // namespace highway
