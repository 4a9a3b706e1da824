/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/checker.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "highway/finality.hpp"

namespace highway {

  namespace {
    std::vector<std::string> split(const std::string &line, char sep) {
      std::vector<std::string> out;
      std::size_t start = 0;
      for (;;) {
        auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) {
          return out;
        }
        start = pos + 1;
      }
    }

    std::uint64_t number(const std::string &s, std::size_t line) {
      try {
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used == s.size()) {
          return v;
        }
      } catch (const std::logic_error &) {
      }
      throw CorruptTrace(line, "bad number '" + s + "'");
    }

    Digest digest(const std::string &s, std::size_t line) {
      try {
        return Digest::fromHex(s);
      } catch (const std::exception &) {
        throw CorruptTrace(line, "bad digest '" + s + "'");
      }
    }

    template <typename T>
    std::vector<T> numbers(const std::string &s, std::size_t line) {
      std::vector<T> out;
      if (s.empty()) {
        return out;
      }
      for (const auto &x : split(s, ',')) {
        out.push_back(static_cast<T>(number(x, line)));
      }
      return out;
    }

    struct Replica {
      std::unique_ptr<LocalView> view;
      std::uint32_t era = 0;
      std::map<Weight, std::vector<BlockHash>> era_chains;
      bool dirty = false;
    };
  }  // namespace

  TraceHeader parseTraceHeader(const std::string &trace) {
    TraceHeader h;
    std::istringstream in(trace);
    std::string line;
    std::size_t lineno = 0;
    bool seen_magic = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.starts_with("#")) {
        break;
      }
      auto f = split(line, '\t');
      if (f.size() < 3) {
        throw CorruptTrace(lineno, "malformed header");
      }
      const auto &key = f[1];
      const auto &val = f[2];
      if (key == "highway-trace") {
        seen_magic = true;
      } else if (key == "n") {
        h.n = number(val, lineno);
      } else if (key == "weights") {
        h.weights = numbers<Weight>(val, lineno);
      } else if (key == "byzantine") {
        auto ids = numbers<ValidatorId>(val, lineno);
        h.byzantine = {ids.begin(), ids.end()};
      } else if (key == "crash") {
        auto ids = numbers<ValidatorId>(val, lineno);
        h.crash = {ids.begin(), ids.end()};
      } else if (key == "thresholds") {
        h.thresholds = numbers<Weight>(val, lineno);
      } else if (key == "era_length") {
        h.era_length = number(val, lineno);
      } else if (key == "seed") {
        h.seed = number(val, lineno);
      }
    }
    if (!seen_magic || h.n == 0 || h.weights.size() != h.n) {
      throw CorruptTrace(1, "missing or incomplete header");
    }
    return h;
  }

  bool CheckReport::clean() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const SafetyViolation &v) { return v.fatal; });
  }

  std::string CheckReport::text() const {
    std::ostringstream out;
    out << "validators " << header.n << ", declared byzantine " << header.byzantine.size()
        << ", observed equivocators " << observed_equivocators.size() << ", fault weight "
        << fault_weight << "\n";
    out << "units " << units << "\n";
    for (auto t : thresholds) {
      out << "threshold " << t << ":";
      for (const auto &[key, chain] : chains) {
        if (key.second == t) {
          out << " v" << key.first << "=" << chain.back().height;
        }
      }
      out << "\n";
    }
    for (const auto &v : violations) {
      out << (v.fatal ? "VIOLATION" : "permitted") << " height " << v.height << ": v"
          << v.first_validator << " t" << v.first_threshold << " " << v.first_block.hex()
          << " vs v" << v.second_validator << " t" << v.second_threshold << " "
          << v.second_block.hex() << "\n";
    }
    if (recorded_mismatches > 0) {
      out << "recorded finality mismatches " << recorded_mismatches << "\n";
    }
    out << "verdict " << (clean() ? "clean" : "unsafe") << "\n";
    return out.str();
  }

  CheckReport checkTrace(const std::string &trace, const std::vector<Weight> &thresholds_in) {
    CheckReport report;
    report.header = parseTraceHeader(trace);
    const auto &hdr = report.header;
    std::set<Weight> tset(thresholds_in.begin(), thresholds_in.end());
    report.thresholds = {tset.begin(), tset.end()};
    WeightMap weights(hdr.weights);
    for (auto t : report.thresholds) {
      if (t < 0 || t >= weights.total()) {
        throw std::invalid_argument("threshold " + std::to_string(t) + " outside [0, N)");
      }
    }

    std::unordered_map<UnitHash, UnitPtr> units;
    std::vector<Replica> replicas(hdr.n);
    auto genesis = makeGenesis(0);
    auto honest = [&](ValidatorId v) { return v < hdr.n && !hdr.byzantine.contains(v); };
    for (ValidatorId v = 0; v < hdr.n; ++v) {
      if (!honest(v)) {
        continue;
      }
      replicas[v].view = std::make_unique<LocalView>(weights, genesis);
      for (auto t : report.thresholds) {
        replicas[v].era_chains[t] = {genesis.hash};
        report.chains[{v, t}] = {ChainEntry{0, genesis.hash}};
      }
    }
    std::map<std::pair<ValidatorId, Weight>, std::vector<ChainEntry>> recorded;

    auto flush = [&](ValidatorId v) {
      auto &r = replicas[v];
      if (!r.dirty) {
        return;
      }
      r.dirty = false;
      // Every era ends at height era_length * (era + 1) - 1.
      const auto cap = hdr.era_length > 0 ? hdr.era_length * (r.era + 1) - 1
                                          : std::numeric_limits<std::uint64_t>::max();
      for (auto t : report.thresholds) {
        auto &chain = r.era_chains[t];
        auto before = chain.size();
        if (r.view->tree().get(chain.back()).height < cap) {
          extendFinalized(*r.view, t, chain);
        }
        while (chain.size() > before && r.view->tree().get(chain.back()).height > cap) {
          chain.pop_back();
        }
        auto &out = report.chains[{v, t}];
        for (auto i = before; i < chain.size(); ++i) {
          out.push_back(ChainEntry{r.view->tree().get(chain[i]).height, chain[i]});
        }
      }
    };
    auto flushAll = [&] {
      for (ValidatorId v = 0; v < hdr.n; ++v) {
        if (honest(v)) {
          flush(v);
        }
      }
    };

    std::istringstream in(trace);
    std::string line;
    std::size_t lineno = 0;
    std::optional<Tick> current_tick;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.starts_with("#") || line.starts_with("summary")) {
        continue;
      }
      auto f = split(line, '\t');
      if (f.size() < 5) {
        throw CorruptTrace(lineno, "expected at least 5 fields");
      }
      auto tick = static_cast<Tick>(number(f[0], lineno));
      if (current_tick && tick < *current_tick) {
        throw CorruptTrace(lineno, "ticks go backwards");
      }
      if (current_tick && tick != *current_tick) {
        flushAll();
      }
      current_tick = tick;
      const auto &kind = f[1];
      if (kind == "create") {
        if (f.size() < 8) {
          throw CorruptTrace(lineno, "create needs 8 fields");
        }
        try {
          BlockHash bh;
          auto fields = decodeUnit(fromHex(f[5]), &bh);
          fields.era = static_cast<std::uint32_t>(number(f[6], lineno));
          if (f[7] != "-") {
            fields.block = decodeBlock(fromHex(f[7]));
            if (fields.block->hash != bh) {
              throw CorruptTrace(lineno, "block body does not match unit");
            }
          }
          auto u = makeUnit(std::move(fields));
          if (u->hash != digest(f[4], lineno)) {
            throw CorruptTrace(lineno, "unit hash mismatch");
          }
          units.emplace(u->hash, u);
          ++report.units;
        } catch (const DecodeError &e) {
          throw CorruptTrace(lineno, e.what());
        }
      } else if (kind == "add") {
        auto v = static_cast<ValidatorId>(number(f[3], lineno));
        if (!honest(v)) {
          continue;
        }
        auto it = units.find(digest(f[4], lineno));
        if (it == units.end()) {
          throw CorruptTrace(lineno, "add of unknown unit " + f[4]);
        }
        auto out = replicas[v].view->insert(it->second);
        if (!out.accepted() && out.status != InsertOutcome::Status::kDuplicate) {
          throw CorruptTrace(lineno, "replay rejected unit " + f[4] + ": "
                                         + toString(out.status) + " " + out.reason);
        }
        replicas[v].dirty = true;
      } else if (kind == "final") {
        auto v = static_cast<ValidatorId>(number(f[2], lineno));
        if (!honest(v) || f.size() < 7) {
          continue;
        }
        auto t = static_cast<Weight>(number(f[5], lineno));
        recorded[{v, t}].push_back(ChainEntry{number(f[6], lineno), digest(f[4], lineno)});
      } else if (kind == "era") {
        auto v = static_cast<ValidatorId>(number(f[2], lineno));
        if (!honest(v)) {
          continue;
        }
        auto &r = replicas[v];
        r.dirty = true;
        flush(v);
        for (auto e : r.view->state().equivocators()) {
          report.observed_equivocators.insert(e);
        }
        auto g = digest(f[4], lineno);
        const auto &old_tree = r.view->tree();
        if (!old_tree.contains(g)) {
          throw CorruptTrace(lineno, "era genesis " + f[4] + " unknown to the replica");
        }
        auto block = old_tree.get(g);
        auto path = old_tree.pathTo(g);
        for (auto t : report.thresholds) {
          auto &out = report.chains[{v, t}];
          for (auto h : path) {
            const auto &b = old_tree.get(h);
            if (b.height > out.back().height) {
              out.push_back(ChainEntry{b.height, h});
            }
          }
          r.era_chains[t] = {g};
        }
        r.view = std::make_unique<LocalView>(weights, block);
        ++r.era;
      } else if (kind == "drop" || kind == "lnc" || kind == "endorse" || kind == "exp"
                 || kind == "mode") {
        continue;
      } else {
        throw CorruptTrace(lineno, "unknown event '" + kind + "'");
      }
    }
    for (ValidatorId v = 0; v < hdr.n; ++v) {
      if (honest(v)) {
        replicas[v].dirty = true;
        flush(v);
        for (auto e : replicas[v].view->state().equivocators()) {
          report.observed_equivocators.insert(e);
        }
      }
    }

    std::set<ValidatorId> faulty = hdr.byzantine;
    faulty.insert(report.observed_equivocators.begin(), report.observed_equivocators.end());
    for (auto v : faulty) {
      report.fault_weight += weights[v];
    }

    // Recorded events must agree with replay wherever both have a block.
    for (const auto &[key, entries] : recorded) {
      auto it = report.chains.find(key);
      if (it == report.chains.end()) {
        continue;
      }
      std::map<std::uint64_t, BlockHash> replayed;
      for (const auto &e : it->second) {
        replayed.emplace(e.height, e.block);
      }
      for (const auto &e : entries) {
        auto r = replayed.find(e.height);
        if (r != replayed.end() && r->second != e.block) {
          ++report.recorded_mismatches;
        }
      }
    }

    // height -> block -> strongest (validator, threshold) finalizing it
    struct Claim {
      ValidatorId v;
      Weight t;
    };
    std::map<std::uint64_t, std::map<BlockHash, Claim>> by_height;
    auto claim = [&](ValidatorId v, Weight t, const ChainEntry &e) {
      auto [it, fresh] = by_height[e.height].emplace(e.block, Claim{v, t});
      if (!fresh && t > it->second.t) {
        it->second = Claim{v, t};
      }
    };
    for (const auto &[key, chain] : report.chains) {
      for (const auto &e : chain) {
        claim(key.first, key.second, e);
      }
    }
    for (const auto &[key, entries] : recorded) {
      for (const auto &e : entries) {
        claim(key.first, key.second, e);
      }
    }
    for (const auto &[height, blocks] : by_height) {
      for (auto a = blocks.begin(); a != blocks.end(); ++a) {
        for (auto b = std::next(a); b != blocks.end(); ++b) {
          SafetyViolation sv;
          sv.height = height;
          sv.first_validator = a->second.v;
          sv.first_threshold = a->second.t;
          sv.first_block = a->first;
          sv.second_validator = b->second.v;
          sv.second_threshold = b->second.t;
          sv.second_block = b->first;
          sv.fatal = std::min(a->second.t, b->second.t) >= report.fault_weight;
          report.violations.push_back(sv);
        }
      }
    }
    return report;
  }

}  // namespace highway
