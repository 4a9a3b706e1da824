/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace highway {

  namespace {
    using Mask = std::uint32_t;

    bool subset(Mask a, Mask b) {
      return (a & ~b) == 0;
    }

    /// Everything the enumeration needs, rebuilt from raw unit data.
    struct Model {
      std::size_t m = 0;
      std::vector<ValidatorId> sender;
      std::vector<Mask> below;  // closed downset
      std::vector<BlockHash> vote;
      Mask faulty_units = 0;
      WeightMap weights;
    };

    Model buildModel(const LocalView &view) {
      const auto &st = view.state();
      Model md;
      md.m = st.size();
      md.weights = view.weights();
      std::unordered_map<UnitHash, std::size_t> idx;
      std::unordered_map<BlockHash, std::optional<BlockHash>> parent;
      parent.emplace(view.genesis().hash, std::nullopt);
      std::unordered_map<BlockHash, Mask> carriers;
      for (std::size_t i = 0; i < md.m; ++i) {
        const auto &u = st.unit(i);
        idx.emplace(u.hash, i);
        md.sender.push_back(u.sender);
        Mask below = Mask{1} << i;
        for (auto c : u.citations) {
          below |= md.below.at(idx.at(c));
        }
        md.below.push_back(below);
        if (u.block) {
          parent.emplace(u.block->hash, u.block->parent);
          carriers[u.block->hash] |= Mask{1} << i;
        }
      }
      auto descends = [&](BlockHash d, BlockHash a) {
        std::optional<BlockHash> cur = d;
        while (cur) {
          if (*cur == a) {
            return true;
          }
          cur = parent.at(*cur);
        }
        return false;
      };
      auto incomparable = [&](std::size_t a, std::size_t b) {
        return !(md.below[a] >> b & 1U) && !(md.below[b] >> a & 1U);
      };
      std::set<ValidatorId> equivocators;
      for (std::size_t a = 0; a < md.m; ++a) {
        for (std::size_t b = a + 1; b < md.m; ++b) {
          if (md.sender[a] == md.sender[b] && incomparable(a, b)) {
            equivocators.insert(md.sender[a]);
          }
        }
      }
      for (std::size_t i = 0; i < md.m; ++i) {
        if (equivocators.contains(md.sender[i])) {
          md.faulty_units |= Mask{1} << i;
        }
      }
      // Votes in insertion order, which is topological.
      const auto n = st.validatorCount();
      for (std::size_t i = 0; i < md.m; ++i) {
        const auto &u = st.unit(i);
        if (u.block) {
          md.vote.push_back(u.block->hash);
          continue;
        }
        const Mask strict = md.below[i] & ~(Mask{1} << i);
        std::vector<std::optional<BlockHash>> opinion(n);
        for (ValidatorId v = 0; v < n; ++v) {
          std::vector<std::size_t> mine;
          for (std::size_t j = 0; j < md.m; ++j) {
            if ((strict >> j & 1U) && md.sender[j] == v) {
              mine.push_back(j);
            }
          }
          bool forked = false;
          for (std::size_t a = 0; a < mine.size() && !forked; ++a) {
            for (std::size_t b = a + 1; b < mine.size(); ++b) {
              if (incomparable(mine[a], mine[b])) {
                forked = true;
                break;
              }
            }
          }
          if (mine.empty() || forked) {
            continue;
          }
          auto top = *std::max_element(mine.begin(), mine.end(), [&](auto a, auto b) {
            return (md.below[b] >> a & 1U) != 0;
          });
          opinion[v] = md.vote[top];
        }
        auto member = [&](BlockHash h) {
          auto it = carriers.find(h);
          return it != carriers.end() && (it->second & strict) != 0;
        };
        BlockHash cur = view.genesis().hash;
        for (;;) {
          std::vector<BlockHash> kids;
          for (const auto &[h, p] : parent) {
            if (p && *p == cur && member(h)) {
              kids.push_back(h);
            }
          }
          if (kids.empty()) {
            break;
          }
          std::sort(kids.begin(), kids.end());
          BlockHash best = kids.front();
          Weight best_w = -1;
          for (auto k : kids) {
            Weight w = 0;
            for (ValidatorId v = 0; v < n; ++v) {
              if (opinion[v] && descends(*opinion[v], k)) {
                w += md.weights[v];
              }
            }
            if (w > best_w) {
              best_w = w;
              best = k;
            }
          }
          cur = best;
        }
        md.vote.push_back(cur);
      }
      return md;
    }

    struct Enumerator {
      const Model &md;
      Weight q;
      std::unordered_map<Mask, std::vector<Mask>> edges;

      bool convex(Mask level) const {
        for (std::size_t c = 0; c < md.m; ++c) {
          if (!(level >> c & 1U)) {
            continue;
          }
          for (std::size_t a = 0; a < md.m; ++a) {
            if (a == c || !(level >> a & 1U) || md.sender[a] != md.sender[c]
                || !(md.below[c] >> a & 1U)) {
              continue;
            }
            for (std::size_t x = 0; x < md.m; ++x) {
              if (md.sender[x] == md.sender[a] && (md.below[x] >> a & 1U)
                  && (md.below[c] >> x & 1U) && !(level >> x & 1U)) {
                return false;
              }
            }
          }
        }
        return true;
      }

      bool dense(Mask upper, Mask lower) const {
        std::set<ValidatorId> senders;
        for (std::size_t i = 0; i < md.m; ++i) {
          if (upper >> i & 1U) {
            senders.insert(md.sender[i]);
          }
        }
        Mask restricted = 0;
        for (std::size_t i = 0; i < md.m; ++i) {
          if ((lower >> i & 1U) && senders.contains(md.sender[i])) {
            restricted |= Mask{1} << i;
          }
        }
        for (std::size_t u = 0; u < md.m; ++u) {
          if (!(upper >> u & 1U)) {
            continue;
          }
          std::set<ValidatorId> seen;
          for (std::size_t i = 0; i < md.m; ++i) {
            if ((md.below[u] & restricted) >> i & 1U) {
              seen.insert(md.sender[i]);
            }
          }
          if (md.weights.sum(seen) < q) {
            return false;
          }
        }
        return true;
      }

      const std::vector<Mask> &next(Mask lower) {
        auto it = edges.find(lower);
        if (it != edges.end()) {
          return it->second;
        }
        std::vector<Mask> out;
        for (Mask sub = lower; sub != 0; sub = (sub - 1) & lower) {
          if (convex(sub) && dense(sub, lower)) {
            out.push_back(sub);
          }
        }
        return edges.emplace(lower, std::move(out)).first->second;
      }
    };

    Mask toMask(const std::vector<std::size_t> &units) {
      Mask m = 0;
      for (auto u : units) {
        m |= Mask{1} << u;
      }
      return m;
    }

    std::vector<std::size_t> fromMask(Mask m) {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < 32; ++i) {
        if (m >> i & 1U) {
          out.push_back(i);
        }
      }
      return out;
    }
  }  // namespace

  OracleReport runOracle(const LocalView &view, BlockHash b, Weight q) {
    if (view.state().size() > kOracleMaxUnits) {
      throw FixtureError("fixture has " + std::to_string(view.state().size())
                         + " units; the oracle accepts at most "
                         + std::to_string(kOracleMaxUnits));
    }
    if (!view.tree().contains(b)) {
      throw FixtureError("unknown block " + b.hex());
    }
    OracleReport rep;
    auto md = buildModel(view);
    for (std::size_t i = 0; i < md.m; ++i) {
      if (md.vote[i] != view.voteIdx(i)) {
        rep.violations.push_back("vote of unit " + std::to_string(i) + " differs: engine "
                                 + view.voteIdx(i).hex() + ", oracle " + md.vote[i].hex());
      }
    }
    rep.greedy = findSummit(view, b, q);

    Enumerator en{md, q, {}};
    Mask unanimous = 0;
    for (std::size_t i = 0; i < md.m; ++i) {
      if (!(md.faulty_units >> i & 1U) && view.tree().isDescendant(md.vote[i], b)) {
        unanimous |= Mask{1} << i;
      }
    }

    // The greedy output must itself satisfy the definition.
    std::vector<Mask> greedy;
    for (const auto &level : rep.greedy.levels) {
      greedy.push_back(toMask(level));
    }
    for (std::size_t i = 0; i < greedy.size(); ++i) {
      auto tag = "greedy level " + std::to_string(i);
      if (i == 0 && !subset(greedy[0], unanimous)) {
        rep.violations.push_back(tag + " has a unit that is faulty or votes elsewhere");
      }
      if (!en.convex(greedy[i])) {
        rep.violations.push_back(tag + " is not convex");
      }
      if (i > 0) {
        if (greedy[i] == 0) {
          rep.violations.push_back(tag + " is empty");
        }
        if (!subset(greedy[i], greedy[i - 1])) {
          rep.violations.push_back(tag + " is not nested");
        }
        if (!en.dense(greedy[i], greedy[i - 1])) {
          rep.violations.push_back(tag + " is below quorum");
        }
      }
    }

    std::set<Mask> literal;
    std::set<Mask> suffixes;
    for (Mask sub = unanimous;; sub = (sub - 1) & unanimous) {
      if (en.convex(sub)) {
        literal.insert(sub);
        bool upward = true;
        for (std::size_t x = 0; x < md.m && upward; ++x) {
          for (std::size_t y = 0; y < md.m; ++y) {
            if ((sub >> x & 1U) && md.sender[y] == md.sender[x] && (md.below[y] >> x & 1U)
                && !(sub >> y & 1U)) {
              upward = false;
              break;
            }
          }
        }
        if (upward) {
          suffixes.insert(sub);
        }
      }
      if (sub == 0) {
        break;
      }
    }
    const auto r = rep.greedy.height();
    auto walk = [&](std::set<Mask> frontier, std::vector<std::string> &violations, bool record) {
      for (std::size_t level = 0; !frontier.empty(); ++level) {
        Mask all = 0;
        for (auto m : frontier) {
          all |= m;
        }
        if (record) {
          rep.candidates += frontier.size();
          rep.brute_levels.push_back(fromMask(all));
          rep.brute_height = level;
        }
        if (level > r) {
          violations.push_back("brute-force summit of height " + std::to_string(level)
                               + " exceeds greedy height " + std::to_string(r));
          return;
        }
        if (!subset(all, greedy[level])) {
          violations.push_back("level " + std::to_string(level)
                               + " of a brute-force summit is outside the greedy level");
        }
        if (level == kMaxSummitHeight) {
          return;
        }
        std::set<Mask> upper;
        for (auto m : frontier) {
          for (auto sub : en.next(m)) {
            upper.insert(sub);
          }
        }
        if (upper == frontier) {
          // Self-sustaining levels repeat forever; the greedy must hit the cap.
          if (r < kMaxSummitHeight) {
            violations.push_back("brute-force summits are unbounded but greedy height is "
                                 + std::to_string(r));
          }
          for (auto l = level + 1; l <= r; ++l) {
            if (!subset(all, greedy[l])) {
              violations.push_back("level " + std::to_string(l)
                                   + " of a brute-force summit is outside the greedy level");
              break;
            }
          }
          if (record) {
            rep.brute_height = kMaxSummitHeight;
          }
          return;
        }
        frontier = std::move(upper);
      }
    };
    rep.suffix_violations = rep.violations;
    walk(std::move(literal), rep.violations, true);
    walk(std::move(suffixes), rep.suffix_violations, false);
    return rep;
  }

  Fixture::Fixture(WeightMap weights)
      : view_(std::make_unique<LocalView>(weights, makeGenesis(0))),
        per_sender_(weights.size(), 0) {
    blocks_.emplace("genesis", view_->genesis().hash);
  }

  BlockHash Fixture::block(const std::string &label) const {
    auto it = blocks_.find(label);
    if (it == blocks_.end()) {
      throw FixtureError("unknown block '" + label + "'");
    }
    return it->second;
  }

  std::string Fixture::blockName(BlockHash h) const {
    for (const auto &[name, hash] : blocks_) {
      if (hash == h) {
        return name;
      }
    }
    return h.hex();
  }

  std::size_t Fixture::addUnit(const std::string &name,
                               ValidatorId sender,
                               const std::vector<std::string> &cites,
                               const std::optional<std::string> &block,
                               const std::optional<std::string> &parent) {
    if (by_name_.contains(name)) {
      throw FixtureError("duplicate unit '" + name + "'");
    }
    if (sender >= per_sender_.size()) {
      throw FixtureError("unit '" + name + "': sender out of range");
    }
    if (block && blocks_.contains(*block)) {
      throw FixtureError("unit '" + name + "': block '" + *block + "' already defined");
    }
    UnitFields f;
    f.sender = sender;
    f.seq = per_sender_[sender];
    f.round_id = static_cast<Tick>(names_.size());
    f.timestamp = f.round_id;
    for (const auto &c : cites) {
      auto it = by_name_.find(c);
      if (it == by_name_.end()) {
        throw FixtureError("unit '" + name + "' cites unknown unit '" + c + "'");
      }
      f.citations.push_back(view_->state().unit(it->second).hash);
    }
    std::sort(f.citations.begin(), f.citations.end());
    f.citations.erase(std::unique(f.citations.begin(), f.citations.end()), f.citations.end());
    if (block) {
      auto p = parent ? this->block(*parent) : view_->chooseProposalParent(sender, f.citations);
      Bytes payload(block->begin(), block->end());
      f.kind = UnitKind::kProposal;
      f.block = makeBlock(p, view_->tree().get(p).height, std::move(payload), sender, f.timestamp);
    }
    auto u = makeUnit(std::move(f));
    auto out = view_->insert(u);
    if (!out.accepted()) {
      throw FixtureError("unit '" + name + "' rejected: " + out.reason);
    }
    if (block) {
      blocks_.emplace(*block, u->block->hash);
    }
    ++per_sender_[sender];
    by_name_.emplace(name, out.index);
    names_.push_back(name);
    return out.index;
  }

  namespace {
    std::vector<std::string> listItems(const std::string &text, std::size_t line) {
      if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
        throw FixtureError("line " + std::to_string(line) + ": expected [list]");
      }
      std::vector<std::string> out;
      std::string cur;
      for (auto c : text.substr(1, text.size() - 2)) {
        if (c == ',') {
          if (!cur.empty()) {
            out.push_back(cur);
          }
          cur.clear();
        } else if (c != ' ') {
          cur.push_back(c);
        }
      }
      if (!cur.empty()) {
        out.push_back(cur);
      }
      return out;
    }
  }  // namespace

  Fixture parseFixture(const std::string &text) {
    std::optional<Fixture> fx;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      auto line = raw.substr(0, raw.find('#'));
      // Glue "[a, b]" back into one token.
      std::string squashed;
      int depth = 0;
      for (auto c : line) {
        depth += c == '[' ? 1 : c == ']' ? -1 : 0;
        if (!(depth > 0 && c == ' ')) {
          squashed.push_back(c);
        }
      }
      std::istringstream words(squashed);
      std::vector<std::string> tok;
      for (std::string w; words >> w;) {
        tok.push_back(w);
      }
      if (tok.empty()) {
        continue;
      }
      auto where = "line " + std::to_string(lineno) + ": ";
      try {
        if (tok[0].starts_with("validators") || tok[0].starts_with("weights")) {
          if (fx) {
            throw FixtureError(where + "validators given twice");
          }
          auto eq = squashed.find('=');
          if (eq == std::string::npos) {
            throw FixtureError(where + "expected '='");
          }
          auto rhs = squashed.substr(eq + 1);
          rhs.erase(std::remove(rhs.begin(), rhs.end(), ' '), rhs.end());
          if (tok[0].starts_with("validators")) {
            fx.emplace(WeightMap::uniform(std::stoul(rhs)));
          } else {
            std::vector<Weight> w;
            for (const auto &x : listItems(rhs, lineno)) {
              w.push_back(std::stoll(x));
            }
            fx.emplace(WeightMap(w));
          }
          continue;
        }
        if (tok[0] != "unit" || tok.size() < 2) {
          throw FixtureError(where + "expected 'unit <name> sender=<id> ...'");
        }
        if (!fx) {
          throw FixtureError(where + "validators or weights must come first");
        }
        std::optional<ValidatorId> sender;
        std::vector<std::string> cites;
        std::optional<std::string> block;
        std::optional<std::string> parent;
        for (std::size_t i = 2; i < tok.size(); ++i) {
          auto eq = tok[i].find('=');
          if (eq == std::string::npos) {
            throw FixtureError(where + "expected key=value, got '" + tok[i] + "'");
          }
          auto k = tok[i].substr(0, eq);
          auto v = tok[i].substr(eq + 1);
          if (k == "sender") {
            sender = static_cast<ValidatorId>(std::stoul(v));
          } else if (k == "cites") {
            cites = listItems(v, lineno);
          } else if (k == "block") {
            block = v;
          } else if (k == "parent") {
            parent = v;
          } else {
            throw FixtureError(where + "unknown attribute '" + k + "'");
          }
        }
        if (!sender) {
          throw FixtureError(where + "missing sender=");
        }
        fx->addUnit(tok[1], *sender, cites, block, parent);
      } catch (const std::logic_error &e) {
        throw FixtureError(where + e.what());
      } catch (const FixtureError &e) {
        if (std::string(e.what()).starts_with("line ")) {
          throw;
        }
        throw FixtureError(where + e.what());
      }
    }
    if (!fx) {
      throw FixtureError("fixture defines no validators");
    }
    return std::move(*fx);
  }

  Fixture loadFixture(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
      throw FixtureError("cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parseFixture(buf.str());
  }

  Fixture randomFixture(std::uint64_t seed, std::size_t validators, std::size_t units) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    Fixture fx(WeightMap::uniform(validators));
    std::vector<std::vector<std::string>> by_sender(validators);
    std::vector<std::string> all;
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < units; ++i) {
      auto sender = static_cast<ValidatorId>(rng() % validators);
      std::vector<std::string> cites;
      auto &own = by_sender[sender];
      if (!own.empty()) {
        if (coin(rng) < 0.85) {
          cites.push_back(own.back());
        } else if (coin(rng) < 0.5) {
          cites.push_back(own[rng() % own.size()]);
        }
      }
      const double p = coin(rng) < 0.5 ? 0.9 : 0.35;
      for (ValidatorId v = 0; v < validators; ++v) {
        if (v != sender && !by_sender[v].empty() && coin(rng) < p) {
          cites.push_back(by_sender[v].back());
        }
      }
      std::optional<std::string> block;
      if (coin(rng) < 0.35) {
        block = "B" + std::to_string(++blocks);
      }
      auto name = "u" + std::to_string(i);
      fx.addUnit(name, sender, cites, block);
      own.push_back(name);
      all.push_back(name);
    }
    return fx;
  }

  std::string formatOracleReport(const Fixture &fx, const OracleReport &rep) {
    std::ostringstream out;
    auto names = [&](const std::vector<std::size_t> &level) {
      std::string s = "{";
      for (std::size_t i = 0; i < level.size(); ++i) {
        s += (i ? ", " : "") + fx.unitName(level[i]);
      }
      return s + "}";
    };
    out << "block " << fx.blockName(rep.greedy.block) << " quorum " << rep.greedy.quorum
        << "\n";
    out << "greedy height " << rep.greedy.height() << "\n";
    for (std::size_t i = 0; i < rep.greedy.levels.size(); ++i) {
      if (i == 8 && rep.greedy.levels.size() > 9) {
        out << "  ... C" << rep.greedy.height() << " " << names(rep.greedy.levels.back())
            << "\n";
        break;
      }
      out << "  C" << i << " " << names(rep.greedy.levels[i]) << "\n";
    }
    out << "brute-force height " << rep.brute_height << " (" << rep.candidates
        << " candidate levels)\n";
    for (std::size_t i = 0; i < rep.brute_levels.size(); ++i) {
      if (i == 8 && rep.brute_levels.size() > 9) {
        out << "  ...\n";
        break;
      }
      out << "  D" << i << " " << names(rep.brute_levels[i]) << "\n";
    }
    for (const auto &v : rep.violations) {
      out << "MISMATCH " << v << "\n";
    }
    if (!rep.ok()) {
      out << "restricted to latest-message suffixes: "
          << (rep.suffix_violations.empty() ? "no mismatch" : rep.suffix_violations.front())
          << "\n";
    }
    out << (rep.ok() ? "ok" : "mismatch") << "\n";
    return out.str();
  }

}  // namespace highway
