/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/finality.hpp"

#include <algorithm>
#include <set>

namespace highway {

  namespace {
    using Wide = __int128;

    struct Streak {
      ValidatorId sender;
      std::vector<std::size_t> units;  // oldest first
      std::size_t start = 0;           // current level is units[start..]
    };

    Weight density(const LocalView &view,
                   std::size_t u,
                   const std::vector<Streak> &streaks,
                   const std::vector<bool> &in) {
      const auto &state = view.state();
      Weight total = 0;
      for (std::size_t i = 0; i < streaks.size(); ++i) {
        if (in[i] && state.justifiesIdx(u, streaks[i].units[streaks[i].start])) {
          total += view.weights()[streaks[i].sender];
        }
      }
      return total;
    }
  }  // namespace

  Summit findSummit(const LocalView &view,
                    BlockHash b,
                    Weight q,
                    std::size_t max_height) {
    Summit out;
    out.block = b;
    out.quorum = q;
    const auto &state = view.state();
    const auto &faulty = state.equivocators();

    std::vector<Streak> streaks;
    for (ValidatorId v = 0; v < state.validatorCount(); ++v) {
      if (faulty.contains(v) || state.tipsOf(v).empty()) {
        continue;
      }
      Streak s{v, {}, 0};
      std::optional<std::size_t> u = state.tipsOf(v).front();
      while (u && view.votesFor(*u, b)) {
        s.units.push_back(*u);
        const auto &prev = state.panorama(*u)[v];
        u.reset();
        if (prev.kind == SeenEntry::Kind::kUnit) {
          u = prev.index;
        }
      }
      if (!s.units.empty()) {
        std::reverse(s.units.begin(), s.units.end());
        streaks.push_back(std::move(s));
      }
    }

    auto snapshot = [&](const std::vector<bool> &in) {
      std::vector<std::size_t> level;
      for (std::size_t i = 0; i < streaks.size(); ++i) {
        if (in[i]) {
          level.insert(level.end(),
                       streaks[i].units.begin() + static_cast<std::ptrdiff_t>(streaks[i].start),
                       streaks[i].units.end());
        }
      }
      std::sort(level.begin(), level.end());
      return level;
    };

    std::vector<bool> in(streaks.size(), true);
    out.levels.push_back(snapshot(in));
    while (out.height() < max_height) {
      for (;;) {
        auto w = in;
        for (std::size_t i = 0; i < streaks.size(); ++i) {
          if (w[i] && density(view, streaks[i].units.back(), streaks, w) < q) {
            in[i] = false;
          }
        }
        if (w == in) {
          break;
        }
      }
      if (std::none_of(in.begin(), in.end(), [](bool x) { return x; })) {
        break;
      }
      std::vector<std::size_t> next_start(streaks.size(), 0);
      for (std::size_t i = 0; i < streaks.size(); ++i) {
        if (!in[i]) {
          continue;
        }
        const auto &units = streaks[i].units;
        auto lo = streaks[i].start;
        auto hi = units.size() - 1;
        while (lo < hi) {
          auto mid = lo + (hi - lo) / 2;
          if (density(view, units[mid], streaks, in) >= q) {
            hi = mid;
          } else {
            lo = mid + 1;
          }
        }
        next_start[i] = lo;
      }
      for (std::size_t i = 0; i < streaks.size(); ++i) {
        if (in[i]) {
          streaks[i].start = next_start[i];
        }
      }
      out.levels.push_back(snapshot(in));
    }
    return out;
  }

  SummitCheck validateSummit(const LocalView &view, const Summit &summit) {
    const auto &state = view.state();
    auto fail = [](std::string why) { return SummitCheck{false, std::move(why)}; };
    const auto &levels = summit.levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (i > 0 && levels[i].empty()) {
        return fail("empty level " + std::to_string(i));
      }
      if (i > 0
          && !std::includes(levels[i - 1].begin(), levels[i - 1].end(),
                            levels[i].begin(), levels[i].end())) {
        return fail("level " + std::to_string(i) + " not nested");
      }
    }
    if (levels.empty()) {
      return {};
    }
    for (auto u : levels[0]) {
      if (!view.votesFor(u, summit.block)) {
        return fail("unit does not vote for the block");
      }
      if (state.equivocators().contains(state.unit(u).sender)) {
        return fail("level 0 holds an equivocator");
      }
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const std::set<std::size_t> level(levels[i].begin(), levels[i].end());
      for (auto a : levels[i]) {
        for (auto c : levels[i]) {
          if (a == c || state.unit(c).sender != state.unit(a).sender
              || !state.justifiesIdx(c, a)) {
            continue;
          }
          for (auto m : state.unitsBy(state.unit(a).sender)) {
            if (state.justifiesIdx(m, a) && state.justifiesIdx(c, m)
                && !level.contains(m)) {
              return fail("level " + std::to_string(i) + " not convex");
            }
          }
        }
      }
    }
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      std::set<ValidatorId> upper;
      for (auto u : levels[i + 1]) {
        upper.insert(state.unit(u).sender);
      }
      for (auto u : levels[i + 1]) {
        std::set<ValidatorId> seen;
        for (auto x : levels[i]) {
          auto s = state.unit(x).sender;
          if (upper.contains(s) && state.justifiesIdx(u, x)) {
            seen.insert(s);
          }
        }
        if (view.weights().sum(seen) < summit.quorum) {
          return fail("density below quorum at level " + std::to_string(i + 1));
        }
      }
    }
    return {};
  }

  bool finalFormula(Weight n, Weight q, std::size_t k, Weight t) {
    if (k > kMaxSummitHeight) {
      k = kMaxSummitHeight;
    }
    const Wide scale = Wide{1} << k;
    return Wide{2 * q - n} * (scale - 1) > Wide{t} * scale;
  }

  Weight maxThreshold(Weight n, Weight q, std::size_t k) {
    if (k > kMaxSummitHeight) {
      k = kMaxSummitHeight;
    }
    const Wide scale = Wide{1} << k;
    const Wide a = Wide{2 * q - n} * (scale - 1);
    if (a <= 0) {
      return -1;
    }
    return static_cast<Weight>((a - 1) / scale);
  }

  bool isFinal(const LocalView &view, BlockHash b, Weight t) {
    if (b == view.genesis().hash) {
      return true;
    }
    const auto n = view.weights().total();
    for (Weight q = (n + t + 1) / 2; q <= n; ++q) {
      std::size_t need = 1;
      while (need <= kMaxSummitHeight && !finalFormula(n, q, need, t)) {
        ++need;
      }
      if (need > kMaxSummitHeight) {
        continue;
      }
      if (findSummit(view, b, q, need).height() >= need) {
        return true;
      }
    }
    return false;
  }

  Weight confidence(const LocalView &view, BlockHash b) {
    const auto n = view.weights().total();
    Weight best = -1;
    for (Weight q = n / 2 + 1; q <= n; ++q) {
      if (maxThreshold(n, q, kMaxSummitHeight) <= best) {
        continue;
      }
      auto k = findSummit(view, b, q).height();
      best = std::max(best, maxThreshold(n, q, k));
    }
    return best;
  }

  std::size_t extendFinalized(const LocalView &view,
                              Weight t,
                              std::vector<BlockHash> &chain) {
    if (chain.empty()) {
      chain.push_back(view.genesis().hash);
    }
    std::size_t added = 0;
    for (;;) {
      const auto &kids = view.tree().children(chain.back());
      auto it = std::find_if(kids.begin(), kids.end(), [&](BlockHash k) {
        return isFinal(view, k, t);
      });
      if (it == kids.end()) {
        return added;
      }
      chain.push_back(*it);
      ++added;
    }
  }

  std::vector<BlockHash> finalizedChain(const LocalView &view, Weight t) {
    std::vector<BlockHash> chain;
    extendFinalized(view, t, chain);
    return chain;
  }

  std::map<Weight, std::vector<BlockHash>> finalizedChains(
      const LocalView &view, const std::vector<Weight> &thresholds) {
    std::map<Weight, std::vector<BlockHash>> out;
    for (auto t : thresholds) {
      out[t] = finalizedChain(view, t);
    }
    return out;
  }

}  // namespace highway
