/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include "highway/finality.hpp"
#include "highway/oracle.hpp"

namespace highway {
  namespace {

    /// Proposal of B by validator 0, then `rounds` rounds where every
    /// validator cites the whole previous round.
    Fixture unanimous(std::size_t n, std::size_t rounds) {
      Fixture fx(WeightMap::uniform(n));
      fx.addUnit("p", 0, {}, "B");
      std::vector<std::string> prev{"p"};
      for (std::size_t r = 1; r <= rounds; ++r) {
        std::vector<std::string> cur;
        for (std::size_t v = 0; v < n; ++v) {
          auto name = "r" + std::to_string(r) + "v" + std::to_string(v);
          fx.addUnit(name, static_cast<ValidatorId>(v), prev);
          cur.push_back(name);
        }
        prev = cur;
      }
      return fx;
    }

    TEST(FinalFormula, Examples) {
      EXPECT_TRUE(finalFormula(4, 3, 2, 1));
      EXPECT_FALSE(finalFormula(4, 3, 2, 2));
      for (Weight t = 0; t <= 5; ++t) {
        EXPECT_TRUE(finalFormula(10, 8, 3, t)) << t;
      }
      for (Weight t = 6; t <= 10; ++t) {
        EXPECT_FALSE(finalFormula(10, 8, 3, t)) << t;
      }
    }

    TEST(FinalFormula, HeightZeroIsNeverFinal) {
      for (Weight n = 1; n <= 10; ++n) {
        for (Weight q = 0; q <= n; ++q) {
          EXPECT_FALSE(finalFormula(n, q, 0, 0));
          EXPECT_EQ(maxThreshold(n, q, 0), -1);
        }
      }
    }

    TEST(FinalFormula, MaxThreshold) {
      EXPECT_EQ(maxThreshold(10, 8, 3), 5);
      EXPECT_EQ(maxThreshold(4, 4, 40), 3);
      EXPECT_EQ(maxThreshold(4, 4, 1), 1);
    }

    // Property: maxThreshold is the boundary of finalFormula and is
    // monotone in q and k.
    TEST(FinalFormula, MaxThresholdIsBoundary) {
      for (Weight n = 1; n <= 12; ++n) {
        for (Weight q = 0; q <= n; ++q) {
          for (std::size_t k = 0; k <= 8; ++k) {
            auto m = maxThreshold(n, q, k);
            if (m >= 0) {
              EXPECT_TRUE(finalFormula(n, q, k, m));
            }
            EXPECT_FALSE(finalFormula(n, q, k, m + 1));
            EXPECT_LE(m, maxThreshold(n, q, k + 1));
            if (q < n) {
              EXPECT_LE(m, maxThreshold(n, q + 1, k));
            }
          }
        }
      }
    }

    TEST(Summit, NoVotesGivesHeightZero) {
      Fixture fx(WeightMap::uniform(3));
      fx.addUnit("p", 0, {}, "B");
      fx.addUnit("a", 1, {});
      fx.addUnit("c", 2, {}, "C");
      auto s = findSummit(fx.view(), fx.block("B"), 3);
      EXPECT_EQ(s.height(), 0U);
      EXPECT_EQ(confidence(fx.view(), fx.block("B")), -1);
    }

    TEST(Summit, UnanimousRoundsReachHeightTwo) {
      const std::size_t n = 4;
      auto fx = unanimous(n, 3);
      auto s = findSummit(fx.view(), fx.block("B"), static_cast<Weight>(n));
      ASSERT_GE(s.height(), 2U);
      EXPECT_TRUE(validateSummit(fx.view(), s).ok);
      for (const auto &level : s.levels) {
        std::set<ValidatorId> senders;
        for (auto i : level) {
          senders.insert(fx.view().state().unit(i).sender);
        }
        EXPECT_EQ(senders.size(), n);
      }
      // 3 x 3 rounds plus the proposal fits the oracle's unit limit.
      auto small = unanimous(3, 3);
      EXPECT_TRUE(runOracle(small.view(), small.block("B"), 3).ok());
    }

    TEST(Summit, FinalityGrowsWithRounds) {
      auto fx = unanimous(4, 2);
      EXPECT_TRUE(isFinal(fx.view(), fx.block("B"), 0));
      auto deep = unanimous(4, 6);
      EXPECT_TRUE(isFinal(deep.view(), deep.block("B"), 2));
      EXPECT_FALSE(isFinal(deep.view(), deep.block("B"), 4));
      EXPECT_GE(confidence(deep.view(), deep.block("B")), confidence(fx.view(), fx.block("B")));
    }

    TEST(Summit, EquivocatorExcludedFromLevelZero) {
      Fixture fx(WeightMap::uniform(4));
      fx.addUnit("p", 0, {}, "B");
      fx.addUnit("x", 3, {"p"});
      fx.addUnit("y", 3, {"p"});
      for (int r = 0; r < 3; ++r) {
        for (ValidatorId v = 0; v < 3; ++v) {
          std::vector<std::string> cites{"p", "x", "y"};
          if (r > 0) {
            for (ValidatorId w = 0; w < 3; ++w) {
              cites.push_back("u" + std::to_string(r - 1) + std::to_string(w));
            }
          }
          fx.addUnit("u" + std::to_string(r) + std::to_string(v), v, cites);
        }
      }
      auto s = findSummit(fx.view(), fx.block("B"), 3);
      EXPECT_TRUE(validateSummit(fx.view(), s).ok);
      for (const auto &level : s.levels) {
        for (auto i : level) {
          EXPECT_NE(fx.view().state().unit(i).sender, 3U);
        }
      }
    }

    TEST(FinalizedChain, GenesisOnlyOnFreshView) {
      LocalView view(WeightMap::uniform(4), makeGenesis());
      auto chains = finalizedChains(view, {0, 1});
      for (const auto &[t, chain] : chains) {
        EXPECT_EQ(chain, std::vector<BlockHash>{view.genesis().hash});
      }
    }

    TEST(FinalizedChain, LowerThresholdsExtendHigherOnes) {
      auto fx = unanimous(4, 5);
      auto chains = finalizedChains(fx.view(), {0, 1, 2, 3});
      for (Weight t = 0; t < 3; ++t) {
        const auto &lo = chains.at(t);
        const auto &hi = chains.at(t + 1);
        ASSERT_LE(hi.size(), lo.size());
        EXPECT_TRUE(std::equal(hi.begin(), hi.end(), lo.begin()));
      }
      EXPECT_EQ(chains.at(0).back(), fx.block("B"));
    }

    // Property: greedy output is always a valid summit and contains every
    // brute-force summit on its latest-message suffixes.
    TEST(Summit, RandomFixturesAgainstOracle) {
      for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto fx = randomFixture(seed, 3, 10);
        for (const auto &[label, b] : fx.blocks()) {
          for (Weight q = 1; q <= 3; ++q) {
            auto rep = runOracle(fx.view(), b, q);
            EXPECT_TRUE(validateSummit(fx.view(), rep.greedy).ok);
            EXPECT_TRUE(rep.suffix_violations.empty())
                << "seed " << seed << " block " << label << " q " << q;
          }
        }
      }
    }

  }  // namespace
}  // namespace highway
