/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <random>

#include "highway/dag.hpp"

namespace highway {
  namespace {

    UnitPtr unit(ValidatorId sender,
                 std::uint64_t seq,
                 std::vector<UnitHash> cites,
                 Tick ts = 0) {
      UnitFields f;
      f.sender = sender;
      f.seq = seq;
      f.round_id = ts;
      f.timestamp = ts;
      f.citations = std::move(cites);
      return makeUnit(std::move(f));
    }

    std::set<UnitHash> asSet(const std::vector<UnitHash> &v) {
      return {v.begin(), v.end()};
    }

    TEST(ProtocolState, InsertSeqZeroUnit) {
      ProtocolState st(3);
      auto u0 = unit(0, 0, {});
      EXPECT_TRUE(st.insert(u0).accepted());
      EXPECT_EQ(st.size(), 1U);
      EXPECT_TRUE(st.contains(u0->hash));
    }

    TEST(ProtocolState, DuplicateInsertIsNoop) {
      ProtocolState st(3);
      auto u0 = unit(0, 0, {});
      st.insert(u0);
      auto r = st.insert(u0);
      EXPECT_EQ(r.status, InsertOutcome::Status::kDuplicate);
      EXPECT_EQ(st.size(), 1U);
    }

    TEST(ProtocolState, UnknownCitationIsReportedMissing) {
      ProtocolState st(3);
      auto ghost = unit(1, 0, {});
      auto u = unit(0, 0, {ghost->hash});
      auto r = st.insert(u);
      EXPECT_EQ(r.status, InsertOutcome::Status::kMissingDependencies);
      ASSERT_EQ(r.missing.size(), 1U);
      EXPECT_EQ(r.missing[0], ghost->hash);
      EXPECT_EQ(st.size(), 0U);
    }

    TEST(ProtocolState, ForkRecordsEvidence) {
      ProtocolState st(3);
      auto u0 = unit(1, 0, {});
      auto a = unit(1, 1, {u0->hash}, 1);
      auto b = unit(1, 1, {u0->hash}, 2);
      st.insert(u0);
      st.insert(a);
      EXPECT_TRUE(st.equivocators().empty());
      EXPECT_TRUE(st.insert(b).accepted());
      ASSERT_EQ(st.evidence().size(), 1U);
      const auto &ev = st.evidence()[0];
      EXPECT_TRUE(st.isEquivocation(ev.first, ev.second));
      EXPECT_EQ(st.equivocators(), std::set<ValidatorId>{1});
    }

    TEST(ProtocolState, JustifiesIsReflexiveAndTransitive) {
      ProtocolState st(3);
      auto w = unit(0, 0, {});
      auto v = unit(1, 0, {w->hash});
      auto u = unit(2, 0, {v->hash});
      for (const auto &x : {w, v, u}) {
        st.insert(x);
      }
      EXPECT_TRUE(st.justifies(u->hash, u->hash));
      EXPECT_TRUE(st.justifies(u->hash, v->hash));
      EXPECT_TRUE(st.justifies(u->hash, w->hash));
      EXPECT_FALSE(st.justifies(w->hash, u->hash));
    }

    TEST(ProtocolState, Downsets) {
      ProtocolState st(3);
      auto u0 = unit(0, 0, {});
      auto u1 = unit(0, 1, {u0->hash});
      auto u2 = unit(0, 2, {u1->hash});
      for (const auto &x : {u0, u1, u2}) {
        st.insert(x);
      }
      EXPECT_TRUE(st.downset(u0->hash).empty());
      EXPECT_EQ(asSet(st.downset(u2->hash)), (std::set<UnitHash>{u0->hash, u1->hash}));
      EXPECT_EQ(st.downset(u2->hash, Scope::kClosed).size(), 3U);
    }

    TEST(ProtocolState, DiamondDownsetMatchesReachability) {
      ProtocolState st(3);
      auto r = unit(0, 0, {});
      auto a = unit(1, 0, {r->hash});
      auto b = unit(2, 0, {r->hash});
      auto u = unit(0, 1, {a->hash, b->hash, r->hash});
      for (const auto &x : {r, a, b, u}) {
        st.insert(x);
      }
      EXPECT_EQ(asSet(st.downset(u->hash)), (std::set<UnitHash>{a->hash, b->hash, r->hash}));
    }

    TEST(ProtocolState, IsEquivocationCases) {
      ProtocolState st(3);
      auto p = unit(0, 0, {});
      auto a = unit(0, 1, {p->hash}, 1);
      auto b = unit(0, 1, {p->hash}, 2);
      auto other = unit(1, 0, {});
      for (const auto &x : {p, a, b, other}) {
        st.insert(x);
      }
      EXPECT_FALSE(st.isEquivocation(p->hash, a->hash));
      EXPECT_FALSE(st.isEquivocation(a->hash, other->hash));
      EXPECT_TRUE(st.isEquivocation(a->hash, b->hash));
    }

    TEST(ProtocolState, EquivocatorsAreScopedToDownset) {
      ProtocolState st(3);
      auto p = unit(0, 0, {});
      auto a = unit(0, 1, {p->hash}, 1);
      auto b = unit(0, 1, {p->hash}, 2);
      auto one = unit(1, 0, {a->hash});
      auto both = unit(2, 0, {a->hash, b->hash});
      for (const auto &x : {p, a, b, one, both}) {
        st.insert(x);
      }
      std::vector<UnitHash> s1{one->hash};
      std::vector<UnitHash> s2{both->hash};
      EXPECT_TRUE(st.equivocators(s1, Scope::kStrict).empty());
      EXPECT_EQ(st.equivocators(s2, Scope::kStrict), std::set<ValidatorId>{0});
      // b itself sits in D̄ but not in D.
      std::vector<UnitHash> sb{b->hash, a->hash};
      EXPECT_TRUE(st.equivocators(sb, Scope::kStrict).empty());
      EXPECT_EQ(st.equivocators(sb, Scope::kClosed), std::set<ValidatorId>{0});
    }

    TEST(ProtocolState, LatestMessages) {
      ProtocolState st(3);
      auto v0 = unit(1, 0, {});
      auto v1 = unit(1, 1, {v0->hash});
      auto solo = unit(0, 0, {});
      auto u = unit(2, 0, {v1->hash});
      for (const auto &x : {v0, v1, solo, u}) {
        st.insert(x);
      }
      EXPECT_TRUE(st.latestMessages(solo->hash).empty());
      auto lm = st.latestMessages(u->hash);
      ASSERT_EQ(lm.size(), 1U);
      EXPECT_EQ(lm[0].first, 1U);
      EXPECT_EQ(lm[0].second, v1->hash);
      EXPECT_FALSE(st.latestMessage(u->hash, 0).has_value());
    }

    TEST(ProtocolState, EquivocatorHasNoLatestMessage) {
      ProtocolState st(3);
      auto p = unit(1, 0, {});
      auto a = unit(1, 1, {p->hash}, 1);
      auto b = unit(1, 1, {p->hash}, 2);
      auto u = unit(2, 0, {a->hash, b->hash});
      for (const auto &x : {p, a, b, u}) {
        st.insert(x);
      }
      EXPECT_FALSE(st.latestMessage(u->hash, 1).has_value());
    }

    TEST(Encoding, UnitRoundTrip) {
      auto p = unit(2, 0, {});
      UnitFields f;
      f.sender = 2;
      f.seq = 1;
      f.round_id = 30;
      f.timestamp = 31;
      f.kind = UnitKind::kProposal;
      f.citations = {p->hash};
      f.block = makeBlock(makeGenesis().hash, 0, {1, 2, 3}, 2, 30);
      auto u = makeUnit(f);
      BlockHash bh;
      auto back = decodeUnit(encodeUnit(*u), &bh);
      EXPECT_EQ(back.sender, 2U);
      EXPECT_EQ(back.seq, 1U);
      EXPECT_EQ(back.timestamp, 31);
      EXPECT_EQ(back.citations, f.citations);
      EXPECT_EQ(bh, f.block->hash);
      EXPECT_EQ(decodeBlock(encodeBlock(*f.block)), *f.block);
    }

    TEST(Encoding, CitationOrderDoesNotChangeHash) {
      auto a = unit(0, 0, {});
      auto b = unit(1, 0, {});
      EXPECT_EQ(unit(2, 0, {a->hash, b->hash})->hash, unit(2, 0, {b->hash, a->hash})->hash);
    }

    // Property: on random DAGs the incremental closed downsets agree with a
    // plain graph search, and evidence covers every forked pair.
    TEST(ProtocolState, RandomDagsMatchBruteForce) {
      for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 4;
        ProtocolState st(n);
        std::vector<UnitPtr> all;
        std::vector<std::uint64_t> seq(n, 0);
        for (int i = 0; i < 40; ++i) {
          auto s = static_cast<ValidatorId>(rng() % n);
          std::vector<UnitHash> cites;
          for (const auto &u : all) {
            if (rng() % 3 == 0) {
              cites.push_back(u->hash);
            }
          }
          auto u = unit(s, seq[s]++, cites, i);
          ASSERT_TRUE(st.insert(u).accepted());
          all.push_back(u);
        }
        for (std::size_t i = 0; i < all.size(); ++i) {
          std::set<UnitHash> reach;
          std::vector<UnitHash> stack(all[i]->citations);
          while (!stack.empty()) {
            auto h = stack.back();
            stack.pop_back();
            if (!reach.insert(h).second) {
              continue;
            }
            const auto &c = st.unit(st.require(h)).citations;
            stack.insert(stack.end(), c.begin(), c.end());
          }
          EXPECT_EQ(asSet(st.downset(all[i]->hash)), reach);
        }
        std::set<ValidatorId> forked;
        for (const auto &a : all) {
          for (const auto &b : all) {
            if (a->sender == b->sender && a != b && !st.justifies(a->hash, b->hash)
                && !st.justifies(b->hash, a->hash)) {
              forked.insert(a->sender);
            }
          }
        }
        EXPECT_EQ(st.equivocators(), forked);
      }
    }

    TEST(MaxAntichain, ChainAndFork) {
      ProtocolState st(2);
      auto p = unit(0, 0, {});
      auto a = unit(0, 1, {p->hash}, 1);
      auto b = unit(0, 1, {p->hash}, 2);
      auto c = unit(0, 1, {p->hash}, 3);
      for (const auto &x : {p, a, b, c}) {
        st.insert(x);
      }
      std::vector<std::size_t> chain{0, 1};
      std::vector<std::size_t> fork{0, 1, 2, 3};
      EXPECT_EQ(maxAntichain(st, chain), 1U);
      EXPECT_EQ(maxAntichain(st, fork), 3U);
    }

  }  // namespace
}  // namespace highway
