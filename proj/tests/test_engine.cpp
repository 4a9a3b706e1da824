/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <sstream>

#include "highway/sim.hpp"

namespace highway {
  namespace {

    ValidatorConfig config(ValidatorId id) {
      ValidatorConfig c;
      c.id = id;
      c.weights = WeightMap::uniform(4);
      c.round_length = 30;
      c.schedule.n = 4;
      return c;
    }

    std::vector<UnitPtr> unitsIn(const std::vector<Outbound> &out) {
      std::vector<UnitPtr> units;
      for (const auto &o : out) {
        if (o.msg.kind == Message::Kind::kUnit) {
          units.push_back(o.msg.unit);
        }
      }
      return units;
    }

    UnitPtr witness(ValidatorId sender, Tick ts) {
      UnitFields f;
      f.sender = sender;
      f.round_id = 0;
      f.timestamp = ts;
      return makeUnit(std::move(f));
    }

    TEST(LeaderSchedule, RoundRobin) {
      LeaderSchedule s{ScheduleKind::kRoundRobin, 0, 4};
      EXPECT_EQ(s.leader(6), 2U);
      EXPECT_EQ(s.leader(0), 0U);
    }

    TEST(LeaderSchedule, SeededIsDeterministicAndFair) {
      LeaderSchedule a{ScheduleKind::kSeeded, 42, 5};
      LeaderSchedule b{ScheduleKind::kSeeded, 42, 5};
      std::set<ValidatorId> seen;
      for (std::uint64_t r = 0; r < 200; ++r) {
        EXPECT_EQ(a.leader(r), b.leader(r));
        seen.insert(a.leader(r));
      }
      EXPECT_EQ(seen.size(), 5U);
    }

    TEST(Validator, LeaderProposesAtRoundStart) {
      Validator v(config(0), {}, nullptr);
      EXPECT_EQ(v.nextWakeup(), 0);
      auto units = unitsIn(v.onTimer(0));
      ASSERT_EQ(units.size(), 1U);
      EXPECT_EQ(units[0]->kind, UnitKind::kProposal);
      ASSERT_TRUE(units[0]->block.has_value());
      EXPECT_EQ(units[0]->block->height, 1U);
    }

    TEST(Validator, NonLeaderWitnessAtTwoThirds) {
      Validator v(config(1), {}, nullptr);
      EXPECT_TRUE(unitsIn(v.onTimer(0)).empty());
      EXPECT_EQ(v.nextWakeup(), 10);
      EXPECT_TRUE(unitsIn(v.onTimer(10)).empty());
      EXPECT_EQ(v.nextWakeup(), 20);
      auto units = unitsIn(v.onTimer(20));
      ASSERT_EQ(units.size(), 1U);
      EXPECT_EQ(units[0]->kind, UnitKind::kWitness);
      EXPECT_EQ(v.nextWakeup(), 30);
    }

    TEST(Validator, EarlyProposalIsConfirmedAtOnce) {
      Validator leader(config(0), {}, nullptr);
      Validator v(config(1), {}, nullptr);
      auto proposal = unitsIn(leader.onTimer(0)).at(0);
      v.onTimer(0);
      Message m;
      m.from = 0;
      m.unit = proposal;
      auto units = unitsIn(v.onMessage(m, 5));
      ASSERT_EQ(units.size(), 1U);
      EXPECT_EQ(units[0]->kind, UnitKind::kConfirmation);
      EXPECT_TRUE(std::binary_search(units[0]->citations.begin(), units[0]->citations.end(),
                                     proposal->hash));
    }

    TEST(Validator, EarlyNonLeaderUnitWaitsForDrain) {
      Validator v(config(1), {}, nullptr);
      v.onTimer(0);
      Message m;
      m.from = 2;
      m.unit = witness(2, 3);
      v.onMessage(m, 3);
      EXPECT_FALSE(v.view().state().contains(m.unit->hash));
      v.onTimer(10);
      EXPECT_TRUE(v.view().state().contains(m.unit->hash));
    }

    TEST(Validator, LateUnitEntersAtNextDrain) {
      Validator v(config(2), {}, nullptr);
      v.onTimer(0);
      v.onTimer(10);
      v.onTimer(20);
      Message m;
      m.from = 3;
      m.unit = witness(3, 27);
      v.onMessage(m, 27);
      v.onTimer(30);
      EXPECT_FALSE(v.view().state().contains(m.unit->hash));
      v.onTimer(40);
      EXPECT_TRUE(v.view().state().contains(m.unit->hash));
    }

    TEST(Validator, MiddleSlotUnitIsAddedImmediately) {
      Validator v(config(1), {}, nullptr);
      v.onTimer(0);
      v.onTimer(10);
      Message m;
      m.from = 2;
      m.unit = witness(2, 12);
      v.onMessage(m, 12);
      EXPECT_TRUE(v.view().state().contains(m.unit->hash));
    }

    Scenario honest(std::size_t n) {
      Scenario sc;
      sc.n = n;
      sc.delta = 10;
      sc.horizon = 60 * sc.roundLength();
      sc.thresholds = {0, 1};
      sc.seed = 5;
      return sc;
    }

    TEST(Engine, UnitBudgetPerRound) {
      auto sc = honest(4);
      Simulation sim(sc);
      sim.run();
      const auto rounds = static_cast<std::size_t>(sc.horizon / sc.roundLength());
      for (ValidatorId v = 0; v < 4; ++v) {
        const auto created = sim.validator(v).stats().units_created;
        // One witness per round, plus a proposal or confirmation.
        EXPECT_GE(created, rounds);
        EXPECT_LE(created, 2 * rounds);
      }
    }

    TEST(Engine, EraSwitchAtBoundaryHeight) {
      auto sc = honest(4);
      sc.era_length = 20;
      Simulation sim(sc, true);
      auto res = sim.run();
      for (ValidatorId v = 0; v < 4; ++v) {
        EXPECT_GE(sim.validator(v).era(), 1U);
      }
      Tick switched = -1;
      std::istringstream in(res.trace);
      for (std::string line; std::getline(in, line);) {
        if (line.find("\tera\t0\t") != std::string::npos) {
          switched = std::stoll(line.substr(0, line.find('\t')));
          break;
        }
      }
      ASSERT_GT(switched, 0);
      std::uint64_t top_era0 = 0;
      for (const auto &f : res.finals) {
        if (f.validator == 0 && f.threshold == 0 && f.tick <= switched) {
          top_era0 = std::max(top_era0, f.height);
        }
      }
      EXPECT_EQ(top_era0, 19U);
      EXPECT_NE(res.trace.find("\tera\t"), std::string::npos);
    }

    TEST(Engine, EquivocatorBannedInNextEra) {
      auto sc = honest(4);
      sc.era_length = 10;
      sc.adversaries.emplace_back(EquivocatorSpec{3, 1.0});
      Simulation sim(sc);
      sim.run();
      for (ValidatorId v = 0; v < 3; ++v) {
        ASSERT_GE(sim.validator(v).era(), 1U);
        EXPECT_TRUE(sim.validator(v).banned().contains(3));
      }
    }

  }  // namespace
}  // namespace highway
