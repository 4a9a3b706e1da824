/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include "highway/checker.hpp"
#include "highway/report.hpp"
#include "highway/scenario_file.hpp"

namespace highway {
  namespace {

    Scenario honest4() {
      Scenario sc;
      sc.n = 4;
      sc.delta = 10;
      sc.horizon = 60 * sc.roundLength();
      sc.thresholds = {0, 1};
      sc.seed = 1;
      return sc;
    }

    /// Inserts a line just before the summary block.
    std::string forge(const std::string &trace, const std::string &line) {
      auto at = trace.find("\nsummary");
      return trace.substr(0, at + 1) + line + "\n" + trace.substr(at + 1);
    }

    TEST(Network, PostGstDelayBounds) {
      Scenario sc = honest4();
      NetworkModel net(sc, 9);
      for (int i = 0; i < 1000; ++i) {
        auto t = net.deliverTime(5);
        EXPECT_GE(t, 6);
        EXPECT_LE(t, 14);
      }
    }

    TEST(Network, PreGstDelayBounded) {
      Scenario sc = honest4();
      sc.gst = 500;
      sc.max_pre_gst_delay = 80;
      NetworkModel net(sc, 9);
      for (int i = 0; i < 1000; ++i) {
        auto t = net.deliverTime(499);
        EXPECT_GT(t, 499);
        EXPECT_LE(t, 499 + 80);
      }
    }

    TEST(Network, SameSeedSameArrivals) {
      Scenario sc = honest4();
      sc.gst = 100;
      NetworkModel a(sc, 4);
      NetworkModel b(sc, 4);
      for (Tick t = 0; t < 300; t += 7) {
        EXPECT_EQ(a.deliverTime(t), b.deliverTime(t));
      }
    }

    TEST(Network, DelayStepScalesDelays) {
      Scenario sc = honest4();
      sc.min_delay = 5;
      sc.max_delay = 5;
      sc.delay_steps = {{100, 2.0}};
      NetworkModel net(sc, 1);
      EXPECT_EQ(net.deliverTime(50), 55);
      EXPECT_EQ(net.deliverTime(150), 160);
    }

    TEST(Scenario, ValidationErrors) {
      Scenario sc = honest4();
      sc.n = 0;
      EXPECT_FALSE(validate(sc).empty());
      sc = honest4();
      sc.adversaries.emplace_back(CrashSpec{7, 10});
      EXPECT_FALSE(validate(sc).empty());
      sc = honest4();
      sc.weights = {1, 2};
      EXPECT_FALSE(validate(sc).empty());
      EXPECT_TRUE(validate(honest4()).empty());
      sc.delta = 0;
      EXPECT_THROW(Simulation{sc}, InvalidScenario);
    }

    TEST(Simulation, HonestChainsAgree) {
      Simulation sim(honest4());
      sim.run();
      for (Weight t : {0, 1}) {
        const auto &ref = sim.validator(0).finalized(t);
        EXPECT_GT(ref.size(), 10U);
        for (ValidatorId v = 1; v < 4; ++v) {
          EXPECT_EQ(sim.validator(v).finalized(t), ref) << "validator " << v << " t " << t;
        }
      }
    }

    TEST(Simulation, DeterministicDigest) {
      auto sc = honest4();
      sc.adversaries.emplace_back(EquivocatorSpec{3, 0.5});
      sc.gst = 200;
      Simulation a(sc, true);
      Simulation b(sc, true);
      auto ra = a.run();
      auto rb = b.run();
      EXPECT_EQ(ra.digest, rb.digest);
      EXPECT_EQ(ra.trace, rb.trace);
      sc.seed = 2;
      Simulation c(sc);
      EXPECT_NE(c.run().digest, ra.digest);
    }

    TEST(Simulation, CrashCountsAsCrashNotByzantine) {
      auto sc = honest4();
      sc.adversaries.emplace_back(CrashSpec{2, 105});
      Simulation sim(sc);
      EXPECT_EQ(sim.faultCount(), 0U);
      EXPECT_EQ(sim.crashCount(), 1U);
      EXPECT_EQ(sim.role(2), Role::kCrash);
      sim.run();
      EXPECT_TRUE(sim.crashed(2));
      EXPECT_FALSE(sim.crashed(1));
    }

    TEST(Simulation, PostGstDelaysRespectDelta) {
      auto sc = honest4();
      sc.gst = 300;
      sc.max_pre_gst_delay = 60;
      Simulation sim(sc);
      auto r = sim.run();
      EXPECT_LE(r.max_post_gst_delay, sc.delta);
    }

    TEST(ScenarioFile, ParsesAllKeys) {
      auto sc = parseScenario(R"(# comment
n = 5
weights = [1, 1, 2, 1, 1]
delta = 20
gst = 100
horizon = 4000
era_length = 50
endorsements = refined
rounds = fixed(length=90)
thresholds = [0, 1]
thresholds.2 = [0]
adversary = equivocator(4, rate=0.5)
adversary = crash(3, at=700)
adversary = withholder(1, targets=[0, 2])
seed = 17
schedule = seeded(3)
delay = [2, 15]
delay_step = (1000, 1.5)
)");
      EXPECT_EQ(sc.n, 5U);
      EXPECT_EQ(sc.weights, (std::vector<Weight>{1, 1, 2, 1, 1}));
      EXPECT_EQ(sc.roundLength(), 90);
      EXPECT_EQ(sc.endorsement, EndorsementMode::kRefined);
      EXPECT_EQ(sc.adversaries.size(), 3U);
      EXPECT_EQ(sc.thresholdsFor(2), std::vector<Weight>{0});
      EXPECT_EQ(sc.schedule.kind, ScheduleKind::kSeeded);
      EXPECT_EQ(sc.min_delay, 2);
      EXPECT_EQ(sc.max_delay, 15);
      ASSERT_EQ(sc.delay_steps.size(), 1U);
      EXPECT_DOUBLE_EQ(sc.delay_steps[0].second, 1.5);
      auto again = parseScenario(formatScenario(sc));
      EXPECT_EQ(formatScenario(again), formatScenario(sc));
    }

    TEST(ScenarioFile, MissingDeltaNamesField) {
      try {
        parseScenario("n = 4\nhorizon = 100\n");
        FAIL() << "expected a parse error";
      } catch (const ParseError &e) {
        EXPECT_EQ(e.field, "delta");
      }
    }

    TEST(ScenarioFile, ErrorsCarryLineNumbers) {
      try {
        parseScenario("n = 4\ndelta = 10\nhorizon = oops\n");
        FAIL() << "expected a parse error";
      } catch (const ParseError &e) {
        EXPECT_EQ(e.line, 3U);
        EXPECT_EQ(e.field, "horizon");
      }
      EXPECT_THROW(parseScenario("n = 4\nn = 5\ndelta = 1\nhorizon = 9\n"), ParseError);
      EXPECT_THROW(parseScenario("n = 4\ndelta = 10\nhorizon = 100\nbogus = 1\n"), ParseError);
    }

    TEST(ScenarioFile, DynamicRounds) {
      auto sc = parseScenario(
          "n = 4\ndelta = 10\nhorizon = 100\n"
          "rounds = dynamic(n_min=4, n_max=9, t0=0.25, c_fail=10, c_succ=32, c=40, d=3)\n");
      ASSERT_TRUE(sc.dynamic.has_value());
      EXPECT_EQ(sc.dynamic->n_max, 9U);
      EXPECT_EQ(sc.dynamic->t0, 0);
    }

    TEST(Checker, CleanHonestTrace) {
      Simulation sim(honest4(), true);
      auto res = sim.run();
      auto rep = checkTrace(res.trace, {0, 1, 2, 3});
      EXPECT_TRUE(rep.clean());
      EXPECT_TRUE(rep.violations.empty());
      EXPECT_EQ(rep.recorded_mismatches, 0U);
      EXPECT_EQ(rep.fault_weight, 0);
      // Replay matches what the validators recorded themselves.
      const auto &live = sim.validator(2).finalized(1);
      const auto &replayed = rep.chains.at({2, 1});
      ASSERT_EQ(replayed.size(), live.size());
      for (std::size_t i = 0; i < live.size(); ++i) {
        EXPECT_EQ(replayed[i].block, live[i].hash);
      }
    }

    TEST(Checker, ForgedDoubleFinalizationIsFlagged) {
      Simulation sim(honest4(), true);
      auto res = sim.run();
      auto bogus = makeBlock(makeGenesis().hash, 0, {0xbb}, 1, 0);
      auto forged = forge(res.trace, std::to_string(sim.scenario().horizon - 1) + "\tfinal\t1\t-\t"
                                         + bogus.hash.hex() + "\t0\t1");
      auto rep = checkTrace(forged, {0});
      EXPECT_FALSE(rep.clean());
      EXPECT_EQ(rep.recorded_mismatches, 1U);
    }

    TEST(Checker, ForkBelowFaultWeightIsPermitted) {
      auto sc = honest4();
      sc.adversaries.emplace_back(EquivocatorSpec{3, 1.0});
      Simulation sim(sc, true);
      auto res = sim.run();
      auto bogus = makeBlock(makeGenesis().hash, 0, {0xbb}, 1, 0);
      auto forged = forge(res.trace, std::to_string(sc.horizon - 1) + "\tfinal\t1\t-\t"
                                         + bogus.hash.hex() + "\t0\t1");
      auto rep = checkTrace(forged, {0});
      EXPECT_EQ(rep.fault_weight, 1);
      ASSERT_FALSE(rep.violations.empty());
      EXPECT_FALSE(rep.violations[0].fatal);
      EXPECT_TRUE(rep.clean());
    }

    TEST(Checker, CorruptTraceRejected) {
      EXPECT_THROW(checkTrace("garbage\n", {0}), CorruptTrace);
      Simulation sim(honest4(), true);
      auto res = sim.run();
      auto broken = forge(res.trace, "0\tadd\t1\t-\t" + std::string(16, 'a'));
      EXPECT_THROW(checkTrace(broken, {0}), CorruptTrace);
    }

    TEST(Checker, ThresholdsNeedNoResimulation) {
      Simulation sim(honest4(), true);
      auto res = sim.run();
      auto a = checkTrace(res.trace, {0});
      auto b = checkTrace(res.trace, {2, 3});
      EXPECT_TRUE(a.chains.contains({0, 0}));
      EXPECT_TRUE(b.chains.contains({0, 3}));
      EXPECT_LE(b.chains.at({0, 3}).size(), a.chains.at({0, 0}).size());
    }

    TEST(Report, JsonLinesAndText) {
      Simulation sim(honest4(), true);
      auto res = sim.run();
      auto chk = checkTrace(res.trace, sim.scenario().allThresholds());
      auto rep = buildReport(sim, res, chk);
      EXPECT_NE(rep.text.find("validator"), std::string::npos);
      EXPECT_NE(rep.jsonl.find("\"kind\":\"verdict\""), std::string::npos);
      EXPECT_NE(rep.jsonl.find("\"kind\":\"run\""), std::string::npos);
    }

  }  // namespace
}  // namespace highway
