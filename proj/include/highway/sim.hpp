/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "highway/engine.hpp"

namespace highway {

  struct EquivocatorSpec {
    ValidatorId id = 0;
    double rate = 1.0;
  };
  struct CrashSpec {
    ValidatorId id = 0;
    Tick at = 0;
  };
  struct WithholderSpec {
    ValidatorId id = 0;
    std::vector<ValidatorId> targets;  ///< recipients that never get its units
  };
  struct DelayerSpec {
    ValidatorId id = 0;
    Tick extra = 0;
  };
  struct ForkBombSpec {
    std::vector<ValidatorId> coalition;
    std::size_t depth = 1;
    std::size_t waves = 1;  ///< bombs per coordinator round
  };

  using AdversarySpec = std::variant<EquivocatorSpec,
                                     CrashSpec,
                                     WithholderSpec,
                                     DelayerSpec,
                                     ForkBombSpec>;

  std::vector<ValidatorId> adversaryIds(const AdversarySpec &spec);
  std::string describe(const AdversarySpec &spec);

  struct Scenario {
    std::size_t n = 4;
    std::vector<Weight> weights;  ///< empty means all ones
    Tick delta = 10;
    Tick gst = 0;
    Tick horizon = 1000;
    std::uint64_t era_length = 1000;
    /// Fixed round length; 0 means 3Δ, or 6Δ with endorsements on.
    Tick round_length = 0;
    std::optional<DynamicRounds> dynamic;
    EndorsementMode endorsement = EndorsementMode::kOff;
    std::vector<Weight> thresholds{0};
    std::map<ValidatorId, std::vector<Weight>> threshold_overrides;
    std::vector<AdversarySpec> adversaries;
    std::uint64_t seed = 0;
    LeaderSchedule schedule;
    Tick max_pre_gst_delay = 50;
    Tick min_delay = 1;
    Tick max_delay = 0;  ///< 0 means Δ − 1
    /// From tick .first on, post-GST delays are multiplied by .second.
    std::vector<std::pair<Tick, double>> delay_steps;
    std::size_t lnc_buffer_cap = 4096;

    WeightMap weightMap() const;
    Tick roundLength() const;
    Tick maxDelay() const {
      return max_delay > 0 ? max_delay : delta - 1;
    }
    std::vector<Weight> thresholdsFor(ValidatorId v) const;
    /// Every threshold used by any validator, ascending.
    std::vector<Weight> allThresholds() const;
  };

  /// Returns human-readable problems; empty when the scenario is valid.
  std::vector<std::string> validate(const Scenario &scenario);

  class InvalidScenario : public std::invalid_argument {
   public:
    explicit InvalidScenario(const std::vector<std::string> &problems);
    std::vector<std::string> problems;
  };

  enum class Role { kHonest, kCrash, kByzantine };

  struct FinalRecord {
    Tick tick = 0;
    ValidatorId validator = 0;
    Weight threshold = 0;
    std::uint64_t height = 0;
    BlockHash block;
    Tick proposed = 0;  ///< slot of the block
  };

  struct RunResult {
    std::string trace;  ///< empty unless requested
    Digest digest;
    std::size_t trace_lines = 0;
    std::vector<FinalRecord> finals;
    std::vector<std::vector<std::pair<Tick, unsigned>>> exponents;
    std::size_t sends = 0;
    std::size_t deliveries = 0;
    Tick max_post_gst_delay = 0;
    std::size_t bomb_units = 0;
  };

  /// Deterministic delivery schedule for the partially synchronous model.
  class NetworkModel {
   public:
    NetworkModel(const Scenario &scenario, std::uint64_t seed);
    /// Arrival tick for a message sent at send_tick.
    Tick deliverTime(Tick send_tick);

   private:
    Tick delta_;
    Tick gst_;
    Tick max_pre_;
    Tick min_delay_;
    Tick max_delay_;
    std::vector<std::pair<Tick, double>> steps_;
    std::mt19937_64 rng_;
  };

  class Simulation {
   public:
    explicit Simulation(Scenario scenario, bool keep_trace = false);
    ~Simulation();

    RunResult run();

    const Scenario &scenario() const {
      return scenario_;
    }
    std::size_t size() const {
      return validators_.size();
    }
    const Validator &validator(ValidatorId v) const {
      return *validators_.at(v);
    }
    Role role(ValidatorId v) const {
      return roles_.at(v);
    }
    /// Byzantine count (crashes excluded).
    std::size_t faultCount() const;
    std::size_t crashCount() const;
    UnitPtr lookup(UnitHash h) const;
    bool crashed(ValidatorId v) const {
      return crashed_.at(v);
    }

    /// Called before every timer event of a live validator and once per
    /// live validator when the run ends. Read-only inspection point.
    using Probe = std::function<void(Tick, ValidatorId)>;
    void setProbe(Probe probe) {
      probe_ = std::move(probe);
    }

   private:
    struct Event;
    struct Driver;
    class Trace;

    void dispatch(ValidatorId from, std::vector<Outbound> out, Tick now);
    void send(ValidatorId from, ValidatorId to, const Message &msg, Tick now);
    void schedule(Event ev);
    void registerUnit(const UnitPtr &u);
    void forkBombs(Tick now);

    Scenario scenario_;
    bool keep_trace_;
    std::vector<std::unique_ptr<Validator>> validators_;
    std::vector<Role> roles_;
    std::vector<std::unique_ptr<Driver>> drivers_;
    std::unordered_map<UnitHash, UnitPtr> registry_;
    std::unique_ptr<Trace> trace_;
    std::unique_ptr<NetworkModel> net_;
    std::mt19937_64 adversary_rng_;
    std::vector<Event> queue_;
    std::uint64_t next_seq_ = 0;
    RunResult result_;
    std::vector<bool> crashed_;
    Probe probe_;
  };

}  // namespace highway
