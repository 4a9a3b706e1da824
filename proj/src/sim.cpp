/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/sim.hpp"

#include <algorithm>
#include <sstream>

namespace highway {

  namespace {
    template <typename... Ts>
    struct Overload : Ts... {
      using Ts::operator()...;
    };
    template <typename... Ts>
    Overload(Ts...) -> Overload<Ts...>;

    std::string joinIds(const std::vector<ValidatorId> &ids) {
      std::string s;
      for (auto v : ids) {
        if (!s.empty()) {
          s += ',';
        }
        s += std::to_string(v);
      }
      return s;
    }
  }  // namespace

  std::vector<ValidatorId> adversaryIds(const AdversarySpec &spec) {
    return std::visit(
        Overload{
            [](const ForkBombSpec &s) { return s.coalition; },
            [](const auto &s) { return std::vector<ValidatorId>{s.id}; },
        },
        spec);
  }

  std::string describe(const AdversarySpec &spec) {
    return std::visit(
        Overload{
            [](const EquivocatorSpec &s) {
              return "equivocator(" + std::to_string(s.id)
                     + ", rate=" + std::to_string(s.rate) + ")";
            },
            [](const CrashSpec &s) {
              return "crash(" + std::to_string(s.id)
                     + ", at=" + std::to_string(s.at) + ")";
            },
            [](const WithholderSpec &s) {
              return "withholder(" + std::to_string(s.id) + ", targets=["
                     + joinIds(s.targets) + "])";
            },
            [](const DelayerSpec &s) {
              return "delayer(" + std::to_string(s.id)
                     + ", extra=" + std::to_string(s.extra) + ")";
            },
            [](const ForkBombSpec &s) {
              return "fork_bomb([" + joinIds(s.coalition)
                     + "], depth=" + std::to_string(s.depth)
                     + ", waves=" + std::to_string(s.waves) + ")";
            },
        },
        spec);
  }

  WeightMap Scenario::weightMap() const {
    if (weights.empty()) {
      return WeightMap::uniform(n);
    }
    return WeightMap(weights);
  }

  Tick Scenario::roundLength() const {
    if (round_length > 0) {
      return round_length;
    }
    return endorsement == EndorsementMode::kOff ? 3 * delta : 6 * delta;
  }

  std::vector<Weight> Scenario::thresholdsFor(ValidatorId v) const {
    auto it = threshold_overrides.find(v);
    return it == threshold_overrides.end() ? thresholds : it->second;
  }

  std::vector<Weight> Scenario::allThresholds() const {
    std::set<Weight> all(thresholds.begin(), thresholds.end());
    for (const auto &[v, ts] : threshold_overrides) {
      all.insert(ts.begin(), ts.end());
    }
    return {all.begin(), all.end()};
  }

  std::vector<std::string> validate(const Scenario &s) {
    std::vector<std::string> problems;
    if (s.n < 1) {
      problems.emplace_back("n: must be at least 1");
    }
    if (!s.weights.empty() && s.weights.size() != s.n) {
      problems.emplace_back("weights: expected " + std::to_string(s.n) + " entries");
    }
    for (auto w : s.weights) {
      if (w <= 0) {
        problems.emplace_back("weights: entries must be positive");
        break;
      }
    }
    if (s.delta < 1) {
      problems.emplace_back("delta: must be at least 1");
    }
    if (s.gst < 0) {
      problems.emplace_back("gst: must be non-negative");
    }
    if (s.horizon < 1) {
      problems.emplace_back("horizon: must be positive");
    }
    if (s.min_delay < 1 || s.maxDelay() < s.min_delay) {
      problems.emplace_back("delay: need 1 <= min <= max");
    }
    if (!s.dynamic && s.maxDelay() >= s.delta) {
      problems.emplace_back("delay: post-GST delay must stay below delta");
    }
    if (s.max_pre_gst_delay < 1) {
      problems.emplace_back("max_pre_gst_delay: must be at least 1");
    }
    if (!s.dynamic && s.roundLength() < 3) {
      problems.emplace_back("round_length: must be at least 3");
    }
    if (s.dynamic) {
      const auto &d = *s.dynamic;
      if (d.n_min >= d.n_max || d.n_max > 40) {
        problems.emplace_back("rounds: need n_min < n_max <= 40");
      }
      if (!(0 < d.c_fail && d.c_fail < d.c_succ && d.c_succ < d.c)) {
        problems.emplace_back("rounds: need 0 < c_fail < c_succ < c");
      }
    }
    Weight total = 0;
    if (problems.empty()) {
      total = s.weightMap().total();
    }
    auto checkThresholds = [&](const std::vector<Weight> &ts, const std::string &key) {
      if (ts.empty()) {
        problems.push_back(key + ": must not be empty");
      }
      for (auto t : ts) {
        if (t < 0 || (total > 0 && t >= total)) {
          problems.push_back(key + ": " + std::to_string(t) + " outside [0, N)");
        }
      }
    };
    checkThresholds(s.thresholds, "thresholds");
    for (const auto &[v, ts] : s.threshold_overrides) {
      if (v >= s.n) {
        problems.push_back("thresholds." + std::to_string(v) + ": no such validator");
      }
      checkThresholds(ts, "thresholds." + std::to_string(v));
    }
    std::set<ValidatorId> used;
    for (const auto &a : s.adversaries) {
      for (auto v : adversaryIds(a)) {
        if (v >= s.n) {
          problems.push_back("adversary " + describe(a) + ": id out of range");
        } else if (!used.insert(v).second) {
          problems.push_back("adversary " + describe(a) + ": validator "
                             + std::to_string(v) + " already assigned");
        }
      }
      if (const auto *fb = std::get_if<ForkBombSpec>(&a)) {
        if (fb->depth == 0 || fb->coalition.size() != 2 * fb->depth) {
          problems.push_back("adversary " + describe(a)
                             + ": coalition must have 2*depth members");
        }
      }
      if (const auto *eq = std::get_if<EquivocatorSpec>(&a)) {
        if (eq->rate < 0 || eq->rate > 1) {
          problems.push_back("adversary " + describe(a) + ": rate outside [0, 1]");
        }
      }
    }
    return problems;
  }

  namespace {
    std::string joinProblems(const std::vector<std::string> &p) {
      std::string s = "invalid scenario:";
      for (const auto &x : p) {
        s += "\n  " + x;
      }
      return s;
    }
  }  // namespace

  InvalidScenario::InvalidScenario(const std::vector<std::string> &p)
      : std::invalid_argument(joinProblems(p)), problems(p) {}

  NetworkModel::NetworkModel(const Scenario &s, std::uint64_t seed)
      : delta_(s.delta),
        gst_(s.gst),
        max_pre_(s.max_pre_gst_delay),
        min_delay_(s.min_delay),
        max_delay_(s.maxDelay()),
        steps_(s.delay_steps),
        rng_(mix64(seed ^ 0x6e6574ULL)) {
    std::sort(steps_.begin(), steps_.end());
  }

  Tick NetworkModel::deliverTime(Tick send_tick) {
    if (send_tick < gst_) {
      std::uniform_int_distribution<Tick> d(1, max_pre_);
      return send_tick + d(rng_);
    }
    std::uniform_int_distribution<Tick> d(min_delay_, max_delay_);
    auto delay = d(rng_);
    double factor = 1.0;
    for (const auto &[at, f] : steps_) {
      if (send_tick >= at) {
        factor = f;
      }
    }
    if (factor != 1.0) {
      delay = std::max<Tick>(1, static_cast<Tick>(static_cast<double>(delay) * factor));
    }
    return send_tick + delay;
  }

  struct Simulation::Event {
    enum class Type { kTimer, kDeliver };
    Tick time = 0;
    std::uint64_t seq = 0;
    Type type = Type::kTimer;
    ValidatorId to = 0;
    Message msg;

    bool operator>(const Event &o) const {
      return std::tie(time, seq) > std::tie(o.time, o.seq);
    }
  };

  struct Simulation::Driver {
    std::optional<EquivocatorSpec> equivocator;
    std::optional<CrashSpec> crash;
    std::optional<WithholderSpec> withholder;
    std::optional<DelayerSpec> delayer;
    const ForkBombSpec *bomb = nullptr;  // set on the coordinator only
  };

  class Simulation::Trace final : public EventSink {
   public:
    Trace(bool keep, RunResult &result) : keep_(keep), result_(result) {}

    void line(const std::string &text) {
      hasher_.update(text);
      hasher_.update("\n");
      ++result_.trace_lines;
      if (keep_) {
        result_.trace += text;
        result_.trace += '\n';
      }
    }

    static std::string row(Tick tick,
                           const char *kind,
                           const std::string &sender,
                           const std::string &recipient,
                           const std::string &digest) {
      std::string s = std::to_string(tick);
      s += '\t';
      s += kind;
      s += '\t';
      s += sender;
      s += '\t';
      s += recipient;
      s += '\t';
      s += digest;
      return s;
    }

    void unitCreated(Tick t, ValidatorId v, const Unit &u) override {
      auto s = row(t, "create", std::to_string(v), "-", u.hash.hex());
      s += '\t' + toHex(encodeUnit(u)) + '\t' + std::to_string(u.era) + '\t';
      s += u.block ? toHex(encodeBlock(*u.block)) : std::string("-");
      line(s);
    }
    void unitAdded(Tick t, ValidatorId v, const Unit &u) override {
      line(row(t, "add", std::to_string(u.sender), std::to_string(v), u.hash.hex()));
    }
    void unitDropped(Tick t, ValidatorId v, const Unit &u, const char *why) override {
      line(row(t, "drop", std::to_string(u.sender), std::to_string(v), u.hash.hex())
           + '\t' + why);
    }
    void lncParked(Tick t, ValidatorId v, const Unit &u) override {
      line(row(t, "lnc", std::to_string(u.sender), std::to_string(v), u.hash.hex()));
    }
    void endorsed(Tick t, ValidatorId v, const Endorsement &e) override {
      line(row(t, "endorse", std::to_string(v), "-", e.target.hex()));
    }
    void finalized(Tick t, ValidatorId v, Weight th, const Block &b) override {
      line(row(t, "final", std::to_string(v), "-", b.hash.hex()) + '\t'
           + std::to_string(th) + '\t' + std::to_string(b.height));
      result_.finals.push_back(FinalRecord{t, v, th, b.height, b.hash, b.slot});
    }
    void exponentChanged(Tick t, ValidatorId v, unsigned e) override {
      line(row(t, "exp", std::to_string(v), "-", "-") + '\t' + std::to_string(e));
      result_.exponents.at(v).emplace_back(t, e);
    }
    void eraStarted(Tick t, ValidatorId v, std::uint32_t era, const Block &g) override {
      line(row(t, "era", std::to_string(v), "-", g.hash.hex()) + '\t'
           + std::to_string(era));
    }
    void modeChanged(Tick t, ValidatorId v, bool cautious) override {
      line(row(t, "mode", std::to_string(v), "-", "-") + '\t'
           + (cautious ? "cautious" : "relaxed"));
    }

    Digest digest() const {
      return hasher_.finish();
    }

   private:
    bool keep_;
    RunResult &result_;
    Hasher hasher_;
  };

  Simulation::Simulation(Scenario scenario, bool keep_trace)
      : scenario_(std::move(scenario)), keep_trace_(keep_trace) {
    auto problems = validate(scenario_);
    if (!problems.empty()) {
      throw InvalidScenario(problems);
    }
    const auto n = scenario_.n;
    result_.exponents.resize(n);
    trace_ = std::make_unique<Trace>(keep_trace_, result_);
    net_ = std::make_unique<NetworkModel>(scenario_, scenario_.seed);
    adversary_rng_.seed(mix64(scenario_.seed ^ 0x616476ULL));
    roles_.assign(n, Role::kHonest);
    crashed_.assign(n, false);
    drivers_.resize(n);
    for (auto &d : drivers_) {
      d = std::make_unique<Driver>();
    }
    for (const auto &a : scenario_.adversaries) {
      std::visit(Overload{
                     [&](const EquivocatorSpec &s) {
                       roles_[s.id] = Role::kByzantine;
                       drivers_[s.id]->equivocator = s;
                     },
                     [&](const CrashSpec &s) {
                       roles_[s.id] = Role::kCrash;
                       drivers_[s.id]->crash = s;
                     },
                     [&](const WithholderSpec &s) {
                       roles_[s.id] = Role::kByzantine;
                       drivers_[s.id]->withholder = s;
                     },
                     [&](const DelayerSpec &s) {
                       roles_[s.id] = Role::kByzantine;
                       drivers_[s.id]->delayer = s;
                     },
                     [&](const ForkBombSpec &s) {
                       for (auto v : s.coalition) {
                         roles_[v] = Role::kByzantine;
                       }
                       drivers_[s.coalition.front()]->bomb = &s;
                     },
                 },
                 a);
    }

    auto weights = scenario_.weightMap();
    auto resolver = [this](UnitHash h) { return lookup(h); };
    for (ValidatorId v = 0; v < n; ++v) {
      ValidatorConfig cfg;
      cfg.id = v;
      cfg.weights = weights;
      cfg.thresholds = scenario_.thresholdsFor(v);
      cfg.endorsement = scenario_.endorsement;
      cfg.schedule = scenario_.schedule;
      cfg.schedule.n = n;
      cfg.round_length = scenario_.roundLength();
      cfg.dynamic = scenario_.dynamic;
      cfg.era_length = scenario_.era_length;
      cfg.lnc_buffer_cap = scenario_.lnc_buffer_cap;
      validators_.push_back(std::make_unique<Validator>(cfg, resolver, trace_.get()));
    }

    auto joined = [&](auto pred) {
      std::vector<ValidatorId> ids;
      for (ValidatorId v = 0; v < n; ++v) {
        if (pred(v)) {
          ids.push_back(v);
        }
      }
      return joinIds(ids);
    };
    std::string weights_text;
    for (auto w : weights.values()) {
      weights_text += (weights_text.empty() ? "" : ",") + std::to_string(w);
    }
    std::string thresholds_text;
    for (auto t : scenario_.allThresholds()) {
      thresholds_text += (thresholds_text.empty() ? "" : ",") + std::to_string(t);
    }
    trace_->line("#\thighway-trace\t1");
    trace_->line("#\tn\t" + std::to_string(n));
    trace_->line("#\tweights\t" + weights_text);
    trace_->line("#\tbyzantine\t"
                 + joined([&](ValidatorId v) { return roles_[v] == Role::kByzantine; }));
    trace_->line("#\tcrash\t"
                 + joined([&](ValidatorId v) { return roles_[v] == Role::kCrash; }));
    trace_->line("#\tthresholds\t" + thresholds_text);
    trace_->line("#\tera_length\t" + std::to_string(scenario_.era_length));
    trace_->line("#\tseed\t" + std::to_string(scenario_.seed));
    trace_->line("#\tgenesis\t" + makeGenesis(0).hash.hex());
  }

  Simulation::~Simulation() = default;

  std::size_t Simulation::faultCount() const {
    return static_cast<std::size_t>(
        std::count(roles_.begin(), roles_.end(), Role::kByzantine));
  }

  std::size_t Simulation::crashCount() const {
    return static_cast<std::size_t>(
        std::count(roles_.begin(), roles_.end(), Role::kCrash));
  }

  UnitPtr Simulation::lookup(UnitHash h) const {
    auto it = registry_.find(h);
    return it == registry_.end() ? nullptr : it->second;
  }

  void Simulation::registerUnit(const UnitPtr &u) {
    registry_.emplace(u->hash, u);
  }

  void Simulation::schedule(Event ev) {
    ev.seq = next_seq_++;
    queue_.push_back(std::move(ev));
    std::push_heap(queue_.begin(), queue_.end(), std::greater<>{});
  }

  void Simulation::send(ValidatorId from, ValidatorId to, const Message &msg, Tick now) {
    auto at = now;
    if (drivers_[from]->delayer) {
      at += drivers_[from]->delayer->extra;
    }
    auto arrive = net_->deliverTime(at);
    if (roles_[from] != Role::kByzantine && at >= scenario_.gst) {
      result_.max_post_gst_delay = std::max(result_.max_post_gst_delay, arrive - at);
    }
    ++result_.sends;
    Event ev;
    ev.time = arrive;
    ev.type = Event::Type::kDeliver;
    ev.to = to;
    ev.msg = msg;
    schedule(std::move(ev));
  }

  void Simulation::dispatch(ValidatorId from, std::vector<Outbound> out, Tick now) {
    const auto &drv = *drivers_[from];
    const auto n = static_cast<ValidatorId>(validators_.size());
    for (auto &o : out) {
      std::vector<ValidatorId> to;
      if (o.to) {
        to.push_back(*o.to);
      } else {
        for (ValidatorId v = 0; v < n; ++v) {
          if (v != from) {
            to.push_back(v);
          }
        }
      }
      if (o.msg.kind != Message::Kind::kUnit) {
        for (auto v : to) {
          send(from, v, o.msg, now);
        }
        continue;
      }
      registerUnit(o.msg.unit);
      if (drv.withholder) {
        const auto &hidden = drv.withholder->targets;
        std::erase_if(to, [&](ValidatorId v) {
          return std::find(hidden.begin(), hidden.end(), v) != hidden.end();
        });
      }
      std::optional<Message> twin;
      if (drv.equivocator) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(adversary_rng_) < drv.equivocator->rate) {
          const auto &u = *o.msg.unit;
          UnitFields f;
          f.sender = u.sender;
          f.seq = u.seq;
          f.round_id = u.round_id;
          f.timestamp = u.timestamp;
          f.kind = u.kind;
          f.citations = u.citations;
          f.era = u.era;
          if (u.block) {
            auto payload = u.block->payload;
            payload.push_back(0xee);
            f.block = makeBlock(*u.block->parent, u.block->height - 1,
                                std::move(payload), u.sender, u.block->slot);
          } else {
            f.timestamp += 1;
          }
          auto t = makeUnit(std::move(f));
          registerUnit(t);
          trace_->unitCreated(now, from, *t);
          twin = o.msg;
          twin->unit = t;
        }
      }
      for (std::size_t i = 0; i < to.size(); ++i) {
        bool second_half = twin && i >= to.size() / 2;
        send(from, to[i], second_half ? *twin : o.msg, second_half && !o.msg.unit->block
                                                          ? now + 1
                                                          : now);
      }
    }
  }

  void Simulation::forkBombs(Tick now) {
    for (ValidatorId c = 0; c < drivers_.size(); ++c) {
      const auto *spec = drivers_[c]->bomb;
      if (spec == nullptr || crashed_[c]) {
        continue;
      }
      const auto &coord = *validators_[c];
      if (coord.roundStart() != now) {
        continue;
      }
      std::vector<UnitHash> base;
      for (auto i : coord.view().state().maximalUnits()) {
        base.push_back(coord.view().state().unit(i).hash);
      }
      std::vector<std::uint64_t> seqs;
      for (auto v : spec->coalition) {
        seqs.push_back(validators_[v]->nextSeq());
      }
      for (std::size_t w = 0; w < spec->waves; ++w) {
        auto units = forkBomb(spec->coalition, spec->depth, base,
                              now + static_cast<Tick>(w) + 1, now, seqs);
        for (auto &u : units) {
          auto copy = std::make_shared<Unit>(*u);
          copy->era = coord.era();
          registerUnit(copy);
          trace_->unitCreated(now, copy->sender, *copy);
          ++result_.bomb_units;
          u = copy;
        }
        // Only the two top units are pushed; the rest travel as downsets.
        for (auto it = units.end() - 2; it != units.end(); ++it) {
          Message m;
          m.kind = Message::Kind::kUnit;
          m.from = (*it)->sender;
          m.era = coord.era();
          m.unit = *it;
          for (ValidatorId v = 0; v < validators_.size(); ++v) {
            if (roles_[v] != Role::kByzantine) {
              send((*it)->sender, v, m, now);
            }
          }
        }
      }
    }
  }

  RunResult Simulation::run() {
    for (ValidatorId v = 0; v < validators_.size(); ++v) {
      Event ev;
      ev.time = validators_[v]->nextWakeup();
      ev.type = Event::Type::kTimer;
      ev.to = v;
      schedule(std::move(ev));
    }
    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), std::greater<>{});
      auto ev = std::move(queue_.back());
      queue_.pop_back();
      if (ev.time >= scenario_.horizon) {
        break;
      }
      const auto v = ev.to;
      if (const auto &c = drivers_[v]->crash; c && ev.time >= c->at) {
        crashed_[v] = true;
      }
      if (crashed_[v]) {
        continue;
      }
      auto &val = *validators_[v];
      if (ev.type == Event::Type::kTimer) {
        if (probe_) {
          probe_(ev.time, v);
        }
        auto out = val.onTimer(ev.time);
        dispatch(v, std::move(out), ev.time);
        if (drivers_[v]->bomb != nullptr) {
          forkBombs(ev.time);
        }
        Event next;
        next.time = val.nextWakeup();
        next.type = Event::Type::kTimer;
        next.to = v;
        schedule(std::move(next));
      } else {
        ++result_.deliveries;
        auto out = val.onMessage(ev.msg, ev.time);
        dispatch(v, std::move(out), ev.time);
      }
    }
    for (ValidatorId v = 0; v < validators_.size(); ++v) {
      if (probe_ && !crashed_[v]) {
        probe_(scenario_.horizon, v);
      }
    }
    for (ValidatorId v = 0; v < validators_.size(); ++v) {
      for (auto t : scenario_.allThresholds()) {
        const auto &cfg = validators_[v]->config().thresholds;
        if (std::find(cfg.begin(), cfg.end(), t) == cfg.end()) {
          continue;
        }
        const auto &chain = validators_[v]->finalized(t);
        trace_->line("summary\t" + std::to_string(v) + "\t" + std::to_string(t) + "\t"
                     + std::to_string(chain.back().height) + "\t"
                     + chain.back().hash.hex());
      }
    }
    result_.digest = trace_->digest();
    return std::move(result_);
  }

}  // namespace highway
