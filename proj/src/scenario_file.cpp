/**
 * Copyright Highway Sim Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "highway/scenario_file.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace highway {

  namespace {
    struct Value {
      enum class Kind { kInt, kFloat, kIdent, kList, kTuple, kCall };
      Kind kind = Kind::kInt;
      std::int64_t i = 0;
      double f = 0;
      std::string s;
      std::vector<Value> items;
      std::vector<std::pair<std::string, Value>> named;
    };

    class ValueParser {
     public:
      ValueParser(std::string_view text, std::size_t line, std::string field)
          : text_(text), line_(line), field_(std::move(field)) {}

      Value parseAll() {
        auto v = parse();
        skipSpace();
        if (pos_ != text_.size()) {
          fail("unexpected '" + std::string(text_.substr(pos_)) + "'");
        }
        return v;
      }

     private:
      [[noreturn]] void fail(const std::string &msg) const {
        throw ParseError(line_, field_, msg);
      }

      void skipSpace() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
      }

      bool eat(char c) {
        skipSpace();
        if (pos_ < text_.size() && text_[pos_] == c) {
          ++pos_;
          return true;
        }
        return false;
      }

      std::string ident() {
        skipSpace();
        auto start = pos_;
        while (pos_ < text_.size()
               && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
      }

      std::vector<Value> items(char close, std::vector<std::pair<std::string, Value>> *named) {
        std::vector<Value> out;
        if (eat(close)) {
          return out;
        }
        for (;;) {
          skipSpace();
          auto save = pos_;
          auto name = ident();
          if (named != nullptr && !name.empty() && eat('=')) {
            named->emplace_back(name, parse());
          } else {
            pos_ = save;
            if (named != nullptr && !named->empty()) {
              fail("positional argument after named argument");
            }
            out.push_back(parse());
          }
          if (eat(close)) {
            return out;
          }
          if (!eat(',')) {
            fail(std::string("expected ',' or '") + close + "'");
          }
        }
      }

      Value parse() {
        skipSpace();
        if (pos_ >= text_.size()) {
          fail("missing value");
        }
        Value v;
        char c = text_[pos_];
        if (c == '[') {
          ++pos_;
          v.kind = Value::Kind::kList;
          v.items = items(']', nullptr);
          return v;
        }
        if (c == '(') {
          ++pos_;
          v.kind = Value::Kind::kTuple;
          v.items = items(')', nullptr);
          return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
          auto start = pos_;
          ++pos_;
          while (pos_ < text_.size()
                 && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'
                     || text_[pos_] == '_')) {
            ++pos_;
          }
          std::string tok(text_.substr(start, pos_ - start));
          std::erase(tok, '_');
          try {
            std::size_t used = 0;
            if (tok.find_first_of(".eE") != std::string::npos) {
              v.kind = Value::Kind::kFloat;
              v.f = std::stod(tok, &used);
            } else {
              v.kind = Value::Kind::kInt;
              v.i = std::stoll(tok, &used);
            }
            if (used != tok.size()) {
              fail("bad number '" + tok + "'");
            }
          } catch (const std::logic_error &) {
            fail("bad number '" + tok + "'");
          }
          return v;
        }
        auto name = ident();
        if (name.empty()) {
          fail(std::string("unexpected '") + c + "'");
        }
        v.s = name;
        if (eat('(')) {
          v.kind = Value::Kind::kCall;
          v.items = items(')', &v.named);
        } else {
          v.kind = Value::Kind::kIdent;
        }
        return v;
      }

      std::string_view text_;
      std::size_t pos_ = 0;
      std::size_t line_;
      std::string field_;
    };

    struct Ctx {
      std::size_t line;
      std::string field;

      [[noreturn]] void fail(const std::string &msg) const {
        throw ParseError(line, field, msg);
      }

      std::int64_t integer(const Value &v, std::int64_t lo = 0) const {
        if (v.kind != Value::Kind::kInt) {
          fail("expected an integer");
        }
        if (v.i < lo) {
          fail("must be at least " + std::to_string(lo));
        }
        return v.i;
      }
      double number(const Value &v) const {
        if (v.kind == Value::Kind::kInt) {
          return static_cast<double>(v.i);
        }
        if (v.kind != Value::Kind::kFloat) {
          fail("expected a number");
        }
        return v.f;
      }
      const std::string &identifier(const Value &v) const {
        if (v.kind != Value::Kind::kIdent) {
          fail("expected a name");
        }
        return v.s;
      }
      std::vector<std::int64_t> intList(const Value &v) const {
        if (v.kind != Value::Kind::kList) {
          fail("expected a [list]");
        }
        std::vector<std::int64_t> out;
        for (const auto &x : v.items) {
          out.push_back(integer(x));
        }
        return out;
      }
    };

    /// Positional and named arguments of a call, matched against a
    /// parameter list.
    struct Args {
      const Ctx &ctx;
      std::vector<const Value *> slots;

      Args(const Ctx &c, const Value &call, const std::vector<std::string> &params)
          : ctx(c), slots(params.size(), nullptr) {
        if (call.items.size() > params.size()) {
          ctx.fail(call.s + ": too many arguments");
        }
        for (std::size_t i = 0; i < call.items.size(); ++i) {
          slots[i] = &call.items[i];
        }
        for (const auto &[name, val] : call.named) {
          std::size_t i = 0;
          while (i < params.size() && params[i] != name) {
            ++i;
          }
          if (i == params.size()) {
            ctx.fail(call.s + ": unknown argument '" + name + "'");
          }
          if (slots[i] != nullptr) {
            ctx.fail(call.s + ": argument '" + name + "' given twice");
          }
          slots[i] = &val;
        }
      }

      const Value *get(std::size_t i) const {
        return slots[i];
      }
      const Value &need(std::size_t i, const char *name) const {
        if (slots[i] == nullptr) {
          ctx.fail(std::string("missing argument '") + name + "'");
        }
        return *slots[i];
      }
    };

    std::string strip(std::string_view s) {
      auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) {
        return {};
      }
      auto e = s.find_last_not_of(" \t\r");
      return std::string(s.substr(b, e - b + 1));
    }
  }  // namespace

  ParseError::ParseError(std::size_t l, std::string f, const std::string &message)
      : std::runtime_error((l > 0 ? "line " + std::to_string(l) + ": " : std::string())
                           + (f.empty() ? std::string() : f + ": ") + message),
        line(l),
        field(std::move(f)) {}

  Scenario parseScenario(const std::string &text) {
    Scenario s;
    std::map<std::string, std::size_t> seen;
    std::optional<double> t0_fraction;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      auto hash = raw.find('#');
      auto line = strip(std::string_view(raw).substr(0, hash));
      if (line.empty()) {
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(lineno, "", "expected 'key = value'");
      }
      auto key = strip(std::string_view(line).substr(0, eq));
      if (key.empty()) {
        throw ParseError(lineno, "", "missing key");
      }
      Ctx ctx{lineno, key};
      auto value = ValueParser(std::string_view(line).substr(eq + 1), lineno, key).parseAll();
      if (key != "adversary" && key != "delay_step") {
        if (auto it = seen.find(key); it != seen.end()) {
          ctx.fail("already set on line " + std::to_string(it->second));
        }
        seen.emplace(key, lineno);
      }

      if (key == "n") {
        s.n = static_cast<std::size_t>(ctx.integer(value, 1));
      } else if (key == "weights") {
        s.weights.clear();
        for (auto w : ctx.intList(value)) {
          s.weights.push_back(w);
        }
      } else if (key == "delta") {
        s.delta = ctx.integer(value, 1);
      } else if (key == "gst") {
        s.gst = ctx.integer(value);
      } else if (key == "horizon") {
        s.horizon = ctx.integer(value, 1);
      } else if (key == "era_length") {
        s.era_length = static_cast<std::uint64_t>(ctx.integer(value));
      } else if (key == "rounds") {
        if (value.kind == Value::Kind::kIdent && value.s == "fixed") {
          s.round_length = 0;
        } else if (value.kind == Value::Kind::kCall && value.s == "fixed") {
          Args a(ctx, value, {"length", "exponent"});
          if ((a.get(0) == nullptr) == (a.get(1) == nullptr)) {
            ctx.fail("fixed: give exactly one of length or exponent");
          }
          if (a.get(0) != nullptr) {
            s.round_length = ctx.integer(*a.get(0), 3);
          } else {
            auto e = ctx.integer(*a.get(1), 2);
            if (e > 40) {
              ctx.fail("fixed: exponent above 40");
            }
            s.round_length = Tick{1} << e;
          }
        } else if ((value.kind == Value::Kind::kCall || value.kind == Value::Kind::kIdent)
                   && value.s == "dynamic") {
          DynamicRounds d;
          if (value.kind == Value::Kind::kCall) {
            Args a(ctx, value, {"n_min", "n_max", "t0", "c_fail", "c_succ", "c", "d"});
            auto u = [&](std::size_t i, unsigned &out) {
              if (a.get(i) != nullptr) {
                out = static_cast<unsigned>(ctx.integer(*a.get(i)));
              }
            };
            u(0, d.n_min);
            u(1, d.n_max);
            if (const auto *t0 = a.get(2)) {
              if (t0->kind == Value::Kind::kFloat) {
                t0_fraction = ctx.number(*t0);
                if (*t0_fraction < 0 || *t0_fraction >= 1) {
                  ctx.fail("dynamic: fractional t0 must lie in [0, 1)");
                }
              } else {
                d.t0 = ctx.integer(*t0);
              }
            }
            u(3, d.c_fail);
            u(4, d.c_succ);
            u(5, d.c);
            u(6, d.d);
          }
          s.dynamic = d;
        } else {
          ctx.fail("expected fixed, fixed(length=R), fixed(exponent=E) or dynamic(...)");
        }
      } else if (key == "endorsements") {
        const auto &m = ctx.identifier(value);
        if (m == "off") {
          s.endorsement = EndorsementMode::kOff;
        } else if (m == "naive") {
          s.endorsement = EndorsementMode::kNaive;
        } else if (m == "refined") {
          s.endorsement = EndorsementMode::kRefined;
        } else {
          ctx.fail("expected off, naive or refined");
        }
      } else if (key == "thresholds") {
        s.thresholds.clear();
        for (auto t : ctx.intList(value)) {
          s.thresholds.push_back(t);
        }
      } else if (key.starts_with("thresholds.")) {
        auto id = key.substr(11);
        if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos) {
          ctx.fail("expected thresholds.<validator id>");
        }
        auto &ts = s.threshold_overrides[static_cast<ValidatorId>(std::stoul(id))];
        for (auto t : ctx.intList(value)) {
          ts.push_back(t);
        }
      } else if (key == "adversary") {
        if (value.kind != Value::Kind::kCall) {
          ctx.fail("expected a call such as equivocator(3, rate=0.5)");
        }
        auto id = [&](const Value &v) { return static_cast<ValidatorId>(ctx.integer(v)); };
        if (value.s == "equivocator") {
          Args a(ctx, value, {"id", "rate"});
          EquivocatorSpec e{id(a.need(0, "id"))};
          if (a.get(1) != nullptr) {
            e.rate = ctx.number(*a.get(1));
          }
          s.adversaries.emplace_back(e);
        } else if (value.s == "crash") {
          Args a(ctx, value, {"id", "at"});
          s.adversaries.emplace_back(CrashSpec{id(a.need(0, "id")), ctx.integer(a.need(1, "at"))});
        } else if (value.s == "withholder") {
          Args a(ctx, value, {"id", "targets"});
          WithholderSpec w{id(a.need(0, "id")), {}};
          for (auto t : ctx.intList(a.need(1, "targets"))) {
            w.targets.push_back(static_cast<ValidatorId>(t));
          }
          s.adversaries.emplace_back(w);
        } else if (value.s == "delayer") {
          Args a(ctx, value, {"id", "extra"});
          s.adversaries.emplace_back(
              DelayerSpec{id(a.need(0, "id")), ctx.integer(a.need(1, "extra"))});
        } else if (value.s == "fork_bomb") {
          Args a(ctx, value, {"coalition", "depth", "waves"});
          ForkBombSpec fb;
          for (auto v : ctx.intList(a.need(0, "coalition"))) {
            fb.coalition.push_back(static_cast<ValidatorId>(v));
          }
          fb.depth = a.get(1) != nullptr ? static_cast<std::size_t>(ctx.integer(*a.get(1), 1))
                                         : fb.coalition.size() / 2;
          if (a.get(2) != nullptr) {
            fb.waves = static_cast<std::size_t>(ctx.integer(*a.get(2), 1));
          }
          s.adversaries.emplace_back(fb);
        } else {
          ctx.fail("unknown adversary '" + value.s + "'");
        }
      } else if (key == "seed") {
        s.seed = static_cast<std::uint64_t>(ctx.integer(value));
      } else if (key == "schedule") {
        if (value.kind == Value::Kind::kIdent && value.s == "round_robin") {
          s.schedule.kind = ScheduleKind::kRoundRobin;
        } else if (value.kind == Value::Kind::kCall && value.s == "seeded") {
          Args a(ctx, value, {"seed"});
          s.schedule.kind = ScheduleKind::kSeeded;
          s.schedule.seed = static_cast<std::uint64_t>(ctx.integer(a.need(0, "seed")));
        } else {
          ctx.fail("expected round_robin or seeded(S)");
        }
      } else if (key == "max_pre_gst_delay") {
        s.max_pre_gst_delay = ctx.integer(value, 1);
      } else if (key == "delay") {
        auto range = ctx.intList(value);
        if (range.size() != 2) {
          ctx.fail("expected [min, max]");
        }
        s.min_delay = range[0];
        s.max_delay = range[1];
      } else if (key == "delay_step") {
        if (value.kind != Value::Kind::kTuple || value.items.size() != 2) {
          ctx.fail("expected (tick, factor)");
        }
        s.delay_steps.emplace_back(ctx.integer(value.items[0]), ctx.number(value.items[1]));
      } else if (key == "lnc_buffer_cap") {
        s.lnc_buffer_cap = static_cast<std::size_t>(ctx.integer(value, 1));
      } else {
        ctx.fail("unknown key");
      }
    }
    for (const char *required : {"n", "delta", "horizon"}) {
      if (!seen.contains(required)) {
        throw ParseError(0, required, "missing required field");
      }
    }
    if (t0_fraction) {
      auto total = static_cast<double>(s.weightMap().total());
      auto t0 = static_cast<Weight>(std::ceil(*t0_fraction * total)) - 1;
      s.dynamic->t0 = std::max<Weight>(0, t0);
    }
    if (s.dynamic) {
      auto &ts = s.thresholds;
      if (std::find(ts.begin(), ts.end(), s.dynamic->t0) == ts.end()) {
        ts.push_back(s.dynamic->t0);
      }
    }
    auto problems = validate(s);
    if (!problems.empty()) {
      auto colon = problems.front().find(':');
      auto field = problems.front().substr(0, colon);
      auto it = seen.find(field);
      std::string all;
      for (const auto &p : problems) {
        all += (all.empty() ? "" : "; ") + p;
      }
      throw ParseError(it == seen.end() ? 0 : it->second, "", all);
    }
    return s;
  }

  Scenario loadScenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
      throw ParseError(0, "", "cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parseScenario(buf.str());
  }

  namespace {
    template <typename T>
    std::string list(const std::vector<T> &xs) {
      std::string s = "[";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        s += (i ? ", " : "") + std::to_string(xs[i]);
      }
      return s + "]";
    }
  }  // namespace

  std::string formatScenario(const Scenario &s) {
    std::ostringstream out;
    out << "n = " << s.n << '\n';
    if (!s.weights.empty()) {
      out << "weights = " << list(s.weights) << '\n';
    }
    out << "delta = " << s.delta << '\n'
        << "gst = " << s.gst << '\n'
        << "horizon = " << s.horizon << '\n'
        << "era_length = " << s.era_length << '\n';
    if (s.dynamic) {
      const auto &d = *s.dynamic;
      out << "rounds = dynamic(" << d.n_min << ", " << d.n_max << ", " << d.t0 << ", "
          << d.c_fail << ", " << d.c_succ << ", " << d.c << ", " << d.d << ")\n";
    } else if (s.round_length > 0) {
      out << "rounds = fixed(length=" << s.round_length << ")\n";
    } else {
      out << "rounds = fixed\n";
    }
    out << "endorsements = " << toString(s.endorsement) << '\n';
    out << "thresholds = " << list(s.thresholds) << '\n';
    for (const auto &[v, ts] : s.threshold_overrides) {
      out << "thresholds." << v << " = " << list(ts) << '\n';
    }
    for (const auto &a : s.adversaries) {
      out << "adversary = " << describe(a) << '\n';
    }
    out << "seed = " << s.seed << '\n';
    if (s.schedule.kind == ScheduleKind::kSeeded) {
      out << "schedule = seeded(" << s.schedule.seed << ")\n";
    } else {
      out << "schedule = round_robin\n";
    }
    out << "max_pre_gst_delay = " << s.max_pre_gst_delay << '\n'
        << "delay = [" << s.min_delay << ", " << s.maxDelay() << "]\n";
    for (const auto &[at, f] : s.delay_steps) {
      out << "delay_step = (" << at << ", " << f << ")\n";
    }
    out << "lnc_buffer_cap = " << s.lnc_buffer_cap << '\n';
    return out.str();
  }

}  // namespace highway
