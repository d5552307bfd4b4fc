#include "fitolab/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace fitolab {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

const ReplicaSpec* Scenario::find_replica(const ReplicaId& id) const {
  auto it = std::ranges::find(replicas, id, &ReplicaSpec::id);
  return it == replicas.end() ? nullptr : &*it;
}

namespace {

constexpr std::int64_t kMicro = 1'000;
constexpr std::int64_t kMilli = 1'000'000;
constexpr std::int64_t kMinute = 60 * kNanosPerSecond;
constexpr std::int64_t kHour = 60 * kMinute;

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// "12.25" in units of `unit`, exact or nothing.
std::optional<std::int64_t> parse_scaled(std::string_view s, std::int64_t unit) {
  const auto dot = s.find('.');
  const auto whole = parse_int(s.substr(0, dot));
  if (!whole || s.empty() || s.front() == '-' || s.front() == '+') return std::nullopt;
  std::int64_t value = *whole * unit;
  if (dot == std::string_view::npos) return value;
  const auto frac = s.substr(dot + 1);
  if (frac.empty() || !std::ranges::all_of(frac, [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) {
    if (scale > unit) return std::nullopt;
    scale *= 10;
  }
  const auto digits = *parse_int(frac);
  if ((digits * unit) % scale != 0) return std::nullopt;
  return value + digits * unit / scale;
}

struct Token {
  std::string text;
  bool quoted = false;
};

std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t') {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    Token tok;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      if (line[i] != '"') {
        tok.text += line[i++];
        continue;
      }
      tok.quoted = true;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char c = line[i++];
        if (c == '"') {
          closed = true;
          break;
        }
        if (c == '\\' && i < line.size()) {
          char e = line[i++];
          tok.text += e == 'n' ? '\n' : e;
        } else {
          tok.text += c;
        }
      }
      if (!closed) throw ParseError(lineno, "unterminated string");
    }
    out.push_back(std::move(tok));
  }
  return out;
}

bool parse_bool(const std::string& v, std::size_t lineno) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError(lineno, "expected true or false, got '" + v + "'");
}

std::int64_t need_duration(const std::string& v, std::size_t lineno) {
  auto d = parse_duration(v);
  if (!d) throw ParseError(lineno, "bad duration '" + v + "'");
  return *d;
}

std::pair<std::string, std::string> split_kv(const Token& t, std::size_t lineno) {
  const auto eq = t.text.find('=');
  if (eq == std::string::npos) throw ParseError(lineno, "expected key=value, got '" + t.text + "'");
  return {t.text.substr(0, eq), t.text.substr(eq + 1)};
}

PrimitiveAction parse_action(const std::vector<Token>& toks, std::size_t lineno) {
  if (toks.empty()) throw ParseError(lineno, "missing action");
  const auto& verb = toks[0].text;
  auto arity = [&](std::size_t n) {
    if (toks.size() != n + 1) throw ParseError(lineno, "'" + verb + "' takes " + std::to_string(n) + " arguments");
  };
  if (verb == "write") {
    arity(3);
    auto idx = parse_int(toks[2].text);
    if (!idx || *idx < 0) throw ParseError(lineno, "bad paragraph index '" + toks[2].text + "'");
    return action::WriteDoc{toks[1].text, static_cast<std::size_t>(*idx), toks[3].text};
  }
  if (verb == "create") {
    arity(2);
    return action::CreateDoc{toks[1].text, toks[2].text};
  }
  if (verb == "deletedoc") {
    arity(1);
    return action::DeleteDoc{toks[1].text};
  }
  if (verb == "read") {
    arity(1);
    return action::MarkRead{toks[1].text};
  }
  if (verb == "unread") {
    arity(1);
    return action::MarkUnread{toks[1].text};
  }
  if (verb == "move") {
    arity(2);
    return action::Move{toks[1].text, toks[2].text};
  }
  if (verb == "delete") {
    arity(1);
    return action::DeleteMsg{toks[1].text};
  }
  if (verb == "compose") {
    if (toks.size() == 2) return action::Compose{toks[1].text, std::nullopt};
    if (toks.size() == 3) {
      auto [k, v] = split_kv(toks[2], lineno);
      if (k != "reply-to") throw ParseError(lineno, "unknown compose option '" + k + "'");
      return action::Compose{toks[1].text, v};
    }
    throw ParseError(lineno, "'compose' takes a message id and optional reply-to=<msg>");
  }
  throw ParseError(lineno, "unknown action '" + verb + "'");
}

Directive parse_directive(const std::vector<Token>& toks, std::size_t lineno) {
  const auto& verb = toks[0].text;
  if (verb == "offline" && toks.size() == 1) return directive::Offline{};
  if (verb == "online" && toks.size() == 1) return directive::Online{};
  if (verb == "step" && toks.size() == 2) return directive::ClockJump{need_duration(toks[1].text, lineno)};
  if (verb == "latency" && toks.size() == 2) {
    const auto d = need_duration(toks[1].text, lineno);
    if (d < 1) throw ParseError(lineno, "latency must be at least 1ns");
    return directive::Latency{d};
  }
  if (verb == "group") {
    TxnGroup group;
    std::vector<Token> current;
    auto flush = [&] {
      if (current.empty()) throw ParseError(lineno, "empty group member");
      group.members.push_back(parse_action(current, lineno));
      current.clear();
    };
    for (std::size_t i = 1; i < toks.size(); ++i) {
      if (!toks[i].quoted && toks[i].text == ";") {
        flush();
      } else {
        current.push_back(toks[i]);
      }
    }
    flush();
    return directive::Act{group};
  }
  return directive::Act{to_kind(parse_action(toks, lineno))};
}

std::string print_action(const PrimitiveAction& a) {
  return std::visit(
      [](const auto& x) -> std::string {
        using A = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<A, action::WriteDoc>) {
          return "write " + x.doc + " " + std::to_string(x.paragraph) + " " + quote(x.content);
        } else if constexpr (std::is_same_v<A, action::CreateDoc>) {
          return "create " + x.doc + " " + quote(x.content);
        } else if constexpr (std::is_same_v<A, action::DeleteDoc>) {
          return "deletedoc " + x.doc;
        } else if constexpr (std::is_same_v<A, action::MarkRead>) {
          return "read " + x.msg;
        } else if constexpr (std::is_same_v<A, action::MarkUnread>) {
          return "unread " + x.msg;
        } else if constexpr (std::is_same_v<A, action::Move>) {
          return "move " + x.msg + " " + x.folder;
        } else if constexpr (std::is_same_v<A, action::DeleteMsg>) {
          return "delete " + x.msg;
        } else {
          return "compose " + x.msg + (x.in_reply_to ? " reply-to=" + *x.in_reply_to : "");
        }
      },
      a);
}

std::string print_directive(const Directive& d) {
  return std::visit(
      [](const auto& x) -> std::string {
        using D = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<D, directive::Offline>) {
          return "offline";
        } else if constexpr (std::is_same_v<D, directive::Online>) {
          return "online";
        } else if constexpr (std::is_same_v<D, directive::ClockJump>) {
          return "step " + print_duration(x.jump_nanos);
        } else if constexpr (std::is_same_v<D, directive::Latency>) {
          return "latency " + print_duration(x.nanos);
        } else {
          if (const auto* g = std::get_if<TxnGroup>(&x.kind)) {
            std::string out = "group";
            for (std::size_t i = 0; i < g->members.size(); ++i) {
              out += i ? " ; " : " ";
              out += print_action(g->members[i]);
            }
            return out;
          }
          return print_action(members_of(x.kind).front());
        }
      },
      d);
}

}  // namespace

std::optional<std::int64_t> parse_duration(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  std::optional<std::int64_t> value;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) return std::nullopt;
    const auto h = parse_int(text.substr(0, c1));
    const auto m = parse_int(text.substr(c1 + 1, c2 - c1 - 1));
    const auto s = parse_scaled(text.substr(c2 + 1), kNanosPerSecond);
    if (!h || !m || !s || *h < 0 || *m < 0 || *m >= 60 || *s >= kMinute) return std::nullopt;
    value = *h * kHour + *m * kMinute + *s;
  } else {
    static constexpr std::pair<std::string_view, std::int64_t> kUnits[] = {
        {"ns", 1}, {"us", kMicro}, {"ms", kMilli}, {"s", kNanosPerSecond}, {"m", kMinute}, {"h", kHour}};
    for (const auto& [suffix, unit] : kUnits) {
      if (!text.ends_with(suffix)) continue;
      const auto number = text.substr(0, text.size() - suffix.size());
      if (number.empty() || !(number.back() >= '0' && number.back() <= '9')) continue;
      value = parse_scaled(number, unit);
      break;
    }
  }
  if (!value) return std::nullopt;
  return negative ? -*value : *value;
}

std::string print_duration(std::int64_t nanos) {
  if (nanos == 0) return "0s";
  static constexpr std::pair<std::string_view, std::int64_t> kUnits[] = {
      {"h", kHour}, {"m", kMinute}, {"s", kNanosPerSecond}, {"ms", kMilli}, {"us", kMicro}, {"ns", 1}};
  for (const auto& [suffix, unit] : kUnits) {
    if (nanos % unit == 0) return std::to_string(nanos / unit) + std::string(suffix);
  }
  return std::to_string(nanos) + "ns";
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::map<ReplicaId, std::size_t> declared;
  std::vector<std::pair<std::size_t, std::size_t>> script_lines;  // (script index, line number)

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const auto toks = tokenize(raw, lineno);
    if (toks.empty()) continue;
    const auto& key = toks[0].text;

    if (key == "scenario") {
      if (toks.size() != 2) throw ParseError(lineno, "scenario takes one name");
      s.name = toks[1].text;
    } else if (key == "max_events") {
      auto n = toks.size() == 2 ? parse_int(toks[1].text) : std::nullopt;
      if (!n || *n <= 0) throw ParseError(lineno, "max_events must be a positive integer");
      s.max_events = static_cast<std::uint64_t>(*n);
    } else if (key == "retry") {
      if (toks.size() != 2) throw ParseError(lineno, "retry takes one duration");
      s.retry_nanos = need_duration(toks[1].text, lineno);
      if (s.retry_nanos < 1) throw ParseError(lineno, "retry must be positive");
    } else if (key == "jitter") {
      if (toks.size() != 2) throw ParseError(lineno, "jitter takes one duration");
      s.network.jitter_nanos = need_duration(toks[1].text, lineno);
      if (s.network.jitter_nanos < 0) throw ParseError(lineno, "jitter must not be negative");
    } else if (key == "replica") {
      if (toks.size() < 2) throw ParseError(lineno, "replica needs an id");
      ReplicaSpec spec;
      spec.id = toks[1].text;
      if (declared.contains(spec.id)) throw ParseError(lineno, "replica " + spec.id + " declared twice");
      std::int64_t latency = kMilli;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto [k, v] = split_kv(toks[i], lineno);
        if (k == "offset") {
          spec.clock.offset_nanos = need_duration(v, lineno);
        } else if (k == "drift_ppm") {
          auto n = parse_int(v);
          if (!n) throw ParseError(lineno, "bad drift_ppm '" + v + "'");
          spec.clock.drift_ppm = *n;
        } else if (k == "online") {
          spec.online = parse_bool(v, lineno);
        } else if (k == "reassert") {
          spec.reassert = parse_bool(v, lineno);
        } else if (k == "latency") {
          latency = need_duration(v, lineno);
          if (latency < 1) throw ParseError(lineno, "latency must be at least 1ns");
        } else {
          throw ParseError(lineno, "unknown replica option '" + k + "'");
        }
      }
      declared.emplace(spec.id, s.replicas.size());
      s.network.latency_nanos[spec.id] = latency;
      s.replicas.push_back(std::move(spec));
    } else if (key == "partition") {
      if (toks.size() != 4) throw ParseError(lineno, "partition takes <start> <end> <id,id,...>");
      Partition p{TrueTime{need_duration(toks[1].text, lineno)}, TrueTime{need_duration(toks[2].text, lineno)}, {}};
      if (!(p.start < p.end)) throw ParseError(lineno, "partition must end after it starts");
      std::string_view ids = toks[3].text;
      while (!ids.empty()) {
        const auto comma = ids.find(',');
        p.replicas.emplace_back(ids.substr(0, comma));
        ids = comma == std::string_view::npos ? std::string_view{} : ids.substr(comma + 1);
      }
      for (const auto& r : p.replicas) {
        if (!declared.contains(r)) throw ParseError(lineno, "undeclared replica " + r);
      }
      s.network.partitions.push_back(std::move(p));
    } else if (key == "doc") {
      if (toks.size() < 2) throw ParseError(lineno, "doc needs an id");
      SeedDoc d{toks[1].text, {}};
      for (std::size_t i = 2; i < toks.size(); ++i) d.paragraphs.push_back(toks[i].text);
      s.docs.push_back(std::move(d));
    } else if (key == "msg") {
      if (toks.size() < 2) throw ParseError(lineno, "msg needs an id");
      SeedMsg m;
      m.msg = toks[1].text;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto [k, v] = split_kv(toks[i], lineno);
        if (k == "folder") {
          m.folder = v;
        } else if (k == "read") {
          m.read = parse_bool(v, lineno);
        } else if (k == "body") {
          m.body = v;
        } else {
          throw ParseError(lineno, "unknown msg option '" + k + "'");
        }
      }
      s.msgs.push_back(std::move(m));
    } else if (key == "at") {
      if (toks.size() < 4) throw ParseError(lineno, "expected: at <time> <replica> <directive>");
      const TrueTime at{need_duration(toks[1].text, lineno)};
      const auto& replica = toks[2].text;
      if (!declared.contains(replica)) throw ParseError(lineno, "undeclared replica " + replica);
      if (!s.script.empty() && at < s.script.back().at) throw ParseError(lineno, "script is not sorted by time");
      std::vector<Token> rest(toks.begin() + 3, toks.end());
      s.script.push_back(ScriptLine{at, replica, parse_directive(rest, lineno)});
      script_lines.emplace_back(s.script.size() - 1, lineno);
    } else {
      throw ParseError(lineno, "unknown section '" + key + "'");
    }
  }

  // Actions on one replica must leave room for the previous group's members (one per nanosecond).
  std::map<ReplicaId, std::int64_t> next_free;
  for (const auto& [index, line] : script_lines) {
    const auto& sl = s.script[index];
    if (const auto* step = std::get_if<directive::ClockJump>(&sl.directive)) {
      s.replicas[declared.at(sl.replica)].clock.steps.push_back(ClockStep{sl.at, step->jump_nanos});
      continue;
    }
    const auto* act = std::get_if<directive::Act>(&sl.directive);
    if (act == nullptr) continue;
    if (auto it = next_free.find(sl.replica); it != next_free.end() && sl.at.nanos < it->second) {
      throw ParseError(line, "actions on " + sl.replica + " must be strictly later than the previous one");
    }
    next_free[sl.replica] = sl.at.nanos + static_cast<std::int64_t>(members_of(act->kind).size());
  }
  return s;
}

std::string print_scenario(const Scenario& s) {
  std::string out;
  out += "scenario " + s.name + "\n";
  out += "max_events " + std::to_string(s.max_events) + "\n";
  out += "retry " + print_duration(s.retry_nanos) + "\n";
  if (s.network.jitter_nanos != 0) out += "jitter " + print_duration(s.network.jitter_nanos) + "\n";
  for (const auto& r : s.replicas) {
    out += "replica " + r.id + " offset=" + print_duration(r.clock.offset_nanos) +
           " drift_ppm=" + std::to_string(r.clock.drift_ppm) + " online=" + (r.online ? "true" : "false") +
           " reassert=" + (r.reassert ? "true" : "false") +
           " latency=" + print_duration(s.network.latency_nanos.at(r.id)) + "\n";
  }
  for (const auto& p : s.network.partitions) {
    std::string ids;
    for (const auto& r : p.replicas) ids += (ids.empty() ? "" : ",") + r;
    out += "partition " + print_duration(p.start.nanos) + " " + print_duration(p.end.nanos) + " " + ids + "\n";
  }
  for (const auto& d : s.docs) {
    out += "doc " + d.doc;
    for (const auto& p : d.paragraphs) out += " " + quote(p);
    out += "\n";
  }
  for (const auto& m : s.msgs) {
    out += "msg " + m.msg + " folder=" + m.folder + " read=" + (m.read ? "true" : "false") +
           " body=" + quote(m.body) + "\n";
  }
  for (const auto& line : s.script) {
    out += "at " + print_duration(line.at.nanos) + " " + line.replica + " " + print_directive(line.directive) + "\n";
  }
  return out;
}

}  // namespace fitolab
