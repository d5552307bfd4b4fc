#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fitolab/clock.hpp"
#include "fitolab/oplog.hpp"

namespace fitolab {

struct ReplicaSpec {
  ReplicaId id;
  /// Offset and drift; steps come from `step` script directives.
  ClockModel clock;
  bool online = true;
  /// Re-issue own actions that a resolution discarded.
  bool reassert = false;
  friend bool operator==(const ReplicaSpec&, const ReplicaSpec&) = default;
};

struct Partition {
  TrueTime start;
  TrueTime end;
  std::vector<ReplicaId> replicas;
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Star topology: each replica has one link to the server, same latency both ways.
struct NetworkModel {
  std::map<ReplicaId, std::int64_t> latency_nanos;
  std::vector<Partition> partitions;
  /// Upper bound of uniform per-message jitter, drawn from the run seed. Zero disables it.
  std::int64_t jitter_nanos = 0;
  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

struct SeedDoc {
  std::string doc;
  std::vector<std::string> paragraphs;
  friend bool operator==(const SeedDoc&, const SeedDoc&) = default;
};

struct SeedMsg {
  std::string msg;
  std::string folder = "inbox";
  bool read = false;
  std::string body;
  friend bool operator==(const SeedMsg&, const SeedMsg&) = default;
};

namespace directive {
struct Act {
  OpKind kind;
  friend bool operator==(const Act&, const Act&) = default;
};
struct Offline {
  friend bool operator==(const Offline&, const Offline&) = default;
};
struct Online {
  friend bool operator==(const Online&, const Online&) = default;
};
struct ClockJump {
  std::int64_t jump_nanos = 0;
  friend bool operator==(const ClockJump&, const ClockJump&) = default;
};
/// Changes the replica's link latency from this instant on.
struct Latency {
  std::int64_t nanos = 0;
  friend bool operator==(const Latency&, const Latency&) = default;
};
}  // namespace directive

using Directive = std::variant<directive::Act, directive::Offline, directive::Online, directive::ClockJump,
                               directive::Latency>;

struct ScriptLine {
  TrueTime at;
  ReplicaId replica;
  Directive directive;
  friend bool operator==(const ScriptLine&, const ScriptLine&) = default;
};

struct Scenario {
  std::string name;
  std::vector<ReplicaSpec> replicas;
  NetworkModel network;
  std::vector<SeedDoc> docs;
  std::vector<SeedMsg> msgs;
  std::vector<ScriptLine> script;
  std::uint64_t max_events = 10'000;
  /// Delay before a re-asserting replica re-issues a discarded action.
  std::int64_t retry_nanos = kNanosPerSecond;
  friend bool operator==(const Scenario&, const Scenario&) = default;

  [[nodiscard]] const ReplicaSpec* find_replica(const ReplicaId& id) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses the line-oriented scenario format (see docs/formats.md).
/// Throws ParseError with a 1-based line number.
[[nodiscard]] Scenario parse_scenario(std::string_view text);
/// Inverse of parse_scenario.
[[nodiscard]] std::string print_scenario(const Scenario& s);

/// `10s`, `250ms`, `-60s`, `1500us`, `7ns`, `2m`, `1h`, `14:34:17`, `14:34:17.250`.
[[nodiscard]] std::optional<std::int64_t> parse_duration(std::string_view text);
/// Shortest exact rendering accepted by parse_duration.
[[nodiscard]] std::string print_duration(std::int64_t nanos);

/// Built-in corpus keyed `S1`...`S8`.
[[nodiscard]] const std::map<std::string, Scenario>& builtin_scenarios();
/// Scenario source text for a built-in key (what builtin_scenarios parsed).
[[nodiscard]] std::string_view builtin_source(const std::string& key);

}  // namespace fitolab
