#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fitolab/oplog.hpp"
#include "fitolab/replica.hpp"
#include "fitolab/scenario.hpp"
#include "fitolab/strategy.hpp"

namespace fitolab {

/// T3 placed at the server, T4 completion signaled, T5 visible on a remote replica,
/// T6 every replica acknowledged semantic application.
enum class TransactionPhase { T3_Placed, T4_Completion, T5_Visible, T6_Commitment };

enum class SignalMode { CompletionOnly, ReflectedCommitment };

[[nodiscard]] std::string_view to_string(TransactionPhase p);
[[nodiscard]] std::string_view to_string(SignalMode m);
[[nodiscard]] std::optional<SignalMode> parse_signal_mode(std::string_view name);

/// Where the server is when it considers signaling an op.
struct SignalContext {
  enum class Point { Placement, Acknowledgement };
  Point point = Point::Placement;
  /// Every replica has acknowledged the op and every other placed op on its objects.
  bool all_acked = false;
  /// The acknowledged object states are identical across replicas.
  bool states_agree = false;
};

/// CompletionOnly signals T4 at placement. ReflectedCommitment signals T6 only
/// once all acknowledgements are in and they agree; never at placement.
[[nodiscard]] std::optional<TransactionPhase> emit_signal(SignalMode mode, const SignalContext& ctx);

struct RunConfig {
  Strategy strategy;
  SignalMode mode = SignalMode::CompletionOnly;
  bool causal_delivery = false;
  std::uint64_t seed = 0;
};

struct TraceLine {
  TrueTime at;
  std::string text;
  /// Surfaced to a user (signals, conflict notices, rejections) rather than internal bookkeeping.
  bool user_visible = false;
};

struct SignalRecord {
  TrueTime at;
  ReplicaId replica;
  TransactionPhase phase = TransactionPhase::T4_Completion;
  OpId op;
  std::set<std::string> objects;
  /// Replica states on `objects` disagreed at the instant of the signal.
  bool divergent = false;
};

struct GroupRecord {
  ReplicaId replica;
  TrueTime at;
  TxnGroup group;
  std::vector<OpId> ops;
};

struct DiscardRecord {
  TrueTime at;
  ReplicaId replica;
  std::string object;
  OpId origin;
};

struct NoticeRecord {
  TrueTime at;
  ReplicaId replica;
  std::string object;
  std::vector<OpId> versions;
};

enum class Terminal { Quiescent, MaxEvents };

/// Everything a run produced; the detectors read only this.
struct Trace {
  std::string scenario;
  RunConfig config;
  std::vector<TraceLine> lines;
  std::vector<SignalRecord> signals;
  std::map<ReplicaId, Snapshot> finals;
  /// Structured final state per replica (what the snapshots render).
  std::map<ReplicaId, DocStore> final_docs;
  std::map<ReplicaId, std::map<std::string, MailView>> final_mail;
  Terminal terminal = Terminal::Quiescent;
  std::uint64_t events = 0;

  CausalGraph graph;
  std::vector<GroupRecord> groups;
  std::vector<DiscardRecord> discards;
  std::vector<NoticeRecord> notices;
  /// (replica, object) -> number of times a previously held state was re-entered.
  std::map<std::pair<ReplicaId, std::string>, std::uint64_t> revisits;
};

/// Trace file: header, event lines, terminal condition, snapshots, signal log.
[[nodiscard]] std::string format_trace(const Trace& trace);

/// Installs the scenario's documents and messages; every replica starts from the same seed state.
void seed_replica(Replica& r, const Scenario& scenario);

/// Single-threaded discrete-event engine over a star topology (replicas <-> one server).
class Simulator {
 public:
  Simulator(const Scenario& scenario, RunConfig config);

  /// Processes the earliest pending event; false when none is left.
  bool step();
  /// Steps until quiescence or `max_events` (default: the scenario's bound), then snapshots.
  Trace run_until_quiescent(std::optional<std::uint64_t> max_events = std::nullopt);

  /// Called after every processed event.
  void set_observer(std::function<void(const Simulator&)> observer) { observer_ = std::move(observer); }

  [[nodiscard]] const std::map<ReplicaId, Replica>& replicas() const { return replicas_; }
  [[nodiscard]] TrueTime now() const { return now_; }
  [[nodiscard]] bool idle() const { return queue_.empty(); }
  [[nodiscard]] const Trace& trace() const { return trace_; }
  /// States of every replica on `objects` agree right now.
  [[nodiscard]] bool agree(const std::set<std::string>& objects) const;

 private:
  struct ActionEvent {
    ReplicaId replica;
    OpKind kind;
    std::optional<std::size_t> group;
    bool reassert = false;
  };
  struct ConnectivityEvent {
    ReplicaId replica;
    bool online = false;
  };
  struct ClockStepEvent {
    ReplicaId replica;
    std::int64_t jump_nanos = 0;
  };
  struct LatencyEvent {
    ReplicaId replica;
    std::int64_t nanos = 0;
  };
  struct PartitionEvent {
    std::size_t index = 0;
    bool start = false;
  };
  struct UploadEvent {
    ReplicaId from;
    Operation op;
    std::uint64_t report = 0;
    std::map<std::string, std::string> states;
  };
  struct DeliverEvent {
    ReplicaId to;
    Operation op;
  };
  /// Placement notice back to the origin, carrying the arrival number.
  struct ConfirmEvent {
    ReplicaId to;
    OpId op;
    std::uint64_t arrival = 0;
  };
  struct AckEvent {
    ReplicaId from;
    OpId op;
    std::uint64_t report = 0;
    std::map<std::string, std::string> states;
  };
  using Payload = std::variant<ActionEvent, ConnectivityEvent, ClockStepEvent, LatencyEvent, PartitionEvent,
                               UploadEvent, DeliverEvent, ConfirmEvent, AckEvent>;

  struct Placed {
    OpId id;
    ReplicaId origin;
    std::set<std::string> objects;
    std::set<ReplicaId> acked;
    bool committed = false;
  };

  void schedule(TrueTime at, Payload payload);
  void log(std::string text, bool user_visible = false);

  void handle(ActionEvent& e);
  void handle(ConnectivityEvent& e);
  void handle(ClockStepEvent& e);
  void handle(LatencyEvent& e);
  void handle(PartitionEvent& e);
  void handle(UploadEvent& e);
  void handle(DeliverEvent& e);
  void handle(ConfirmEvent& e);
  void handle(AckEvent& e);
  /// False when `to` cannot receive now; the payload was requeued or parked.
  bool reachable(const ReplicaId& to, const std::string& what, Payload& payload);

  void send_upload(const ReplicaId& from, Operation op);
  void process_resolutions(Replica& r);
  /// `d` lost to a causal successor (or was folded into a survivor) rather than to a concurrent version.
  [[nodiscard]] bool superseded(const Replica& r, const ResolutionEvent& ev, const OpId& d) const;
  void observe_states(const ReplicaId& r, const std::set<std::string>& objects);
  void check_commitments();

  [[nodiscard]] std::optional<TrueTime> partition_end(const ReplicaId& r, TrueTime t) const;
  [[nodiscard]] std::int64_t link_delay(const ReplicaId& r);
  [[nodiscard]] std::map<std::string, std::string> states_of(const Replica& r,
                                                             const std::set<std::string>& objects) const;

  Scenario scenario_;
  RunConfig config_;
  std::map<ReplicaId, Replica> replicas_;
  std::map<ReplicaId, std::int64_t> latency_;
  std::mt19937_64 rng_;

  std::map<std::pair<std::int64_t, std::uint64_t>, Payload> queue_;
  std::uint64_t next_order_ = 0;
  TrueTime now_;

  // Server
  std::uint64_t arrivals_ = 0;
  std::vector<Placed> placed_;
  std::map<OpId, std::size_t> placed_index_;
  std::map<std::pair<ReplicaId, std::string>, std::pair<std::uint64_t, std::string>> reported_;
  std::map<ReplicaId, std::vector<Payload>> parked_;
  std::map<ReplicaId, std::uint64_t> reports_;

  std::set<OpId> reasserted_;
  std::map<std::pair<ReplicaId, std::string>, std::vector<std::string>> state_history_;
  std::function<void(const Simulator&)> observer_;
  Trace trace_;
};

}  // namespace fitolab
