#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitolab/clock.hpp"
#include "fitolab/oplog.hpp"
#include "fitolab/store.hpp"
#include "fitolab/strategy.hpp"

namespace fitolab {

class ReplicaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What one resolution did to one object.
struct ResolutionEvent {
  std::string object;
  std::vector<OpId> survivors;
  std::vector<OpId> discarded;
  bool notified = false;
};

struct ApplyOutcome {
  bool duplicate = false;
  bool buffered = false;
  /// Ops integrated by this call, in order (the op itself plus any released from the causal buffer).
  std::vector<OpId> applied;
};

/// Canonical, order-independent rendering of a replica's documents and mailbox.
struct Snapshot {
  std::string canonical;
  std::string digest;  // 16 hex digits, FNV-1a over `canonical`
  std::map<std::string, std::string> objects;
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// A device: local clocks, document store, mailbox, offline queue.
class Replica {
 public:
  Replica(ReplicaId id, ClockModel clock, Strategy strategy, bool causal_delivery, bool online = true);

  void seed_doc(const std::string& doc, std::vector<std::string> paragraphs, std::uint64_t seed_index);
  void seed_msg(const std::string& msg, const std::string& folder, bool read, std::string body,
                std::uint64_t seed_index);

  /// Stamp and apply a user action. Offline replicas queue the op in the outbox.
  /// Throws ReplicaError on an unknown target, an out-of-range paragraph, or an empty group.
  Operation apply_local(const OpKind& kind, TrueTime t);

  /// Integrate an op from another replica. Duplicates are no-ops; with causal delivery
  /// on, ops whose deps are missing wait in a buffer and are released once deliverable.
  ApplyOutcome apply_remote(const Operation& op, TrueTime t);

  /// The server placed own op `id` as arrival number `arrival`. Under server-arrival ordering
  /// the affected registers are re-picked. Throws ReplicaError for an op not originated here.
  void confirm_arrival(const OpId& id, std::uint64_t arrival);

  void go_offline() { online_ = false; }
  /// Comes online and returns the drained outbox.
  std::vector<Operation> go_online();
  /// Outbox in enqueue order; throws ReplicaError while offline.
  std::vector<Operation> drain();

  /// Resolution events since the last call.
  std::vector<ResolutionEvent> take_resolutions();

  [[nodiscard]] Snapshot snapshot() const;
  /// Rendering of a single object key (`doc:D1`, `msg:m1`); empty when unknown.
  [[nodiscard]] std::string render_object(const std::string& key) const;

  [[nodiscard]] const ReplicaId& id() const { return id_; }
  [[nodiscard]] const ClockModel& clock() const { return clock_; }
  [[nodiscard]] const Strategy& strategy() const { return strategy_; }
  [[nodiscard]] bool online() const { return online_; }
  [[nodiscard]] const VectorClock& vclock() const { return vclock_; }
  [[nodiscard]] HybridTimestamp hybrid() const { return hybrid_; }
  [[nodiscard]] const DocStore& store() const { return store_; }
  [[nodiscard]] const Mailbox& mailbox() const { return mailbox_; }
  [[nodiscard]] const std::deque<Operation>& outbox() const { return outbox_; }
  [[nodiscard]] const std::set<OpId>& applied() const { return applied_; }
  [[nodiscard]] std::size_t buffered() const { return pending_.size(); }
  /// Ops this replica originated, by id.
  [[nodiscard]] const std::map<OpId, Operation>& own_ops() const { return own_ops_; }

 private:
  void validate(const PrimitiveAction& a) const;
  void fill_payload(Operation& op) const;
  void integrate(const Operation& op);
  void integrate_remote(const Operation& op, TrueTime t);
  [[nodiscard]] bool deliverable(const Operation& op) const;

  ReplicaId id_;
  ClockModel clock_;
  Strategy strategy_;
  bool causal_delivery_;
  bool online_;

  VectorClock vclock_;
  HybridTimestamp hybrid_;
  std::uint64_t next_seq_ = 1;

  DocStore store_;
  std::map<std::string, std::vector<DocVersion>> history_;
  Mailbox mailbox_;
  /// Every record version a timestamp register has seen, per message.
  std::map<std::string, std::vector<RecordVersion>> record_history_;

  std::deque<Operation> outbox_;
  std::vector<Operation> pending_;
  std::set<OpId> applied_;
  std::map<OpId, Operation> own_ops_;

  std::optional<OpId> last_local_;
  std::map<std::string, std::set<OpId>> frontier_;
  std::map<std::string, OpId> last_mark_read_;
  std::vector<ResolutionEvent> resolutions_;
};

}  // namespace fitolab
