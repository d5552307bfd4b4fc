#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fitolab/clock.hpp"

namespace fitolab {

struct OpId {
  ReplicaId replica;
  std::uint64_t seq = 0;
  friend auto operator<=>(const OpId&, const OpId&) = default;
};

/// `alice:3`
[[nodiscard]] std::string to_string(const OpId& id);

namespace action {
struct WriteDoc {
  std::string doc;
  std::size_t paragraph = 0;
  std::string content;
  friend bool operator==(const WriteDoc&, const WriteDoc&) = default;
};
/// `content` holds paragraphs separated by '|'.
struct CreateDoc {
  std::string doc;
  std::string content;
  friend bool operator==(const CreateDoc&, const CreateDoc&) = default;
};
struct DeleteDoc {
  std::string doc;
  friend bool operator==(const DeleteDoc&, const DeleteDoc&) = default;
};
struct MarkRead {
  std::string msg;
  friend bool operator==(const MarkRead&, const MarkRead&) = default;
};
struct MarkUnread {
  std::string msg;
  friend bool operator==(const MarkUnread&, const MarkUnread&) = default;
};
struct Move {
  std::string msg;
  std::string folder;
  friend bool operator==(const Move&, const Move&) = default;
};
struct DeleteMsg {
  std::string msg;
  friend bool operator==(const DeleteMsg&, const DeleteMsg&) = default;
};
/// Creates (or re-creates) `msg` in the sender's "sent" folder.
struct Compose {
  std::string msg;
  std::optional<std::string> in_reply_to;
  friend bool operator==(const Compose&, const Compose&) = default;
};
}  // namespace action

using PrimitiveAction = std::variant<action::WriteDoc, action::CreateDoc, action::DeleteDoc, action::MarkRead,
                                     action::MarkUnread, action::Move, action::DeleteMsg, action::Compose>;

/// Non-empty; members are primitive so groups cannot nest.
struct TxnGroup {
  std::vector<PrimitiveAction> members;
  friend bool operator==(const TxnGroup&, const TxnGroup&) = default;
};

using OpKind = std::variant<action::WriteDoc, action::CreateDoc, action::DeleteDoc, action::MarkRead,
                            action::MarkUnread, action::Move, action::DeleteMsg, action::Compose, TxnGroup>;

[[nodiscard]] OpKind to_kind(const PrimitiveAction& a);
/// The primitive members of `kind` (one element unless it is a group).
[[nodiscard]] std::vector<PrimitiveAction> members_of(const OpKind& kind);

/// Object a primitive action touches: `doc:<id>` or `msg:<id>`.
[[nodiscard]] std::string object_key(const PrimitiveAction& a);
[[nodiscard]] std::set<std::string> object_keys(const OpKind& kind);
[[nodiscard]] bool is_doc_key(const std::string& key);
/// Strips the `doc:` / `msg:` prefix.
[[nodiscard]] std::string object_name(const std::string& key);

[[nodiscard]] std::string kind_name(const PrimitiveAction& a);
[[nodiscard]] std::string kind_name(const OpKind& k);
/// `WriteDoc(D1,3,"text")`, `TxnGroup[...]`. Strings are quoted and escaped.
[[nodiscard]] std::string to_string(const PrimitiveAction& a);
[[nodiscard]] std::string to_string(const OpKind& k);

/// Double-quoted with `\"`, `\\`, `\n` escapes.
[[nodiscard]] std::string quote(const std::string& text);

/// Full content of a document after an op, as computed at the origin.
struct DocContent {
  std::vector<std::string> paragraphs;
  bool deleted = false;
  friend bool operator==(const DocContent&, const DocContent&) = default;
};

/// Absolute message state as an origin device sees it after an op.
struct MailRecord {
  bool exists = false;
  bool read = false;
  std::string folder;
  bool deleted = false;
  std::string body;
  friend bool operator==(const MailRecord&, const MailRecord&) = default;
};

struct Operation {
  OpId id;
  OpKind kind;
  TrueTime true_time;
  LocalTimestamp local_ts;
  VectorClock vclock;
  HybridTimestamp hybrid;
  std::set<OpId> deps;

  /// Resulting content of every document the op writes.
  std::map<std::string, DocContent> doc_content;
  /// Absolute state of every message the op touches (what a timestamp register stores).
  std::map<std::string, MailRecord> mail_records;
  /// Observed add-tags removed by the op, keyed `msg/field` (`m1/read`, `m1/folder/inbox`, `m1/deleted`).
  std::map<std::string, std::set<OpId>> removed_tags;
  /// Server placement order; assigned when the server receives the op.
  std::optional<std::uint64_t> arrival;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Happens-before DAG over recorded operations.
class CausalGraph {
 public:
  /// Throws GraphError on duplicate id, missing dep, or a dep that is not strictly earlier in true time.
  void record(Operation op);

  [[nodiscard]] bool contains(const OpId& id) const { return nodes_.contains(id); }
  [[nodiscard]] const Operation& at(const OpId& id) const;
  [[nodiscard]] const std::map<OpId, Operation>& nodes() const { return nodes_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }

  /// Transitive reachability along dep edges; irreflexive. Throws GraphError on unknown ids.
  [[nodiscard]] bool happens_before(const OpId& a, const OpId& b) const;

 private:
  std::map<OpId, Operation> nodes_;
  // Transitive ancestors, filled on record; deps are recorded first so this stays closed.
  std::map<OpId, std::set<OpId>> ancestors_;
};

enum class ProjectionKey { ByLocalTimestamp, ByHybrid, ByTrueTime };

[[nodiscard]] std::string_view to_string(ProjectionKey key);

struct LinearChain {
  std::vector<OpId> order;
  ProjectionKey key = ProjectionKey::ByTrueTime;
};

/// Total order by the key, ties broken by (replica-id, seq).
[[nodiscard]] LinearChain linear_projection(const CausalGraph& graph, ProjectionKey key);

/// Number of unordered pairs that are concurrent under happens-before.
[[nodiscard]] std::uint64_t projection_loss(const CausalGraph& graph);

/// Pairs (a, b) with a happens-before b but b placed first in `chain`.
/// Throws GraphError when the chain is not a permutation of the graph's nodes.
[[nodiscard]] std::vector<std::pair<OpId, OpId>> detect_inversions(const CausalGraph& graph,
                                                                   const LinearChain& chain);

/// One line, fields in fixed order:
/// `op id=<id> kind=<kind> true=<s> local=<s> vc=<vc> hlc=(w,c) deps=[<id>,...]`
[[nodiscard]] std::string trace_record(const Operation& op);

}  // namespace fitolab
