#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fitolab/store.hpp"

namespace fitolab {

enum class BaseStrategy { LwwTimestamp, LwwServerArrival, MultiValueMaterialize, ConvergentSets, SemanticMerge };

/// A conflict-resolution policy. `transactional` wraps the base policy with
/// all-or-nothing delivery of TxnGroups; it cannot wrap itself.
struct Strategy {
  BaseStrategy base = BaseStrategy::LwwTimestamp;
  bool transactional = false;
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// `LwwTimestamp`, ..., `Transactional(MultiValueMaterialize)`.
[[nodiscard]] std::string to_string(const Strategy& s);
[[nodiscard]] std::string_view to_string(BaseStrategy s);
/// Accepts the names above; bare `Transactional` means Transactional(MultiValueMaterialize).
[[nodiscard]] std::optional<Strategy> parse_strategy(std::string_view name);
/// The six selectable strategies, in display order.
[[nodiscard]] std::vector<Strategy> all_strategies();

/// Timestamp-register strategies keep one winner per object.
[[nodiscard]] bool is_lww(const Strategy& s);
/// True when the strategy cannot revise a resolution on later information.
[[nodiscard]] bool forward_committing(const Strategy& s);

template <class T>
struct Resolution {
  std::vector<T> survivors;
  std::vector<T> discarded;
  bool notified = false;
};

/// Timestamp-register order; the larger version wins. An unplaced version counts as the latest arrival.
[[nodiscard]] bool lww_less(BaseStrategy base, const DocVersion& a, const DocVersion& b);
[[nodiscard]] bool lww_less(BaseStrategy base, const RecordVersion& a, const RecordVersion& b);

/// Resolve an incoming document version against the locally surviving set.
/// `history` supplies merge bases for SemanticMerge (every version the replica has seen).
/// Throws std::invalid_argument when doc ids differ.
[[nodiscard]] Resolution<DocVersion> resolve_doc(const Strategy& s, std::span<const DocVersion> local,
                                                 const DocVersion& incoming,
                                                 std::span<const DocVersion> history = {});

struct MergeResult {
  std::optional<DocVersion> merged;
  /// Paragraph indices changed differently on both sides.
  std::vector<std::size_t> conflicts;
  /// Both sides changed the paragraph count (or deletion state) incompatibly.
  bool whole_doc_conflict = false;
};

/// Paragraph-positional three-way merge. A paragraph changed on one side takes
/// that side, unchanged takes base, changed on both sides differently is a conflict.
[[nodiscard]] MergeResult merge_doc(const DocVersion& base, const DocVersion& a, const DocVersion& b);

/// Observed-remove application of `op`'s effects on message `state.id`.
[[nodiscard]] MsgState set_apply(MsgState state, const Operation& op);

/// Timestamp-register application of `op`'s absolute record for `state.id`.
[[nodiscard]] std::pair<MsgState, Resolution<RecordVersion>> register_apply(const Strategy& s, MsgState state,
                                                                             const Operation& op);

[[nodiscard]] MailView view_of(const Strategy& s, const MsgState& state);

/// Split an action into the units that travel and apply atomically: one unit
/// for a group under a transactional strategy, one per member otherwise.
/// Throws std::invalid_argument on an empty group.
[[nodiscard]] std::vector<OpKind> txn_commit(const Strategy& s, const OpKind& kind);

}  // namespace fitolab
