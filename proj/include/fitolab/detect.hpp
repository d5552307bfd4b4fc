#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fitolab/oplog.hpp"
#include "fitolab/sync.hpp"

namespace fitolab {

enum class Pathology { SilentDeletion, PhantomMessage, LostReadState, MissingMove, StuckSync, CausalInversion };

[[nodiscard]] std::string_view to_string(Pathology p);

struct Finding {
  Pathology pathology = Pathology::SilentDeletion;
  /// Object key (`doc:x`, `msg:m1`); empty for run-wide findings.
  std::string object;
  std::vector<OpId> ops;
  std::vector<ReplicaId> replicas;
  std::string explanation;
  friend bool operator==(const Finding&, const Finding&) = default;
};

/// Flip-flop threshold: a (replica, object) that re-enters an earlier state this often is stuck.
inline constexpr std::uint64_t kFlipFlopThreshold = 3;

/// A doc version that is causally maximal, gone from every final state, and never notified.
[[nodiscard]] std::vector<Finding> detect_silent_deletion(const Trace& trace);
/// Every causally-last existence op deleted the message, yet some replica still shows it.
[[nodiscard]] std::vector<Finding> detect_phantom(const Trace& trace);
/// The causally-last read/unread ops agree and some replica shows the other flag.
[[nodiscard]] std::vector<Finding> detect_lost_read(const Trace& trace);
/// The causally-last folder ops all target F and some replica never shows F.
[[nodiscard]] std::vector<Finding> detect_missing_move(const Trace& trace);
/// Divergent at quiescence, divergent at the event bound, or flip-flopping.
[[nodiscard]] std::vector<Finding> detect_stuck(const Trace& trace, std::uint64_t threshold = kFlipFlopThreshold);
/// Happens-before pairs placed backwards by the order the strategy resolves with.
[[nodiscard]] std::vector<Finding> detect_causal_inversion(const Trace& trace);

/// All detectors, in enum order.
[[nodiscard]] std::vector<Finding> detect_all(const Trace& trace);

/// Projection the strategy implicitly orders by: local timestamps for LwwTimestamp, hybrid for
/// the causal strategies, none for server arrival (ordered by the server, not by a clock).
[[nodiscard]] std::optional<ProjectionKey> resolution_projection(const Strategy& s);

/// Re-checks each finding against the trace; returns one message per unsupported finding.
[[nodiscard]] std::vector<std::string> audit_findings(const Trace& trace, const std::vector<Finding>& findings);

struct FitoVerdict {
  bool forward_commitment = false;
  bool absent_reflection = false;
  bool completion_masquerade = false;
  bool invisible_corruption = false;
  /// One line of evidence per condition, in the order above.
  std::array<std::string, 4> evidence;

  [[nodiscard]] bool pattern_present() const {
    return forward_commitment && absent_reflection && completion_masquerade && invisible_corruption;
  }
};

[[nodiscard]] FitoVerdict classify_fito(const Trace& trace, const std::vector<Finding>& findings);

}  // namespace fitolab
