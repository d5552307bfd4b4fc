#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fitolab/clock.hpp"
#include "fitolab/oplog.hpp"

namespace fitolab {

/// Replica id used as the origin of seeded (pre-existing) state.
inline const ReplicaId kSeedReplica = "~seed";

/// One version of a document; the unit a timestamp strategy discards.
struct DocVersion {
  std::string doc;
  std::vector<std::string> paragraphs;
  bool deleted = false;
  VectorClock vclock;
  LocalTimestamp local_ts;
  OpId origin;
  std::optional<std::uint64_t> arrival;
  /// Origins folded into this version by a semantic merge (empty otherwise).
  std::set<OpId> merged_from;

  friend bool operator==(const DocVersion&, const DocVersion&) = default;
};

/// Every origin a version carries: its own plus anything merged into it.
[[nodiscard]] std::set<OpId> carried_origins(const DocVersion& v);

/// doc-id -> surviving versions, sorted by origin. More than one only when materialized.
using DocStore = std::map<std::string, std::vector<DocVersion>>;

/// A message's absolute state stamped with the op that wrote it; what a timestamp register holds.
struct RecordVersion {
  MailRecord record;
  OpId origin;
  LocalTimestamp local_ts;
  std::optional<std::uint64_t> arrival;
  friend bool operator==(const RecordVersion&, const RecordVersion&) = default;
};

struct MsgState {
  std::string id;
  std::string body;

  // Observed-remove representation: membership is the presence of surviving add-tags.
  bool created = false;
  std::set<OpId> read_tags;
  std::map<std::string, std::set<OpId>> folder_tags;
  std::set<OpId> deleted_tags;

  // Register representation, used by the timestamp strategies.
  RecordVersion reg;

  friend bool operator==(const MsgState&, const MsgState&) = default;
};

using Mailbox = std::map<std::string, MsgState>;

/// What a user would see of a message.
struct MailView {
  bool exists = false;
  bool read = false;
  std::vector<std::string> folders;
  bool deleted = false;
  friend bool operator==(const MailView&, const MailView&) = default;
};

[[nodiscard]] std::string render(const MailView& view);

}  // namespace fitolab
