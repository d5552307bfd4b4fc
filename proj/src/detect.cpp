#include "fitolab/detect.hpp"

#include <algorithm>
#include <functional>

namespace fitolab {

std::string_view to_string(Pathology p) {
  switch (p) {
    case Pathology::SilentDeletion: return "SilentDeletion";
    case Pathology::PhantomMessage: return "PhantomMessage";
    case Pathology::LostReadState: return "LostReadState";
    case Pathology::MissingMove: return "MissingMove";
    case Pathology::StuckSync: return "StuckSync";
    case Pathology::CausalInversion: return "CausalInversion";
  }
  return "?";
}

namespace {

using MemberPredicate = std::function<bool(const PrimitiveAction&)>;

// Op ids with a member on `key` satisfying `pred`, in id order.
std::vector<OpId> ops_on(const Trace& trace, const std::string& key, const MemberPredicate& pred) {
  std::vector<OpId> out;
  for (const auto& [id, op] : trace.graph.nodes()) {
    for (const auto& m : members_of(op.kind)) {
      if (object_key(m) == key && pred(m)) {
        out.push_back(id);
        break;
      }
    }
  }
  return out;
}

// Members of `ids` that no other member happens-after.
std::vector<OpId> maximal(const CausalGraph& graph, const std::vector<OpId>& ids) {
  std::vector<OpId> out;
  for (const auto& a : ids) {
    const bool dominated = std::ranges::any_of(ids, [&](const OpId& b) { return graph.happens_before(a, b); });
    if (!dominated) out.push_back(a);
  }
  return out;
}

// The read flag `op` leaves on `key`, from its last flag member.
bool flag_value(const Operation& op, const std::string& key) {
  bool value = false;
  for (const auto& m : members_of(op.kind)) {
    if (object_key(m) != key) continue;
    if (std::holds_alternative<action::MarkRead>(m)) value = true;
    if (std::holds_alternative<action::MarkUnread>(m)) value = false;
  }
  return value;
}

std::string move_target(const Operation& op, const std::string& key) {
  std::string folder;
  for (const auto& m : members_of(op.kind)) {
    if (object_key(m) == key && std::holds_alternative<action::Move>(m)) folder = std::get<action::Move>(m).folder;
  }
  return folder;
}

bool ends_deleted(const Operation& op, const std::string& key) {
  bool deleted = false;
  for (const auto& m : members_of(op.kind)) {
    if (object_key(m) != key) continue;
    if (std::holds_alternative<action::DeleteMsg>(m)) deleted = true;
    if (std::holds_alternative<action::Compose>(m)) deleted = false;
  }
  return deleted;
}

std::set<std::string> object_universe(const Trace& trace, bool docs) {
  std::set<std::string> keys;
  for (const auto& [id, op] : trace.graph.nodes()) {
    for (const auto& k : object_keys(op.kind)) {
      if (is_doc_key(k) == docs) keys.insert(k);
    }
  }
  return keys;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_ids(const std::vector<OpId>& ids) {
  std::vector<std::string> parts;
  for (const auto& id : ids) parts.push_back(to_string(id));
  return join(parts, ",");
}

std::vector<ReplicaId> all_replicas(const Trace& trace) {
  std::vector<ReplicaId> out;
  for (const auto& [id, snap] : trace.finals) out.push_back(id);
  return out;
}

const MailView* final_view(const Trace& trace, const ReplicaId& r, const std::string& msg) {
  auto rit = trace.final_mail.find(r);
  if (rit == trace.final_mail.end()) return nullptr;
  auto it = rit->second.find(msg);
  return it == rit->second.end() ? nullptr : &it->second;
}

bool carried_anywhere(const Trace& trace, const std::string& doc, const OpId& id) {
  for (const auto& [r, store] : trace.final_docs) {
    auto it = store.find(doc);
    if (it == store.end()) continue;
    for (const auto& v : it->second) {
      if (carried_origins(v).contains(id)) return true;
    }
  }
  return false;
}

bool notified(const Trace& trace, const std::string& key, const OpId& id) {
  return std::ranges::any_of(trace.notices, [&](const NoticeRecord& n) {
    return n.object == key && std::ranges::find(n.versions, id) != n.versions.end();
  });
}

std::vector<std::string> divergent_objects(const Trace& trace) {
  std::set<std::string> keys;
  for (const auto& [r, snap] : trace.finals) {
    for (const auto& [k, v] : snap.objects) keys.insert(k);
  }
  std::vector<std::string> out;
  for (const auto& k : keys) {
    std::optional<std::string> first;
    for (const auto& [r, snap] : trace.finals) {
      auto it = snap.objects.find(k);
      const std::string state = it == snap.objects.end() ? std::string{} : it->second;
      if (!first) {
        first = state;
      } else if (*first != state) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

template <class A>
bool is(const PrimitiveAction& m) {
  return std::holds_alternative<A>(m);
}

bool writes_doc(const PrimitiveAction& m) {
  return is<action::WriteDoc>(m) || is<action::CreateDoc>(m) || is<action::DeleteDoc>(m);
}

bool sets_flag(const PrimitiveAction& m) { return is<action::MarkRead>(m) || is<action::MarkUnread>(m); }

bool touches_existence(const PrimitiveAction& m) { return is<action::DeleteMsg>(m) || is<action::Compose>(m); }

}  // namespace

std::vector<Finding> detect_silent_deletion(const Trace& trace) {
  std::vector<Finding> out;
  for (const auto& key : object_universe(trace, true)) {
    const auto doc = object_name(key);
    for (const auto& id : maximal(trace.graph, ops_on(trace, key, writes_doc))) {
      if (carried_anywhere(trace, doc, id) || notified(trace, key, id)) continue;
      Finding f;
      f.pathology = Pathology::SilentDeletion;
      f.object = key;
      f.ops = {id};
      f.replicas = all_replicas(trace);
      f.explanation = "version " + to_string(id) + " of " + key +
                      " is causally maximal but absent from every final state, with no conflict notice";
      out.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<Finding> detect_phantom(const Trace& trace) {
  std::vector<Finding> out;
  for (const auto& key : object_universe(trace, false)) {
    const auto last = maximal(trace.graph, ops_on(trace, key, touches_existence));
    if (last.empty()) continue;
    const bool all_delete =
        std::ranges::all_of(last, [&](const OpId& id) { return ends_deleted(trace.graph.at(id), key); });
    if (!all_delete) continue;
    Finding f;
    f.pathology = Pathology::PhantomMessage;
    f.object = key;
    f.ops = last;
    for (const auto& [r, mail] : trace.final_mail) {
      const auto* v = final_view(trace, r, object_name(key));
      if (v && v->exists) f.replicas.push_back(r);
    }
    if (f.replicas.empty()) continue;
    f.explanation = key + " was deleted by " + join_ids(last) + " and nothing causally later recreated it, yet it is present on " +
                    join(f.replicas, ",");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Finding> detect_lost_read(const Trace& trace) {
  std::vector<Finding> out;
  for (const auto& key : object_universe(trace, false)) {
    const auto last = maximal(trace.graph, ops_on(trace, key, sets_flag));
    if (last.empty()) continue;
    std::set<bool> values;
    for (const auto& id : last) values.insert(flag_value(trace.graph.at(id), key));
    if (values.size() != 1) continue;
    const bool expected = *values.begin();
    Finding f;
    f.pathology = Pathology::LostReadState;
    f.object = key;
    f.ops = last;
    for (const auto& [r, mail] : trace.final_mail) {
      const auto* v = final_view(trace, r, object_name(key));
      if (v && v->exists && v->read != expected) f.replicas.push_back(r);
    }
    if (f.replicas.empty()) continue;
    f.explanation = "causally last flag ops " + join_ids(last) + " leave " + key + (expected ? " read" : " unread") +
                    " but " + join(f.replicas, ",") + " show it " + (expected ? "unread" : "read");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Finding> detect_missing_move(const Trace& trace) {
  std::vector<Finding> out;
  for (const auto& key : object_universe(trace, false)) {
    const auto last = maximal(trace.graph, ops_on(trace, key, is<action::Move>));
    if (last.empty()) continue;
    std::set<std::string> targets;
    for (const auto& id : last) targets.insert(move_target(trace.graph.at(id), key));
    if (targets.size() != 1) continue;
    const auto& folder = *targets.begin();
    Finding f;
    f.pathology = Pathology::MissingMove;
    f.object = key;
    f.ops = last;
    for (const auto& [r, mail] : trace.final_mail) {
      const auto* v = final_view(trace, r, object_name(key));
      if (v && v->exists && std::ranges::find(v->folders, folder) == v->folders.end()) f.replicas.push_back(r);
    }
    if (f.replicas.empty()) continue;
    f.explanation = key + " was last moved to " + folder + " by " + join_ids(last) + " but never appears there on " +
                    join(f.replicas, ",");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Finding> detect_stuck(const Trace& trace, std::uint64_t threshold) {
  std::vector<Finding> out;
  std::map<std::string, std::vector<ReplicaId>> flipping;
  for (const auto& [slot, count] : trace.revisits) {
    if (count >= threshold) flipping[slot.second].push_back(slot.first);
  }
  for (const auto& [key, replicas] : flipping) {
    Finding f;
    f.pathology = Pathology::StuckSync;
    f.object = key;
    f.ops = ops_on(trace, key, [](const PrimitiveAction&) { return true; });
    f.replicas = replicas;
    f.explanation = key + " re-entered an earlier state at least " + std::to_string(threshold) + " times on " +
                    join(replicas, ",");
    out.push_back(std::move(f));
  }

  const auto diverged = divergent_objects(trace);
  if (!diverged.empty()) {
    Finding f;
    f.pathology = Pathology::StuckSync;
    f.replicas = all_replicas(trace);
    for (const auto& key : diverged) {
      auto ids = ops_on(trace, key, [](const PrimitiveAction&) { return true; });
      f.ops.insert(f.ops.end(), ids.begin(), ids.end());
    }
    std::ranges::sort(f.ops);
    f.ops.erase(std::unique(f.ops.begin(), f.ops.end()), f.ops.end());
    f.explanation = std::string(trace.terminal == Terminal::MaxEvents ? "event bound reached" : "quiescent") +
                    " with replicas disagreeing on " + join(diverged, ",");
    out.push_back(std::move(f));
  }
  return out;
}

std::optional<ProjectionKey> resolution_projection(const Strategy& s) {
  if (s.base == BaseStrategy::LwwServerArrival) return std::nullopt;
  return s.base == BaseStrategy::LwwTimestamp ? ProjectionKey::ByLocalTimestamp : ProjectionKey::ByHybrid;
}

std::vector<Finding> detect_causal_inversion(const Trace& trace) {
  std::vector<Finding> out;
  const auto projection = resolution_projection(trace.config.strategy);
  if (!projection) return out;
  const auto key = *projection;
  for (const auto& [a, b] : detect_inversions(trace.graph, linear_projection(trace.graph, key))) {
    Finding f;
    f.pathology = Pathology::CausalInversion;
    const auto keys = object_keys(trace.graph.at(b).kind);
    if (!keys.empty()) f.object = *keys.begin();
    f.ops = {a, b};
    f.replicas = {a.replica};
    if (b.replica != a.replica) f.replicas.push_back(b.replica);
    f.explanation = to_string(a) + " happens before " + to_string(b) + " but " + std::string(to_string(key)) +
                    " places it after";
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Finding> detect_all(const Trace& trace) {
  std::vector<Finding> out;
  for (auto part : {detect_silent_deletion(trace), detect_phantom(trace), detect_lost_read(trace),
                    detect_missing_move(trace), detect_stuck(trace), detect_causal_inversion(trace)}) {
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<std::string> audit_findings(const Trace& trace, const std::vector<Finding>& findings) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const auto& f = findings[i];
    const auto tag = "finding " + std::to_string(i) + " (" + std::string(to_string(f.pathology)) + "): ";
    auto fail = [&](const std::string& why) { problems.push_back(tag + why); };

    if (std::ranges::any_of(f.ops, [&](const OpId& id) { return !trace.graph.contains(id); })) {
      fail("witness op not in the causal graph");
      continue;
    }
    if (std::ranges::any_of(f.replicas, [&](const ReplicaId& r) { return !trace.finals.contains(r); })) {
      fail("witness replica has no final snapshot");
      continue;
    }
    const auto name = f.object.empty() ? std::string{} : object_name(f.object);
    switch (f.pathology) {
      case Pathology::SilentDeletion:
        if (f.ops.size() != 1) fail("expects exactly one witness version");
        else if (carried_anywhere(trace, name, f.ops.front())) fail("version survives in a final state");
        else if (notified(trace, f.object, f.ops.front())) fail("version was named in a conflict notice");
        break;
      case Pathology::PhantomMessage:
        for (const auto& r : f.replicas) {
          const auto* v = final_view(trace, r, name);
          if (!v || !v->exists) fail(r + " does not show the message");
        }
        break;
      case Pathology::LostReadState: {
        const bool expected = flag_value(trace.graph.at(f.ops.front()), f.object);
        for (const auto& r : f.replicas) {
          const auto* v = final_view(trace, r, name);
          if (!v || v->read == expected) fail(r + " shows the expected flag");
        }
        break;
      }
      case Pathology::MissingMove: {
        const auto folder = move_target(trace.graph.at(f.ops.front()), f.object);
        for (const auto& r : f.replicas) {
          const auto* v = final_view(trace, r, name);
          if (!v || std::ranges::find(v->folders, folder) != v->folders.end()) fail(r + " shows the target folder");
        }
        break;
      }
      case Pathology::StuckSync: {
        const bool flipping = std::ranges::any_of(trace.revisits, [&](const auto& kv) {
          return kv.first.second == f.object && kv.second >= kFlipFlopThreshold;
        });
        if (!flipping && divergent_objects(trace).empty()) fail("replicas agree and nothing flip-flopped");
        break;
      }
      case Pathology::CausalInversion: {
        if (f.ops.size() != 2 || !trace.graph.happens_before(f.ops[0], f.ops[1])) {
          fail("witness pair is not causally ordered");
          break;
        }
        const auto projection = resolution_projection(trace.config.strategy);
        if (!projection) {
          fail("strategy does not order by a clock projection");
          break;
        }
        const auto chain = linear_projection(trace.graph, *projection);
        const auto pa = std::ranges::find(chain.order, f.ops[0]);
        const auto pb = std::ranges::find(chain.order, f.ops[1]);
        if (pa < pb) fail("projection keeps the pair in causal order");
        break;
      }
    }
  }
  return problems;
}

FitoVerdict classify_fito(const Trace& trace, const std::vector<Finding>& findings) {
  FitoVerdict v;
  const auto& s = trace.config.strategy;
  v.forward_commitment = forward_committing(s);
  v.evidence[0] = to_string(s) + (v.forward_commitment ? " discards on an ordering key without recording the loser"
                                                       : " keeps or merges every concurrent version");

  v.absent_reflection = trace.config.mode == SignalMode::CompletionOnly;
  v.evidence[1] = v.absent_reflection ? "completion is signaled at placement, before any replica applies the op"
                                      : "commitment waits for every replica to acknowledge matching state";

  const auto masked = std::ranges::find_if(trace.signals, [](const SignalRecord& r) {
    return r.phase == TransactionPhase::T4_Completion && r.divergent;
  });
  v.completion_masquerade = masked != trace.signals.end();
  v.evidence[2] = v.completion_masquerade
                      ? "T4 for " + to_string(masked->op) + " at " + format_nanos(masked->at.nanos) +
                            " while replicas disagreed"
                      : "no completion signal was emitted while replicas disagreed";

  const auto surfaced = std::ranges::count_if(trace.lines, [](const TraceLine& l) {
    return l.user_visible && !l.text.starts_with("server signal");
  });
  v.invisible_corruption = !findings.empty() && surfaced == 0;
  if (findings.empty()) {
    v.evidence[3] = "no findings";
  } else {
    v.evidence[3] = std::to_string(findings.size()) + " finding(s), " + std::to_string(surfaced) +
                    " user-visible notice(s) or rejection(s)";
  }
  return v;
}

}  // namespace fitolab
