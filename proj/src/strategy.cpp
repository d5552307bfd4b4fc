#include "fitolab/strategy.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace fitolab {

std::set<OpId> carried_origins(const DocVersion& v) {
  std::set<OpId> out = v.merged_from;
  out.insert(v.origin);
  return out;
}

std::string render(const MailView& view) {
  std::string folders = "[";
  for (std::size_t i = 0; i < view.folders.size(); ++i) {
    if (i) folders += ',';
    folders += view.folders[i];
  }
  folders += ']';
  return std::string("exists=") + (view.exists ? "1" : "0") + " read=" + (view.read ? "1" : "0") +
         " folders=" + folders + " deleted=" + (view.deleted ? "1" : "0");
}

std::string_view to_string(BaseStrategy s) {
  switch (s) {
    case BaseStrategy::LwwTimestamp: return "LwwTimestamp";
    case BaseStrategy::LwwServerArrival: return "LwwServerArrival";
    case BaseStrategy::MultiValueMaterialize: return "MultiValueMaterialize";
    case BaseStrategy::ConvergentSets: return "ConvergentSets";
    case BaseStrategy::SemanticMerge: return "SemanticMerge";
  }
  return "?";
}

std::string to_string(const Strategy& s) {
  std::string base{to_string(s.base)};
  return s.transactional ? "Transactional(" + base + ")" : base;
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  static constexpr BaseStrategy kBases[] = {BaseStrategy::LwwTimestamp, BaseStrategy::LwwServerArrival,
                                            BaseStrategy::MultiValueMaterialize, BaseStrategy::ConvergentSets,
                                            BaseStrategy::SemanticMerge};
  auto parse_base = [](std::string_view n) -> std::optional<BaseStrategy> {
    for (auto b : kBases) {
      if (to_string(b) == n) return b;
    }
    return std::nullopt;
  };
  if (name == "Transactional") return Strategy{BaseStrategy::MultiValueMaterialize, true};
  constexpr std::string_view kPrefix = "Transactional(";
  if (name.starts_with(kPrefix) && name.ends_with(")")) {
    auto inner = parse_base(name.substr(kPrefix.size(), name.size() - kPrefix.size() - 1));
    if (!inner) return std::nullopt;
    return Strategy{*inner, true};
  }
  if (auto b = parse_base(name)) return Strategy{*b, false};
  return std::nullopt;
}

std::vector<Strategy> all_strategies() {
  return {
      {BaseStrategy::LwwTimestamp, false},  {BaseStrategy::LwwServerArrival, false},
      {BaseStrategy::MultiValueMaterialize, false}, {BaseStrategy::ConvergentSets, false},
      {BaseStrategy::SemanticMerge, false}, {BaseStrategy::MultiValueMaterialize, true},
  };
}

bool is_lww(const Strategy& s) {
  return s.base == BaseStrategy::LwwTimestamp || s.base == BaseStrategy::LwwServerArrival;
}

bool forward_committing(const Strategy& s) { return is_lww(s); }

namespace {

// Ordering key of a timestamp register; larger wins. Unplaced local writes count as latest arrival.
template <class V>
std::tuple<std::int64_t, OpId> lww_key(BaseStrategy base, const V& v) {
  if (base == BaseStrategy::LwwServerArrival) {
    const auto arrival = v.arrival ? static_cast<std::int64_t>(*v.arrival) : std::numeric_limits<std::int64_t>::max();
    return {arrival, v.origin};
  }
  return {v.local_ts.nanos, v.origin};
}

}  // namespace

bool lww_less(BaseStrategy base, const DocVersion& a, const DocVersion& b) { return lww_key(base, a) < lww_key(base, b); }

bool lww_less(BaseStrategy base, const RecordVersion& a, const RecordVersion& b) {
  return lww_key(base, a) < lww_key(base, b);
}

namespace {

bool dominated_by(const DocVersion& v, const DocVersion& by) {
  return vc_compare(v.vclock, by.vclock) == CausalOrdering::Before;
}

void sort_by_origin(std::vector<DocVersion>& versions) {
  std::ranges::sort(versions, {}, &DocVersion::origin);
}

// Maximal versions under vector-clock order; the rest go to `discarded`.
Resolution<DocVersion> materialize(std::vector<DocVersion> candidates) {
  Resolution<DocVersion> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < candidates.size() && !dominated; ++j) {
      if (i == j) continue;
      dominated = dominated_by(candidates[i], candidates[j]) ||
                  (candidates[i].vclock == candidates[j].vclock && candidates[i].origin < candidates[j].origin);
    }
    (dominated ? out.discarded : out.survivors).push_back(candidates[i]);
  }
  sort_by_origin(out.survivors);
  sort_by_origin(out.discarded);
  out.notified = out.survivors.size() > 1;
  return out;
}

bool dominates_or_equal(const VectorClock& big, const VectorClock& small) {
  const auto ord = vc_compare(small, big);
  return ord == CausalOrdering::Before || ord == CausalOrdering::Equal;
}

// Latest version both sides descend from; an empty document when none is known.
DocVersion find_base(std::span<const DocVersion> history, const DocVersion& a, const DocVersion& b) {
  const DocVersion* best = nullptr;
  for (const auto& h : history) {
    if (h.doc != a.doc || !dominates_or_equal(a.vclock, h.vclock) || !dominates_or_equal(b.vclock, h.vclock)) continue;
    if (best == nullptr || dominated_by(*best, h) ||
        (vc_compare(best->vclock, h.vclock) == CausalOrdering::Concurrent && best->origin < h.origin)) {
      best = &h;
    }
  }
  if (best) return *best;
  DocVersion empty;
  empty.doc = a.doc;
  empty.origin = OpId{kSeedReplica, 0};
  return empty;
}

}  // namespace

MergeResult merge_doc(const DocVersion& base, const DocVersion& a, const DocVersion& b) {
  MergeResult result;
  DocVersion merged;
  merged.doc = a.doc;
  merged.vclock = vc_merge(a.vclock, b.vclock);
  merged.local_ts = std::max(a.local_ts, b.local_ts);
  merged.origin = std::max(a.origin, b.origin);
  if (a.arrival || b.arrival) merged.arrival = std::max(a.arrival.value_or(0), b.arrival.value_or(0));
  merged.merged_from = carried_origins(a);
  const auto from_b = carried_origins(b);
  merged.merged_from.insert(from_b.begin(), from_b.end());
  merged.merged_from.erase(merged.origin);

  auto unchanged = [&](const DocVersion& v) { return v.deleted == base.deleted && v.paragraphs == base.paragraphs; };

  if (a.deleted || b.deleted) {
    if (a.deleted && b.deleted) {
      merged.deleted = true;
    } else if ((a.deleted && unchanged(b)) || (b.deleted && unchanged(a))) {
      merged.deleted = true;
    } else {
      result.whole_doc_conflict = true;
      return result;
    }
    result.merged = std::move(merged);
    return result;
  }

  const auto n0 = base.paragraphs.size();
  const auto na = a.paragraphs.size();
  const auto nb = b.paragraphs.size();
  if (na != n0 && nb != n0 && na != nb) {
    result.whole_doc_conflict = true;
    return result;
  }

  auto at = [](const DocVersion& v, std::size_t i) -> std::optional<std::string> {
    if (i < v.paragraphs.size()) return v.paragraphs[i];
    return std::nullopt;
  };
  const auto n = std::max({n0, na, nb});
  for (std::size_t i = 0; i < n; ++i) {
    const auto pa = at(a, i);
    const auto pb = at(b, i);
    const auto p0 = at(base, i);
    std::optional<std::string> pick;
    if (pa == pb || pb == p0) {
      pick = pa;
    } else if (pa == p0) {
      pick = pb;
    } else {
      result.conflicts.push_back(i);
      continue;
    }
    if (pick) merged.paragraphs.push_back(*pick);
  }
  if (result.conflicts.empty()) result.merged = std::move(merged);
  return result;
}

Resolution<DocVersion> resolve_doc(const Strategy& s, std::span<const DocVersion> local, const DocVersion& incoming,
                                   std::span<const DocVersion> history) {
  for (const auto& v : local) {
    if (v.doc != incoming.doc) throw std::invalid_argument("doc id mismatch: " + v.doc + " vs " + incoming.doc);
  }
  std::vector<DocVersion> candidates(local.begin(), local.end());
  if (std::ranges::none_of(local, [&](const DocVersion& v) { return v.origin == incoming.origin; })) {
    candidates.push_back(incoming);
  }

  if (is_lww(s)) {
    Resolution<DocVersion> out;
    auto winner = std::ranges::max_element(
        candidates, [&](const DocVersion& x, const DocVersion& y) { return lww_key(s.base, x) < lww_key(s.base, y); });
    for (auto it = candidates.begin(); it != candidates.end(); ++it) {
      (it == winner ? out.survivors : out.discarded).push_back(*it);
    }
    sort_by_origin(out.discarded);
    return out;
  }

  auto out = materialize(std::move(candidates));
  if (s.base != BaseStrategy::SemanticMerge || out.survivors.size() < 2) return out;

  std::vector<DocVersion> bases(history.begin(), history.end());
  bases.insert(bases.end(), local.begin(), local.end());
  DocVersion acc = out.survivors.front();
  for (std::size_t i = 1; i < out.survivors.size(); ++i) {
    const auto base = find_base(bases, acc, out.survivors[i]);
    auto merged = merge_doc(base, acc, out.survivors[i]);
    if (!merged.merged) return out;  // conflict stays materialized and notified
    acc = std::move(*merged.merged);
  }
  Resolution<DocVersion> folded;
  folded.discarded = out.discarded;
  folded.discarded.insert(folded.discarded.end(), out.survivors.begin(), out.survivors.end());
  sort_by_origin(folded.discarded);
  folded.survivors.push_back(std::move(acc));
  return folded;
}

namespace {

void erase_tags(std::set<OpId>& from, const std::set<OpId>& tags) {
  for (const auto& t : tags) from.erase(t);
}

const std::set<OpId>& removed(const Operation& op, const std::string& key) {
  static const std::set<OpId> kEmpty;
  auto it = op.removed_tags.find(key);
  return it == op.removed_tags.end() ? kEmpty : it->second;
}

void drop_other_folders(MsgState& state, const Operation& op, const std::string& keep) {
  for (auto& [folder, tags] : state.folder_tags) {
    if (folder != keep) erase_tags(tags, removed(op, state.id + "/folder/" + folder));
  }
  std::erase_if(state.folder_tags, [](const auto& kv) { return kv.second.empty(); });
}

}  // namespace

MsgState set_apply(MsgState state, const Operation& op) {
  for (const auto& member : members_of(op.kind)) {
    if (object_key(member) != "msg:" + state.id) continue;
    std::visit(
        [&](const auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, action::MarkRead>) {
            state.read_tags.insert(op.id);
          } else if constexpr (std::is_same_v<A, action::MarkUnread>) {
            erase_tags(state.read_tags, removed(op, state.id + "/read"));
          } else if constexpr (std::is_same_v<A, action::Move>) {
            drop_other_folders(state, op, a.folder);
            state.folder_tags[a.folder].insert(op.id);
          } else if constexpr (std::is_same_v<A, action::DeleteMsg>) {
            state.deleted_tags.insert(op.id);
          } else if constexpr (std::is_same_v<A, action::Compose>) {
            state.created = true;
            if (auto it = op.mail_records.find(state.id); it != op.mail_records.end()) state.body = it->second.body;
            erase_tags(state.deleted_tags, removed(op, state.id + "/deleted"));
            drop_other_folders(state, op, "sent");
            state.folder_tags["sent"].insert(op.id);
            state.read_tags.insert(op.id);
          }
        },
        member);
  }
  return state;
}

std::pair<MsgState, Resolution<RecordVersion>> register_apply(const Strategy& s, MsgState state, const Operation& op) {
  Resolution<RecordVersion> res;
  auto it = op.mail_records.find(state.id);
  if (it == op.mail_records.end() || state.reg.origin == op.id) {
    res.survivors.push_back(state.reg);
    return {std::move(state), std::move(res)};
  }
  RecordVersion incoming{it->second, op.id, op.local_ts, op.arrival};
  if (lww_key(s.base, state.reg) < lww_key(s.base, incoming)) {
    res.discarded.push_back(state.reg);
    res.survivors.push_back(incoming);
    state.reg = std::move(incoming);
    if (state.reg.record.exists) state.body = state.reg.record.body;
  } else {
    res.survivors.push_back(state.reg);
    res.discarded.push_back(std::move(incoming));
  }
  return {std::move(state), std::move(res)};
}

MailView view_of(const Strategy& s, const MsgState& state) {
  MailView view;
  if (is_lww(s)) {
    const auto& r = state.reg.record;
    if (!r.exists) return view;
    view.exists = !r.deleted;
    view.read = r.read;
    view.folders = {r.folder};
    view.deleted = r.deleted;
    return view;
  }
  if (!state.created) return view;
  view.deleted = !state.deleted_tags.empty();
  view.exists = !view.deleted;
  view.read = !state.read_tags.empty();
  for (const auto& [folder, tags] : state.folder_tags) {
    if (!tags.empty()) view.folders.push_back(folder);
  }
  return view;
}

std::vector<OpKind> txn_commit(const Strategy& s, const OpKind& kind) {
  const auto* group = std::get_if<TxnGroup>(&kind);
  if (group == nullptr) return {kind};
  if (group->members.empty()) throw std::invalid_argument("empty TxnGroup");
  if (s.transactional) return {kind};
  std::vector<OpKind> units;
  for (const auto& m : group->members) units.push_back(to_kind(m));
  return units;
}

}  // namespace fitolab
