#include "fitolab/replica.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace fitolab {

namespace {

constexpr std::int64_t kSeedTimestamp = std::numeric_limits<std::int64_t>::min();

MsgState empty_msg(const std::string& id) {
  MsgState m;
  m.id = id;
  m.reg.origin = OpId{kSeedReplica, 0};
  m.reg.local_ts = LocalTimestamp{kSeedTimestamp};
  m.reg.arrival = 0;
  return m;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string render_versions(const std::vector<DocVersion>& versions) {
  std::string out;
  for (std::size_t i = 0; i < versions.size(); ++i) {
    const auto& v = versions[i];
    if (i) out += " || ";
    out += to_string(v.origin);
    if (!v.merged_from.empty()) {
      out += "+{";
      bool first = true;
      for (const auto& m : v.merged_from) {
        if (!first) out += ',';
        first = false;
        out += to_string(m);
      }
      out += '}';
    }
    if (v.deleted) {
      out += " deleted";
      continue;
    }
    out += " [";
    for (std::size_t p = 0; p < v.paragraphs.size(); ++p) {
      if (p) out += ',';
      out += quote(v.paragraphs[p]);
    }
    out += ']';
  }
  return out;
}

}  // namespace

Replica::Replica(ReplicaId id, ClockModel clock, Strategy strategy, bool causal_delivery, bool online)
    : id_(std::move(id)),
      clock_(std::move(clock)),
      strategy_(strategy),
      causal_delivery_(causal_delivery),
      online_(online) {}

void Replica::seed_doc(const std::string& doc, std::vector<std::string> paragraphs, std::uint64_t seed_index) {
  DocVersion v;
  v.doc = doc;
  v.paragraphs = std::move(paragraphs);
  v.local_ts = LocalTimestamp{kSeedTimestamp};
  v.origin = OpId{kSeedReplica, seed_index};
  v.arrival = 0;
  store_[doc] = {v};
  history_[doc] = {v};
}

void Replica::seed_msg(const std::string& msg, const std::string& folder, bool read, std::string body,
                       std::uint64_t seed_index) {
  auto m = empty_msg(msg);
  const OpId tag{kSeedReplica, seed_index};
  m.body = body;
  m.created = true;
  if (read) m.read_tags.insert(tag);
  m.folder_tags[folder].insert(tag);
  m.reg.origin = tag;
  m.reg.local_ts = LocalTimestamp{kSeedTimestamp};
  m.reg.arrival = 0;
  m.reg.record = MailRecord{true, read, folder, false, std::move(body)};
  mailbox_[msg] = std::move(m);
}

void Replica::validate(const PrimitiveAction& a) const {
  auto need_msg = [&](const std::string& msg) {
    if (!mailbox_.contains(msg)) throw ReplicaError(id_ + ": unknown message " + msg);
  };
  std::visit(
      [&](const auto& x) {
        using A = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<A, action::WriteDoc>) {
          auto it = store_.find(x.doc);
          if (it == store_.end()) throw ReplicaError(id_ + ": unknown document " + x.doc);
          if (x.paragraph > it->second.front().paragraphs.size()) {
            throw ReplicaError(id_ + ": paragraph " + std::to_string(x.paragraph) + " out of range in " + x.doc);
          }
        } else if constexpr (std::is_same_v<A, action::DeleteDoc>) {
          if (!store_.contains(x.doc)) throw ReplicaError(id_ + ": unknown document " + x.doc);
        } else if constexpr (std::is_same_v<A, action::CreateDoc>) {
        } else if constexpr (std::is_same_v<A, action::Compose>) {
          if (x.in_reply_to) need_msg(*x.in_reply_to);
        } else {
          need_msg(x.msg);
        }
      },
      a);
}

// Computes the op's absolute payload by replaying its members on a scratch copy of local state.
void Replica::fill_payload(Operation& op) const {
  std::map<std::string, DocContent> docs;
  std::map<std::string, MsgState> msgs;
  std::map<std::string, MailRecord> records;

  for (const auto& member : members_of(op.kind)) {
    const auto key = object_key(member);
    const auto name = object_name(key);
    if (is_doc_key(key)) {
      if (!docs.contains(name)) {
        DocContent current;
        if (auto it = store_.find(name); it != store_.end()) {
          current.paragraphs = it->second.front().paragraphs;
          current.deleted = it->second.front().deleted;
        }
        docs.emplace(name, std::move(current));
      }
      auto& doc = docs[name];
      std::visit(
          [&](const auto& x) {
            using A = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<A, action::WriteDoc>) {
              if (x.paragraph >= doc.paragraphs.size()) doc.paragraphs.resize(x.paragraph + 1);
              doc.paragraphs[x.paragraph] = x.content;
            } else if constexpr (std::is_same_v<A, action::CreateDoc>) {
              doc.paragraphs.clear();
              std::size_t start = 0;
              for (;;) {
                const auto bar = x.content.find('|', start);
                doc.paragraphs.push_back(x.content.substr(start, bar - start));
                if (bar == std::string::npos) break;
                start = bar + 1;
              }
              doc.deleted = false;
            } else if constexpr (std::is_same_v<A, action::DeleteDoc>) {
              doc.paragraphs.clear();
              doc.deleted = true;
            }
          },
          member);
      continue;
    }

    if (!msgs.contains(name)) {
      auto it = mailbox_.find(name);
      msgs.emplace(name, it == mailbox_.end() ? empty_msg(name) : it->second);
      MailRecord rec;
      if (is_lww(strategy_)) {
        rec = msgs[name].reg.record;
      } else {
        const auto view = view_of(strategy_, msgs[name]);
        rec = MailRecord{msgs[name].created, view.read, view.folders.empty() ? "" : view.folders.front(),
                         view.deleted, msgs[name].body};
      }
      records.emplace(name, std::move(rec));
    }
    auto& state = msgs[name];
    auto& rec = records[name];
    auto observe = [&](const std::string& field, const std::set<OpId>& tags) {
      op.removed_tags[name + "/" + field].insert(tags.begin(), tags.end());
    };
    std::visit(
        [&](const auto& x) {
          using A = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<A, action::MarkRead>) {
            rec.read = true;
          } else if constexpr (std::is_same_v<A, action::MarkUnread>) {
            observe("read", state.read_tags);
            rec.read = false;
          } else if constexpr (std::is_same_v<A, action::Move>) {
            for (const auto& [folder, tags] : state.folder_tags) {
              if (folder != x.folder) observe("folder/" + folder, tags);
            }
            rec.folder = x.folder;
          } else if constexpr (std::is_same_v<A, action::DeleteMsg>) {
            rec.deleted = true;
          } else if constexpr (std::is_same_v<A, action::Compose>) {
            observe("deleted", state.deleted_tags);
            for (const auto& [folder, tags] : state.folder_tags) {
              if (folder != "sent") observe("folder/" + folder, tags);
            }
            rec = MailRecord{true, true, "sent", false,
                             x.in_reply_to ? "reply to " + *x.in_reply_to : "new message " + x.msg};
          }
        },
        member);
    // Advance the scratch state with this member alone so later members observe it.
    Operation step;
    step.id = op.id;
    step.kind = to_kind(member);
    step.removed_tags = op.removed_tags;
    step.mail_records = {{name, rec}};
    state = set_apply(std::move(state), step);
  }
  op.doc_content = std::move(docs);
  op.mail_records = std::move(records);
}

Operation Replica::apply_local(const OpKind& kind, TrueTime t) {
  const auto members = members_of(kind);
  if (members.empty()) throw ReplicaError(id_ + ": empty TxnGroup");
  for (const auto& m : members) validate(m);

  Operation op;
  op.id = OpId{id_, next_seq_};
  op.kind = kind;
  op.true_time = t;
  op.local_ts = local_now(clock_, t);
  op.vclock = vc_increment(vclock_, id_);
  op.hybrid = hlc_tick(hybrid_, op.local_ts);

  if (last_local_) op.deps.insert(*last_local_);
  for (const auto& m : members) {
    if (auto it = frontier_.find(object_key(m)); it != frontier_.end()) {
      op.deps.insert(it->second.begin(), it->second.end());
    }
    if (const auto* compose = std::get_if<action::Compose>(&m); compose && compose->in_reply_to) {
      if (auto it = last_mark_read_.find(*compose->in_reply_to); it != last_mark_read_.end()) {
        op.deps.insert(it->second);
      }
    }
  }
  fill_payload(op);

  ++next_seq_;
  vclock_ = op.vclock;
  hybrid_ = op.hybrid;
  integrate(op);
  last_local_ = op.id;
  own_ops_.emplace(op.id, op);
  if (!online_) outbox_.push_back(op);
  return op;
}

bool Replica::deliverable(const Operation& op) const {
  return std::ranges::all_of(op.deps, [&](const OpId& d) { return applied_.contains(d); });
}

ApplyOutcome Replica::apply_remote(const Operation& op, TrueTime t) {
  ApplyOutcome out;
  if (applied_.contains(op.id) ||
      std::ranges::any_of(pending_, [&](const Operation& p) { return p.id == op.id; })) {
    out.duplicate = true;
    return out;
  }
  if (causal_delivery_ && !deliverable(op)) {
    pending_.push_back(op);
    out.buffered = true;
    return out;
  }
  integrate_remote(op, t);
  out.applied.push_back(op.id);

  for (bool progress = true; progress;) {
    progress = false;
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (!deliverable(*it)) continue;
      Operation ready = std::move(*it);
      pending_.erase(it);
      integrate_remote(ready, t);
      out.applied.push_back(ready.id);
      progress = true;
      break;
    }
  }
  return out;
}

void Replica::integrate_remote(const Operation& op, TrueTime t) {
  vclock_ = vc_merge(vclock_, op.vclock);
  hybrid_ = hlc_tick(hybrid_, local_now(clock_, t), op.hybrid);
  integrate(op);
}

void Replica::integrate(const Operation& op) {
  for (const auto& key : object_keys(op.kind)) {
    const auto name = object_name(key);
    ResolutionEvent ev;
    ev.object = key;
    if (is_doc_key(key)) {
      const auto& content = op.doc_content.at(name);
      DocVersion incoming{name, content.paragraphs, content.deleted, op.vclock, op.local_ts, op.id, op.arrival, {}};
      auto& local = store_[name];
      auto& history = history_[name];
      auto res = resolve_doc(strategy_, local, incoming, history);
      history.push_back(incoming);
      for (const auto& s : res.survivors) {
        if (std::ranges::none_of(history, [&](const DocVersion& h) { return h == s; })) history.push_back(s);
      }
      for (const auto& s : res.survivors) ev.survivors.push_back(s.origin);
      for (const auto& d : res.discarded) ev.discarded.push_back(d.origin);
      ev.notified = res.notified;
      local = std::move(res.survivors);
    } else {
      auto it = mailbox_.find(name);
      MsgState state = it == mailbox_.end() ? empty_msg(name) : it->second;
      if (is_lww(strategy_)) {
        if (auto rec = op.mail_records.find(name); rec != op.mail_records.end()) {
          record_history_[name].push_back(RecordVersion{rec->second, op.id, op.local_ts, op.arrival});
        }
        auto [next, res] = register_apply(strategy_, std::move(state), op);
        state = std::move(next);
        for (const auto& s : res.survivors) ev.survivors.push_back(s.origin);
        for (const auto& d : res.discarded) ev.discarded.push_back(d.origin);
      } else {
        state = set_apply(std::move(state), op);
      }
      mailbox_[name] = std::move(state);
    }
    if (!ev.discarded.empty() || ev.notified) resolutions_.push_back(std::move(ev));

    auto& front = frontier_[key];
    for (const auto& d : op.deps) front.erase(d);
    front.insert(op.id);
  }
  for (const auto& m : members_of(op.kind)) {
    if (const auto* read = std::get_if<action::MarkRead>(&m)) last_mark_read_[read->msg] = op.id;
  }
  applied_.insert(op.id);
}

void Replica::confirm_arrival(const OpId& id, std::uint64_t arrival) {
  auto own = own_ops_.find(id);
  if (own == own_ops_.end()) throw ReplicaError(id_ + ": arrival for foreign op " + to_string(id));
  own->second.arrival = arrival;
  for (auto& op : outbox_) {
    if (op.id == id) op.arrival = arrival;
  }
  const bool by_arrival = strategy_.base == BaseStrategy::LwwServerArrival;

  for (const auto& key : object_keys(own->second.kind)) {
    const auto name = object_name(key);
    ResolutionEvent ev;
    ev.object = key;
    if (is_doc_key(key)) {
      auto& history = history_[name];
      auto& local = store_[name];
      for (auto* versions : {&history, &local}) {
        for (auto& v : *versions) {
          if (v.origin == id) v.arrival = arrival;
        }
      }
      if (!by_arrival || local.empty()) continue;
      // A register keeps the largest version it has ever seen; re-pick with the new key.
      auto best = std::ranges::max_element(history, [&](const DocVersion& a, const DocVersion& b) {
        return lww_less(strategy_.base, a, b);
      });
      if (best == history.end() || !lww_less(strategy_.base, local.front(), *best)) continue;
      ev.discarded.push_back(local.front().origin);
      ev.survivors.push_back(best->origin);
      local = {*best};
    } else {
      auto it = mailbox_.find(name);
      if (it == mailbox_.end()) continue;
      auto& history = record_history_[name];
      for (auto& v : history) {
        if (v.origin == id) v.arrival = arrival;
      }
      auto& reg = it->second.reg;
      if (reg.origin == id) reg.arrival = arrival;
      if (!by_arrival) continue;
      auto best = std::ranges::max_element(history, [&](const RecordVersion& a, const RecordVersion& b) {
        return lww_less(strategy_.base, a, b);
      });
      if (best == history.end() || !lww_less(strategy_.base, reg, *best)) continue;
      ev.discarded.push_back(reg.origin);
      ev.survivors.push_back(best->origin);
      reg = *best;
      if (reg.record.exists) it->second.body = reg.record.body;
    }
    resolutions_.push_back(std::move(ev));
  }
}

std::vector<Operation> Replica::drain() {
  if (!online_) throw ReplicaError(id_ + ": drain while offline");
  std::vector<Operation> out(std::make_move_iterator(outbox_.begin()), std::make_move_iterator(outbox_.end()));
  outbox_.clear();
  return out;
}

std::vector<Operation> Replica::go_online() {
  online_ = true;
  return drain();
}

std::vector<ResolutionEvent> Replica::take_resolutions() { return std::exchange(resolutions_, {}); }

std::string Replica::render_object(const std::string& key) const {
  const auto name = object_name(key);
  if (is_doc_key(key)) {
    auto it = store_.find(name);
    return it == store_.end() ? std::string{} : render_versions(it->second);
  }
  auto it = mailbox_.find(name);
  return it == mailbox_.end() ? std::string{} : render(view_of(strategy_, it->second));
}

Snapshot Replica::snapshot() const {
  Snapshot snap;
  for (const auto& [doc, versions] : store_) snap.objects.emplace("doc:" + doc, render_versions(versions));
  for (const auto& [msg, state] : mailbox_) snap.objects.emplace("msg:" + msg, render(view_of(strategy_, state)));
  for (const auto& [key, text] : snap.objects) {
    snap.canonical += key;
    snap.canonical += ' ';
    snap.canonical += text;
    snap.canonical += '\n';
  }
  snap.digest = fnv1a_hex(snap.canonical);
  return snap;
}

}  // namespace fitolab
