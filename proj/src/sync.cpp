#include "fitolab/sync.hpp"

#include <algorithm>

namespace fitolab {

std::string_view to_string(TransactionPhase p) {
  switch (p) {
    case TransactionPhase::T3_Placed: return "T3";
    case TransactionPhase::T4_Completion: return "T4";
    case TransactionPhase::T5_Visible: return "T5";
    case TransactionPhase::T6_Commitment: return "T6";
  }
  return "?";
}

std::string_view to_string(SignalMode m) {
  return m == SignalMode::CompletionOnly ? "CompletionOnly" : "ReflectedCommitment";
}

std::optional<SignalMode> parse_signal_mode(std::string_view name) {
  if (name == "CompletionOnly") return SignalMode::CompletionOnly;
  if (name == "ReflectedCommitment") return SignalMode::ReflectedCommitment;
  return std::nullopt;
}

std::optional<TransactionPhase> emit_signal(SignalMode mode, const SignalContext& ctx) {
  using Point = SignalContext::Point;
  if (mode == SignalMode::CompletionOnly) {
    if (ctx.point == Point::Placement) return TransactionPhase::T4_Completion;
    return std::nullopt;
  }
  if (ctx.point == Point::Acknowledgement && ctx.all_acked && ctx.states_agree) {
    return TransactionPhase::T6_Commitment;
  }
  return std::nullopt;
}

namespace {

std::string join_ids(const std::vector<OpId>& ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += to_string(ids[i]);
  }
  return out + "]";
}

std::string join_keys(const std::set<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ',';
    out += k;
  }
  return out;
}

}  // namespace

void seed_replica(Replica& r, const Scenario& scenario) {
  std::uint64_t seed_index = 1;
  for (const auto& d : scenario.docs) r.seed_doc(d.doc, d.paragraphs, seed_index++);
  for (const auto& m : scenario.msgs) r.seed_msg(m.msg, m.folder, m.read, m.body, seed_index++);
}

Simulator::Simulator(const Scenario& scenario, RunConfig config)
    : scenario_(scenario), config_(config), rng_(config.seed) {
  trace_.scenario = scenario.name;
  trace_.config = config;

  for (const auto& spec : scenario.replicas) {
    Replica r(spec.id, spec.clock, config.strategy, config.causal_delivery, spec.online);
    seed_replica(r, scenario);
    replicas_.emplace(spec.id, std::move(r));
    auto it = scenario.network.latency_nanos.find(spec.id);
    latency_[spec.id] = it == scenario.network.latency_nanos.end() ? 1 : it->second;
  }

  for (std::size_t i = 0; i < scenario.network.partitions.size(); ++i) {
    schedule(scenario.network.partitions[i].start, PartitionEvent{i, true});
    schedule(scenario.network.partitions[i].end, PartitionEvent{i, false});
  }
  for (const auto& line : scenario.script) {
    std::visit(
        [&](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, directive::Act>) {
            schedule(line.at, ActionEvent{line.replica, d.kind, std::nullopt, false});
          } else if constexpr (std::is_same_v<D, directive::Offline>) {
            schedule(line.at, ConnectivityEvent{line.replica, false});
          } else if constexpr (std::is_same_v<D, directive::Online>) {
            schedule(line.at, ConnectivityEvent{line.replica, true});
          } else if constexpr (std::is_same_v<D, directive::ClockJump>) {
            schedule(line.at, ClockStepEvent{line.replica, d.jump_nanos});
          } else if constexpr (std::is_same_v<D, directive::Latency>) {
            schedule(line.at, LatencyEvent{line.replica, d.nanos});
          }
        },
        line.directive);
  }
}

void Simulator::schedule(TrueTime at, Payload payload) {
  queue_.emplace(std::make_pair(at.nanos, next_order_++), std::move(payload));
}

void Simulator::log(std::string text, bool user_visible) {
  trace_.lines.push_back(TraceLine{now_, std::move(text), user_visible});
}

bool Simulator::step() {
  if (queue_.empty()) return false;
  auto node = queue_.extract(queue_.begin());
  now_ = TrueTime{node.key().first};
  std::visit([this](auto& e) { handle(e); }, node.mapped());
  ++trace_.events;
  if (observer_) observer_(*this);
  return true;
}

Trace Simulator::run_until_quiescent(std::optional<std::uint64_t> max_events) {
  const auto bound = max_events.value_or(scenario_.max_events);
  trace_.terminal = Terminal::Quiescent;
  while (!queue_.empty()) {
    if (trace_.events >= bound) {
      trace_.terminal = Terminal::MaxEvents;
      break;
    }
    step();
  }
  for (const auto& [id, r] : replicas_) {
    trace_.finals[id] = r.snapshot();
    trace_.final_docs[id] = r.store();
    auto& mail = trace_.final_mail[id];
    for (const auto& [msg, state] : r.mailbox()) mail[msg] = view_of(r.strategy(), state);
  }
  return trace_;
}

std::optional<TrueTime> Simulator::partition_end(const ReplicaId& r, TrueTime t) const {
  std::optional<TrueTime> end;
  // Overlapping partitions chain: keep extending while some partition covers the candidate end.
  for (bool extended = true; extended;) {
    extended = false;
    const auto probe = end.value_or(t);
    for (const auto& p : scenario_.network.partitions) {
      if (p.start <= probe && probe < p.end && std::ranges::find(p.replicas, r) != p.replicas.end()) {
        end = p.end;
        extended = true;
      }
    }
  }
  return end;
}

std::int64_t Simulator::link_delay(const ReplicaId& r) {
  std::int64_t delay = latency_.at(r);
  if (scenario_.network.jitter_nanos > 0) {
    delay += std::uniform_int_distribution<std::int64_t>(0, scenario_.network.jitter_nanos)(rng_);
  }
  return delay;
}

std::map<std::string, std::string> Simulator::states_of(const Replica& r,
                                                        const std::set<std::string>& objects) const {
  std::map<std::string, std::string> out;
  for (const auto& k : objects) out.emplace(k, r.render_object(k));
  return out;
}

bool Simulator::agree(const std::set<std::string>& objects) const {
  for (const auto& key : objects) {
    std::optional<std::string> first;
    for (const auto& [id, r] : replicas_) {
      auto s = r.render_object(key);
      if (!first) {
        first = std::move(s);
      } else if (*first != s) {
        return false;
      }
    }
  }
  return true;
}

void Simulator::send_upload(const ReplicaId& from, Operation op) {
  auto& r = replicas_.at(from);
  TrueTime send = now_;
  if (auto end = partition_end(from, now_)) send = *end;
  const auto objects = object_keys(op.kind);
  UploadEvent up{from, std::move(op), ++reports_[from], states_of(r, objects)};
  schedule(TrueTime{send.nanos + link_delay(from)}, std::move(up));
}

void Simulator::observe_states(const ReplicaId& r, const std::set<std::string>& objects) {
  const auto& replica = replicas_.at(r);
  for (const auto& key : objects) {
    auto state = replica.render_object(key);
    auto& history = state_history_[{r, key}];
    if (!history.empty() && history.back() == state) continue;
    if (std::ranges::find(history, state) != history.end()) ++trace_.revisits[{r, key}];
    history.push_back(std::move(state));
  }
}

bool Simulator::superseded(const Replica& r, const ResolutionEvent& ev, const OpId& d) const {
  if (d.replica == kSeedReplica) return true;
  if (is_doc_key(ev.object)) {
    auto it = r.store().find(object_name(ev.object));
    if (it != r.store().end()) {
      for (const auto& v : it->second) {
        if (carried_origins(v).contains(d)) return true;
      }
    }
  }
  if (ev.survivors.empty() || !trace_.graph.contains(d)) return false;
  return std::ranges::all_of(ev.survivors, [&](const OpId& s) {
    return trace_.graph.contains(s) && trace_.graph.happens_before(d, s);
  });
}

void Simulator::process_resolutions(Replica& r) {
  for (auto& ev : r.take_resolutions()) {
    if (ev.notified) {
      log(r.id() + " notify conflict " + ev.object + " versions=" + join_ids(ev.survivors), true);
      trace_.notices.push_back(NoticeRecord{now_, r.id(), ev.object, ev.survivors});
    }
    for (const auto& d : ev.discarded) {
      if (superseded(r, ev, d)) {
        log(r.id() + " supersede " + ev.object + " " + to_string(d));
      } else {
        log(r.id() + " discard " + ev.object + " " + to_string(d));
        trace_.discards.push_back(DiscardRecord{now_, r.id(), ev.object, d});
      }
      if (!scenario_.find_replica(r.id())->reassert || d.replica != r.id() || reasserted_.contains(d)) continue;
      auto own = r.own_ops().find(d);
      if (own == r.own_ops().end()) continue;
      reasserted_.insert(d);
      schedule(TrueTime{now_.nanos + scenario_.retry_nanos},
               ActionEvent{r.id(), own->second.kind, std::nullopt, true});
    }
  }
}

void Simulator::handle(ActionEvent& e) {
  auto& r = replicas_.at(e.replica);
  auto units = txn_commit(config_.strategy, e.kind);
  if (std::holds_alternative<TxnGroup>(e.kind) && !e.group) {
    e.group = trace_.groups.size();
    trace_.groups.push_back(GroupRecord{e.replica, now_, std::get<TxnGroup>(e.kind), {}});
    if (units.size() > 1) {
      // Members travel as separate ops, one nanosecond apart.
      for (std::size_t i = 1; i < units.size(); ++i) {
        schedule(TrueTime{now_.nanos + static_cast<std::int64_t>(i)},
                 ActionEvent{e.replica, units[i], e.group, false});
      }
    }
  }
  const OpKind& unit = units.front();

  Operation op;
  try {
    op = r.apply_local(unit, now_);
  } catch (const ReplicaError& err) {
    log(e.replica + " reject " + to_string(unit) + ": " + err.what(), true);
    return;
  }
  if (e.group) trace_.groups[*e.group].ops.push_back(op.id);
  trace_.graph.record(op);
  log(e.replica + (e.reassert ? " reassert " : " action ") + trace_record(op));
  process_resolutions(r);
  observe_states(e.replica, object_keys(op.kind));

  if (r.online()) {
    send_upload(e.replica, std::move(op));
  } else {
    log(e.replica + " queue " + to_string(op.id) + " outbox=" + std::to_string(r.outbox().size()));
  }
}

void Simulator::handle(ConnectivityEvent& e) {
  auto& r = replicas_.at(e.replica);
  if (!e.online) {
    r.go_offline();
    log(e.replica + " offline");
    return;
  }
  const bool was_online = r.online();
  auto drained = r.go_online();
  log(e.replica + " online drained=" + std::to_string(drained.size()));
  for (auto& op : drained) {
    log(e.replica + " drain " + to_string(op.id) + " local=" + format_nanos(op.local_ts.nanos));
    send_upload(e.replica, std::move(op));
  }
  if (!was_online) {
    for (auto& d : std::exchange(parked_[e.replica], {})) schedule(now_, std::move(d));
  }
}

void Simulator::handle(ClockStepEvent& e) {
  log(e.replica + " clock-step " + format_nanos(e.jump_nanos));
}

void Simulator::handle(LatencyEvent& e) {
  latency_[e.replica] = e.nanos;
  log(e.replica + " latency " + format_nanos(e.nanos));
}

void Simulator::handle(PartitionEvent& e) {
  const auto& p = scenario_.network.partitions[e.index];
  std::string who;
  for (const auto& r : p.replicas) who += (who.empty() ? "" : ",") + r;
  log(std::string("partition ") + (e.start ? "start " : "end ") + who);
}

void Simulator::handle(UploadEvent& e) {
  auto& op = e.op;
  op.arrival = ++arrivals_;
  const auto objects = object_keys(op.kind);
  log("server place T3 " + to_string(op.id) + " from=" + e.from + " arrival=" + std::to_string(*op.arrival));

  placed_index_[op.id] = placed_.size();
  placed_.push_back(Placed{op.id, e.from, objects, {e.from}, false});
  for (auto& [key, state] : e.states) {
    auto& slot = reported_[{e.from, key}];
    if (e.report > slot.first) slot = {e.report, std::move(state)};
  }

  SignalContext ctx;
  ctx.point = SignalContext::Point::Placement;
  if (auto phase = emit_signal(config_.mode, ctx)) {
    const bool divergent = !agree(objects);
    trace_.signals.push_back(SignalRecord{now_, e.from, *phase, op.id, objects, divergent});
    log("server signal " + std::string(to_string(*phase)) + " " + to_string(op.id) + " to=" + e.from, true);
  }

  schedule(TrueTime{now_.nanos + link_delay(e.from)}, ConfirmEvent{e.from, op.id, *op.arrival});
  for (const auto& [id, r] : replicas_) {
    if (id == e.from) continue;
    schedule(TrueTime{now_.nanos + link_delay(id)}, DeliverEvent{id, op});
  }
  check_commitments();
}

bool Simulator::reachable(const ReplicaId& to, const std::string& what, Payload& payload) {
  if (auto end = partition_end(to, now_)) {
    log(to + " requeue " + what + " until=" + format_nanos(end->nanos));
    schedule(*end, std::move(payload));
    return false;
  }
  if (!replicas_.at(to).online()) {
    log(to + " park " + what);
    parked_[to].push_back(std::move(payload));
    return false;
  }
  return true;
}

void Simulator::handle(ConfirmEvent& e) {
  Payload self = e;
  if (!reachable(e.to, "confirm " + to_string(e.op), self)) return;
  auto& r = replicas_.at(e.to);
  r.confirm_arrival(e.op, e.arrival);
  log(e.to + " confirm " + to_string(e.op) + " arrival=" + std::to_string(e.arrival));
  process_resolutions(r);
  const auto objects = object_keys(trace_.graph.at(e.op).kind);
  observe_states(e.to, objects);
  AckEvent report{e.to, e.op, ++reports_[e.to], states_of(r, objects)};
  schedule(TrueTime{now_.nanos + link_delay(e.to)}, std::move(report));
}

void Simulator::handle(DeliverEvent& e) {
  auto& r = replicas_.at(e.to);
  Payload self = e;
  if (!reachable(e.to, to_string(e.op.id), self)) return;
  auto outcome = r.apply_remote(e.op, now_);
  if (outcome.duplicate) {
    log(e.to + " duplicate " + to_string(e.op.id));
    return;
  }
  if (outcome.buffered) {
    log(e.to + " buffer " + to_string(e.op.id) + " pending=" + std::to_string(r.buffered()));
    return;
  }
  process_resolutions(r);
  for (const auto& id : outcome.applied) {
    log(e.to + " visible T5 " + to_string(id));
    const auto objects = object_keys(trace_.graph.at(id).kind);
    observe_states(e.to, objects);
    AckEvent ack{e.to, id, ++reports_[e.to], states_of(r, objects)};
    schedule(TrueTime{now_.nanos + link_delay(e.to)}, std::move(ack));
  }
}

void Simulator::handle(AckEvent& e) {
  log("server ack " + to_string(e.op) + " from=" + e.from);
  placed_[placed_index_.at(e.op)].acked.insert(e.from);
  for (auto& [key, state] : e.states) {
    auto& slot = reported_[{e.from, key}];
    if (e.report > slot.first) slot = {e.report, std::move(state)};
  }
  check_commitments();
}

void Simulator::check_commitments() {
  if (config_.mode != SignalMode::ReflectedCommitment) return;
  auto fully_acked = [&](const Placed& p) { return p.acked.size() == replicas_.size(); };
  for (auto& p : placed_) {
    if (p.committed) continue;
    SignalContext ctx;
    ctx.point = SignalContext::Point::Acknowledgement;
    ctx.all_acked = fully_acked(p);
    ctx.states_agree = true;
    for (const auto& key : p.objects) {
      for (const auto& other : placed_) {
        if (other.objects.contains(key) && !fully_acked(other)) ctx.all_acked = false;
      }
      std::optional<std::string> first;
      for (const auto& [id, r] : replicas_) {
        auto it = reported_.find({id, key});
        if (it == reported_.end()) {
          ctx.states_agree = false;
          break;
        }
        if (!first) {
          first = it->second.second;
        } else if (*first != it->second.second) {
          ctx.states_agree = false;
        }
      }
    }
    if (auto phase = emit_signal(config_.mode, ctx)) {
      p.committed = true;
      const bool divergent = !agree(p.objects);
      trace_.signals.push_back(SignalRecord{now_, p.origin, *phase, p.id, p.objects, divergent});
      log("server signal " + std::string(to_string(*phase)) + " " + to_string(p.id) + " to=" + p.origin +
              " objects=" + join_keys(p.objects),
          true);
    }
  }
}

std::string format_trace(const Trace& trace) {
  std::string out;
  out += "# fitolab trace v1\n";
  out += "scenario " + trace.scenario + "\n";
  out += "strategy " + to_string(trace.config.strategy) + "\n";
  out += "mode " + std::string(to_string(trace.config.mode)) + "\n";
  out += std::string("causal_delivery ") + (trace.config.causal_delivery ? "on" : "off") + "\n";
  out += "seed " + std::to_string(trace.config.seed) + "\n";
  out += "events\n";
  for (const auto& line : trace.lines) {
    out += format_nanos(line.at.nanos);
    out += line.user_visible ? " [user] " : " ";
    out += line.text;
    out += '\n';
  }
  out += std::string("terminal ") + (trace.terminal == Terminal::Quiescent ? "quiescent" : "max_events") +
         " events=" + std::to_string(trace.events) + "\n";
  out += "snapshots\n";
  for (const auto& [id, snap] : trace.finals) {
    out += id + " " + snap.digest + "\n";
    for (const auto& [key, text] : snap.objects) out += "  " + key + " " + text + "\n";
  }
  out += "signals\n";
  for (const auto& s : trace.signals) {
    out += format_nanos(s.at.nanos) + " " + std::string(to_string(s.phase)) + " " + to_string(s.op) +
           " to=" + s.replica + " divergent=" + (s.divergent ? "1" : "0") + "\n";
  }
  out += "end\n";
  return out;
}

}  // namespace fitolab
