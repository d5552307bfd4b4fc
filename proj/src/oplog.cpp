#include "fitolab/oplog.hpp"

#include <algorithm>
#include <tuple>

namespace fitolab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string to_string(const OpId& id) { return id.replica + ":" + std::to_string(id.seq); }

OpKind to_kind(const PrimitiveAction& a) {
  return std::visit([](const auto& x) -> OpKind { return x; }, a);
}

std::vector<PrimitiveAction> members_of(const OpKind& kind) {
  return std::visit(Overloaded{
                        [](const TxnGroup& g) { return g.members; },
                        [](const auto& x) { return std::vector<PrimitiveAction>{x}; },
                    },
                    kind);
}

std::string object_key(const PrimitiveAction& a) {
  return std::visit(Overloaded{
                        [](const action::WriteDoc& x) { return "doc:" + x.doc; },
                        [](const action::CreateDoc& x) { return "doc:" + x.doc; },
                        [](const action::DeleteDoc& x) { return "doc:" + x.doc; },
                        [](const action::MarkRead& x) { return "msg:" + x.msg; },
                        [](const action::MarkUnread& x) { return "msg:" + x.msg; },
                        [](const action::Move& x) { return "msg:" + x.msg; },
                        [](const action::DeleteMsg& x) { return "msg:" + x.msg; },
                        [](const action::Compose& x) { return "msg:" + x.msg; },
                    },
                    a);
}

std::set<std::string> object_keys(const OpKind& kind) {
  std::set<std::string> keys;
  for (const auto& m : members_of(kind)) keys.insert(object_key(m));
  return keys;
}

bool is_doc_key(const std::string& key) { return key.starts_with("doc:"); }

std::string object_name(const std::string& key) { return key.substr(4); }

std::string kind_name(const PrimitiveAction& a) {
  static constexpr const char* kNames[] = {"WriteDoc",   "CreateDoc", "DeleteDoc", "MarkRead",
                                           "MarkUnread", "Move",      "DeleteMsg", "Compose"};
  return kNames[a.index()];
}

std::string kind_name(const OpKind& k) {
  if (std::holds_alternative<TxnGroup>(k)) return "TxnGroup";
  return kind_name(members_of(k).front());
}

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string to_string(const PrimitiveAction& a) {
  return std::visit(
      Overloaded{
          [](const action::WriteDoc& x) {
            return "WriteDoc(" + x.doc + "," + std::to_string(x.paragraph) + "," + quote(x.content) + ")";
          },
          [](const action::CreateDoc& x) { return "CreateDoc(" + x.doc + "," + quote(x.content) + ")"; },
          [](const action::DeleteDoc& x) { return "DeleteDoc(" + x.doc + ")"; },
          [](const action::MarkRead& x) { return "MarkRead(" + x.msg + ")"; },
          [](const action::MarkUnread& x) { return "MarkUnread(" + x.msg + ")"; },
          [](const action::Move& x) { return "Move(" + x.msg + "," + x.folder + ")"; },
          [](const action::DeleteMsg& x) { return "DeleteMsg(" + x.msg + ")"; },
          [](const action::Compose& x) { return "Compose(" + x.msg + "," + x.in_reply_to.value_or("-") + ")"; },
      },
      a);
}

std::string to_string(const OpKind& k) {
  if (const auto* g = std::get_if<TxnGroup>(&k)) {
    std::string out = "TxnGroup[";
    for (std::size_t i = 0; i < g->members.size(); ++i) {
      if (i) out += ';';
      out += to_string(g->members[i]);
    }
    return out + "]";
  }
  return to_string(members_of(k).front());
}

const Operation& CausalGraph::at(const OpId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw GraphError("unknown op " + to_string(id));
  return it->second;
}

void CausalGraph::record(Operation op) {
  if (nodes_.contains(op.id)) throw GraphError("duplicate op " + to_string(op.id));
  std::set<OpId> ancestors;
  for (const auto& dep : op.deps) {
    auto it = nodes_.find(dep);
    if (it == nodes_.end()) throw GraphError("op " + to_string(op.id) + " has missing dep " + to_string(dep));
    if (!(it->second.true_time < op.true_time)) {
      throw GraphError("op " + to_string(op.id) + " is not later in true time than dep " + to_string(dep));
    }
    const auto ord = vc_compare(it->second.vclock, op.vclock);
    if (ord != CausalOrdering::Before && ord != CausalOrdering::Equal) {
      throw GraphError("op " + to_string(op.id) + " vclock does not dominate dep " + to_string(dep));
    }
    ancestors.insert(dep);
    const auto& up = ancestors_.at(dep);
    ancestors.insert(up.begin(), up.end());
  }
  // Deps already exist and the new id is fresh, so no cycle can form.
  ancestors_.emplace(op.id, std::move(ancestors));
  auto id = op.id;
  nodes_.emplace(std::move(id), std::move(op));
}

bool CausalGraph::happens_before(const OpId& a, const OpId& b) const {
  if (!nodes_.contains(a)) throw GraphError("unknown op " + to_string(a));
  auto it = ancestors_.find(b);
  if (it == ancestors_.end()) throw GraphError("unknown op " + to_string(b));
  return it->second.contains(a);
}

std::string_view to_string(ProjectionKey key) {
  switch (key) {
    case ProjectionKey::ByLocalTimestamp: return "ByLocalTimestamp";
    case ProjectionKey::ByHybrid: return "ByHybrid";
    case ProjectionKey::ByTrueTime: return "ByTrueTime";
  }
  return "?";
}

LinearChain linear_projection(const CausalGraph& graph, ProjectionKey key) {
  std::vector<const Operation*> ops;
  ops.reserve(graph.size());
  for (const auto& [id, op] : graph.nodes()) ops.push_back(&op);

  auto sort_key = [key](const Operation* op) {
    switch (key) {
      case ProjectionKey::ByLocalTimestamp: return std::make_tuple(op->local_ts.nanos, std::uint64_t{0});
      case ProjectionKey::ByHybrid: return std::make_tuple(op->hybrid.wall, op->hybrid.logical);
      case ProjectionKey::ByTrueTime: break;
    }
    return std::make_tuple(op->true_time.nanos, std::uint64_t{0});
  };
  std::ranges::stable_sort(ops, [&](const Operation* a, const Operation* b) {
    const auto ka = sort_key(a);
    const auto kb = sort_key(b);
    return std::tie(ka, a->id) < std::tie(kb, b->id);
  });

  LinearChain chain;
  chain.key = key;
  for (const auto* op : ops) chain.order.push_back(op->id);
  return chain;
}

std::uint64_t projection_loss(const CausalGraph& graph) {
  std::vector<OpId> ids;
  for (const auto& [id, op] : graph.nodes()) ids.push_back(id);
  std::uint64_t loss = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (!graph.happens_before(ids[i], ids[j]) && !graph.happens_before(ids[j], ids[i])) ++loss;
    }
  }
  return loss;
}

std::vector<std::pair<OpId, OpId>> detect_inversions(const CausalGraph& graph, const LinearChain& chain) {
  std::map<OpId, std::size_t> position;
  for (std::size_t i = 0; i < chain.order.size(); ++i) {
    if (!graph.contains(chain.order[i]) || !position.emplace(chain.order[i], i).second) {
      throw GraphError("chain does not cover the graph");
    }
  }
  if (position.size() != graph.size()) throw GraphError("chain does not cover the graph");

  std::vector<std::pair<OpId, OpId>> inversions;
  for (std::size_t i = 0; i < chain.order.size(); ++i) {
    for (std::size_t j = i + 1; j < chain.order.size(); ++j) {
      // chain.order[i] precedes chain.order[j]; inverted if j happens-before i.
      if (graph.happens_before(chain.order[j], chain.order[i])) {
        inversions.emplace_back(chain.order[j], chain.order[i]);
      }
    }
  }
  std::ranges::sort(inversions);
  return inversions;
}

std::string trace_record(const Operation& op) {
  std::string deps = "[";
  bool first = true;
  for (const auto& d : op.deps) {
    if (!first) deps += ',';
    first = false;
    deps += to_string(d);
  }
  deps += ']';
  return "op id=" + to_string(op.id) + " kind=" + to_string(op.kind) + " true=" + format_nanos(op.true_time.nanos) +
         " local=" + format_nanos(op.local_ts.nanos) + " vc=" + to_string(op.vclock) + " hlc=" + to_string(op.hybrid) +
         " deps=" + deps;
}

}  // namespace fitolab
