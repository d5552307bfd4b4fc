#include "fitolab/report.hpp"

#include <algorithm>

#include "json.hpp"

namespace fitolab {

namespace {

const char* yes_no(bool b) { return b ? "yes" : "no"; }

std::string terminal_name(Terminal t) { return t == Terminal::Quiescent ? "quiescent" : "max_events"; }

std::string id_list(const std::vector<OpId>& ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += to_string(ids[i]);
  }
  return out + "]";
}

std::string name_list(const std::vector<ReplicaId>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out + "]";
}

constexpr std::array<std::string_view, 4> kConditions = {"forward_commitment", "absent_reflection",
                                                         "completion_masquerade", "invisible_corruption"};

std::array<bool, 4> conditions(const FitoVerdict& v) {
  return {v.forward_commitment, v.absent_reflection, v.completion_masquerade, v.invisible_corruption};
}

nlohmann::json to_json(const Report& r) {
  using nlohmann::json;
  json j;
  j["scenario"] = r.scenario;
  j["strategy"] = to_string(r.config.strategy);
  j["mode"] = std::string(to_string(r.config.mode));
  j["causal_delivery"] = r.config.causal_delivery;
  j["seed"] = r.config.seed;
  j["terminal"] = terminal_name(r.terminal);
  j["events"] = r.events;
  j["convergence"] = {{"converged", r.converged}, {"digests", r.digests}};
  json inversions = json::object();
  for (const auto& [k, n] : r.inversions) inversions[k] = n;
  json discards = json::array();
  for (const auto& d : r.discards) {
    discards.push_back({{"at", format_nanos(d.at.nanos)}, {"replica", d.replica}, {"object", d.object},
                        {"origin", to_string(d.origin)}});
  }
  j["information"] = {{"ops", r.ops},
                      {"projection_loss", r.projection_loss},
                      {"inversions", inversions},
                      {"discards", discards},
                      {"conflict_copies", r.conflict_copies},
                      {"notices", r.notices}};
  json findings = json::array();
  for (const auto& f : r.findings) {
    json ops = json::array();
    for (const auto& id : f.ops) ops.push_back(to_string(id));
    findings.push_back({{"pathology", std::string(to_string(f.pathology))},
                        {"object", f.object},
                        {"ops", ops},
                        {"replicas", f.replicas},
                        {"explanation", f.explanation}});
  }
  j["findings"] = findings;
  json verdict = json::object();
  const auto flags = conditions(r.verdict);
  for (std::size_t i = 0; i < kConditions.size(); ++i) {
    verdict[std::string(kConditions[i])] = {{"holds", flags[i]}, {"evidence", r.verdict.evidence[i]}};
  }
  verdict["pattern_present"] = r.verdict.pattern_present();
  j["verdict"] = verdict;
  return j;
}

}  // namespace

Report make_report(const Trace& trace, std::vector<Finding> findings, FitoVerdict verdict) {
  Report r;
  r.scenario = trace.scenario;
  r.config = trace.config;
  r.terminal = trace.terminal;
  r.events = trace.events;

  for (const auto& [id, snap] : trace.finals) r.digests[id] = snap.digest;
  r.converged = std::ranges::adjacent_find(r.digests, std::ranges::not_equal_to{},
                                           [](const auto& kv) { return kv.second; }) == r.digests.end();

  r.ops = trace.graph.size();
  r.projection_loss = projection_loss(trace.graph);
  for (auto key : {ProjectionKey::ByLocalTimestamp, ProjectionKey::ByHybrid, ProjectionKey::ByTrueTime}) {
    r.inversions[std::string(to_string(key))] = detect_inversions(trace.graph, linear_projection(trace.graph, key)).size();
  }
  r.discards = trace.discards;
  for (const auto& [id, store] : trace.final_docs) {
    std::uint64_t copies = 0;
    for (const auto& [doc, versions] : store) copies += versions.empty() ? 0 : versions.size() - 1;
    r.conflict_copies = std::max(r.conflict_copies, copies);
  }
  r.notices = trace.notices.size();
  r.findings = std::move(findings);
  r.verdict = std::move(verdict);
  return r;
}

std::string render(const Report& r) {
  std::string out;
  out += "# fitolab report v1\n";
  out += "scenario " + r.scenario + "\n";
  out += "strategy " + to_string(r.config.strategy) + "\n";
  out += "mode " + std::string(to_string(r.config.mode)) + "\n";
  out += std::string("causal_delivery ") + (r.config.causal_delivery ? "on" : "off") + "\n";
  out += "seed " + std::to_string(r.config.seed) + "\n";
  out += "terminal " + terminal_name(r.terminal) + " events=" + std::to_string(r.events) + "\n";

  out += "\nconvergence\n";
  out += std::string("  converged ") + yes_no(r.converged) + "\n";
  for (const auto& [id, digest] : r.digests) out += "  digest " + id + " " + digest + "\n";

  out += "\ninformation\n";
  out += "  ops " + std::to_string(r.ops) + "\n";
  out += "  projection_loss " + std::to_string(r.projection_loss) + "\n";
  for (const auto& [key, n] : r.inversions) out += "  inversions " + key + " " + std::to_string(n) + "\n";
  out += "  discarded " + std::to_string(r.discards.size()) + "\n";
  for (const auto& d : r.discards) {
    out += "    " + format_nanos(d.at.nanos) + " " + d.replica + " " + d.object + " " + to_string(d.origin) + "\n";
  }
  out += "  conflict_copies " + std::to_string(r.conflict_copies) + "\n";
  out += "  notices " + std::to_string(r.notices) + "\n";

  out += "\nfindings " + std::to_string(r.findings.size()) + "\n";
  if (r.findings.empty()) out += "  no findings\n";
  for (const auto& f : r.findings) {
    out += "  " + std::string(to_string(f.pathology)) + (f.object.empty() ? "" : " " + f.object) +
           " ops=" + id_list(f.ops) + " replicas=" + name_list(f.replicas) + "\n";
    out += "    " + f.explanation + "\n";
  }

  out += "\nverdict\n";
  const auto flags = conditions(r.verdict);
  for (std::size_t i = 0; i < kConditions.size(); ++i) {
    out += "  " + std::string(kConditions[i]) + " " + yes_no(flags[i]) + " - " + r.verdict.evidence[i] + "\n";
  }
  out += std::string("  pattern ") + (r.verdict.pattern_present() ? "present" : "absent") + "\n";

  out += "\njson\n";
  out += to_json(r).dump(2);
  out += "\nend\n";
  return out;
}

std::string emit_report(const Trace& trace, const std::vector<Finding>& findings, const FitoVerdict& verdict) {
  return render(make_report(trace, findings, verdict));
}

std::string domain_of(const Trace& trace) {
  bool docs = false;
  bool mail = false;
  for (const auto& [id, op] : trace.graph.nodes()) {
    for (const auto& key : object_keys(op.kind)) (is_doc_key(key) ? docs : mail) = true;
  }
  if (docs && mail) return "Mixed";
  return docs ? "File sync" : "Email";
}

}  // namespace fitolab
