#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fitolab/detect.hpp"
#include "fitolab/sync.hpp"

namespace fitolab {

/// Everything a report states about one run. Built from a trace alone.
struct Report {
  std::string scenario;
  RunConfig config;
  Terminal terminal = Terminal::Quiescent;
  std::uint64_t events = 0;

  bool converged = false;
  std::map<ReplicaId, std::string> digests;

  std::uint64_t ops = 0;
  std::uint64_t projection_loss = 0;
  std::map<std::string, std::uint64_t> inversions;  // projection name -> count
  std::vector<DiscardRecord> discards;
  /// Concurrent versions kept side by side in final state, summed over docs, max over replicas.
  std::uint64_t conflict_copies = 0;
  std::uint64_t notices = 0;

  std::vector<Finding> findings;
  FitoVerdict verdict;
};

[[nodiscard]] Report make_report(const Trace& trace, std::vector<Finding> findings, FitoVerdict verdict);
/// Human-readable sections followed by a `json` block with the same content.
[[nodiscard]] std::string render(const Report& report);
[[nodiscard]] std::string emit_report(const Trace& trace, const std::vector<Finding>& findings,
                                      const FitoVerdict& verdict);

/// `File sync` for document scenarios, `Email` for mail scenarios, `Mixed` when both appear.
[[nodiscard]] std::string domain_of(const Trace& trace);

}  // namespace fitolab
