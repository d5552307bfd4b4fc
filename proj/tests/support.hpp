#pragma once

// Builders and independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fitolab/oplog.hpp"

namespace fitolab::fixtures {

/// Op `replica:seq` at true time `t` with the given deps; vclock and hybrid derived from the deps
/// so the graph accepts it. `local` defaults to `t`.
inline Operation make_op(const CausalGraph& g, const ReplicaId& replica, std::uint64_t seq, std::int64_t t,
                         std::set<OpId> deps = {}, std::optional<std::int64_t> local = std::nullopt) {
  Operation op;
  op.id = OpId{replica, seq};
  op.kind = action::MarkRead{"m" + replica};
  op.true_time = TrueTime{t};
  op.local_ts = LocalTimestamp{local.value_or(t)};
  VectorClock vc;
  HybridTimestamp h{};
  for (const auto& d : deps) {
    vc = vc_merge(vc, g.at(d).vclock);
    h = std::max(h, g.at(d).hybrid);
  }
  op.vclock = vc_increment(vc, replica);
  op.hybrid = hlc_tick(h, op.local_ts);
  op.deps = std::move(deps);
  return op;
}

/// Edge i -> j for i < j where bit k of `mask` is set; bits enumerate pairs in (i, j) order.
/// Every DAG on n nodes is isomorphic to one of these.
inline std::vector<std::pair<int, int>> dag_edges(int n, std::uint32_t mask) {
  std::vector<std::pair<int, int>> edges;
  int bit = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++bit) {
      if (mask & (1u << bit)) edges.emplace_back(i, j);
    }
  }
  return edges;
}

inline int pair_count(int n) { return n * (n - 1) / 2; }

/// Node i is op `n<i>:1` at true time i+1 s.
inline CausalGraph build_dag(int n, const std::vector<std::pair<int, int>>& edges) {
  CausalGraph g;
  for (int j = 0; j < n; ++j) {
    std::set<OpId> deps;
    for (const auto& [a, b] : edges) {
      if (b == j) deps.insert(OpId{"n" + std::to_string(a), 1});
    }
    g.record(make_op(g, "n" + std::to_string(j), 1, (j + 1) * kNanosPerSecond, deps));
  }
  return g;
}

/// Concurrent pairs by Floyd-Warshall closure over the edge list; independent of CausalGraph.
inline std::uint64_t closure_concurrent_pairs(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : edges) reach[a][b] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::uint64_t count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!reach[i][j] && !reach[j][i]) ++count;
  return count;
}

}  // namespace fitolab::fixtures
