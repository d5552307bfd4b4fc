#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitolab/oplog.hpp"
#include "fitolab/scenario.hpp"
#include "fitolab/strategy.hpp"

namespace fitolab {

inline constexpr std::size_t kOracleBound = 6;

class OracleBoundExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceResult {
  bool converged = true;
  /// A delivery order whose snapshot differs from the first order's; empty when converged.
  std::vector<OpId> counterexample;
  /// Distinct canonical snapshots reached.
  std::set<std::string> outcomes;
  std::uint64_t orders = 0;
};

/// Delivers `ops` in every order to a fresh replica seeded from `seeds` and compares the
/// canonical snapshots. Throws OracleBoundExceeded when ops.size() > bound.
[[nodiscard]] ConvergenceResult brute_force_converge(const Scenario& seeds, std::vector<Operation> ops,
                                                     const Strategy& strategy, bool causal_delivery = true,
                                                     std::size_t bound = kOracleBound);

/// The first `n` ops by true time. Deps are strictly earlier, so the prefix is causally closed.
[[nodiscard]] std::vector<Operation> causal_prefix(const CausalGraph& graph, std::size_t n);

}  // namespace fitolab
