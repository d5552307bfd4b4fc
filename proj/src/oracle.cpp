#include "fitolab/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "fitolab/replica.hpp"
#include "fitolab/sync.hpp"

namespace fitolab {

namespace {

const ReplicaId kObserver = "~oracle";

std::string outcome_of(const Scenario& seeds, const std::vector<Operation>& ops, const std::vector<std::size_t>& order,
                       const Strategy& strategy, bool causal_delivery, TrueTime at) {
  Replica observer(kObserver, ClockModel{}, strategy, causal_delivery);
  seed_replica(observer, seeds);
  for (auto i : order) (void)observer.apply_remote(ops[i], at);
  return observer.snapshot().canonical;
}

}  // namespace

ConvergenceResult brute_force_converge(const Scenario& seeds, std::vector<Operation> ops, const Strategy& strategy,
                                       bool causal_delivery, std::size_t bound) {
  if (ops.size() > bound) {
    throw OracleBoundExceeded(std::to_string(ops.size()) + " ops exceed the oracle bound of " + std::to_string(bound));
  }
  std::ranges::sort(ops, {}, &Operation::id);
  TrueTime at{0};
  for (const auto& op : ops) at = std::max(at, TrueTime{op.true_time.nanos + 1});

  ConvergenceResult result;
  std::vector<std::size_t> order(ops.size());
  std::iota(order.begin(), order.end(), 0);
  std::string first;
  do {
    auto outcome = outcome_of(seeds, ops, order, strategy, causal_delivery, at);
    if (result.orders++ == 0) {
      first = outcome;
    } else if (result.converged && outcome != first) {
      result.converged = false;
      for (auto i : order) result.counterexample.push_back(ops[i].id);
    }
    result.outcomes.insert(std::move(outcome));
  } while (std::next_permutation(order.begin(), order.end()));
  return result;
}

std::vector<Operation> causal_prefix(const CausalGraph& graph, std::size_t n) {
  std::vector<Operation> all;
  for (const auto& [id, op] : graph.nodes()) all.push_back(op);
  std::ranges::sort(all, [](const Operation& a, const Operation& b) {
    return std::tie(a.true_time, a.id) < std::tie(b.true_time, b.id);
  });
  if (all.size() > n) all.resize(n);
  return all;
}

}  // namespace fitolab
