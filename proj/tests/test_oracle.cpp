#include <gtest/gtest.h>

#include "fitolab/oracle.hpp"
#include "fitolab/sync.hpp"

using namespace fitolab;

namespace {

constexpr std::int64_t kSec = kNanosPerSecond;

const Strategy kLww{BaseStrategy::LwwTimestamp, false};
const Strategy kSets{BaseStrategy::ConvergentSets, false};
const Strategy kMvm{BaseStrategy::MultiValueMaterialize, false};

const Scenario& seeds() {
  static const Scenario s = parse_scenario(
      "scenario seeds\nreplica a\nreplica b\nmsg m1 folder=inbox read=false body=\"x\"\ndoc d \"one\" \"two\"\n");
  return s;
}

Replica device(const char* id, Strategy strategy) {
  Replica r(id, ClockModel{}, strategy, !is_lww(strategy));
  seed_replica(r, seeds());
  return r;
}

}  // namespace

TEST(Oracle, EmptyOpsConverge) {
  const auto r = brute_force_converge(seeds(), {}, kSets);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.orders, 1u);
  EXPECT_EQ(r.outcomes.size(), 1u);
}

TEST(Oracle, ConcurrentFlagsConvergeUnderSets) {
  auto a = device("a", kSets);
  auto b = device("b", kSets);
  std::vector<Operation> ops{a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec}),
                             b.apply_local(action::MarkUnread{"m1"}, TrueTime{2 * kSec})};
  const auto r = brute_force_converge(seeds(), ops, kSets);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.orders, 2u);
}

TEST(Oracle, ConcurrentDocWritesConvergeUnderLww) {
  auto a = device("a", kLww);
  auto b = device("b", kLww);
  std::vector<Operation> ops{a.apply_local(action::WriteDoc{"d", 0, "A"}, TrueTime{kSec}),
                             b.apply_local(action::WriteDoc{"d", 0, "B"}, TrueTime{2 * kSec})};
  const auto r = brute_force_converge(seeds(), ops, kLww, false);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.outcomes.size(), 1u);
}

TEST(Oracle, ThreeWritersUnderMaterialize) {
  auto a = device("a", kMvm);
  auto b = device("b", kMvm);
  Replica c("c", ClockModel{}, kMvm, true);
  seed_replica(c, seeds());
  std::vector<Operation> ops{a.apply_local(action::WriteDoc{"d", 0, "A"}, TrueTime{kSec}),
                             b.apply_local(action::WriteDoc{"d", 1, "B"}, TrueTime{2 * kSec}),
                             c.apply_local(action::MarkRead{"m1"}, TrueTime{3 * kSec})};
  const auto r = brute_force_converge(seeds(), ops, kMvm);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.orders, 6u);
}

TEST(Oracle, DependentUnreadWithoutCausalDeliveryDiverges) {
  auto a = device("a", kSets);
  auto b = device("b", kSets);
  const auto read = a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec});
  b.apply_remote(read, TrueTime{2 * kSec});
  const auto unread = b.apply_local(action::MarkUnread{"m1"}, TrueTime{3 * kSec});
  ASSERT_TRUE(unread.deps.contains(read.id));

  const auto loose = brute_force_converge(seeds(), {read, unread}, kSets, false);
  EXPECT_FALSE(loose.converged);
  EXPECT_EQ(loose.counterexample.size(), 2u);
  EXPECT_EQ(loose.outcomes.size(), 2u);

  EXPECT_TRUE(brute_force_converge(seeds(), {read, unread}, kSets, true).converged);
}

TEST(Oracle, BoundIsEnforced) {
  auto a = device("a", kSets);
  std::vector<Operation> ops;
  for (int i = 0; i < 7; ++i) {
    ops.push_back(a.apply_local(i % 2 ? OpKind{action::MarkUnread{"m1"}} : OpKind{action::MarkRead{"m1"}},
                                TrueTime{(i + 1) * kSec}));
  }
  EXPECT_THROW((void)brute_force_converge(seeds(), ops, kSets), OracleBoundExceeded);
  EXPECT_TRUE(brute_force_converge(seeds(), ops, kSets, true, 7).converged);
}

TEST(Oracle, CausalPrefixIsClosed) {
  Simulator sim(builtin_scenarios().at("S7"), RunConfig{kSets, SignalMode::CompletionOnly, true, 0});
  const auto t = sim.run_until_quiescent();
  const auto prefix = causal_prefix(t.graph, 6);
  ASSERT_EQ(prefix.size(), std::min<std::size_t>(6, t.graph.size()));
  std::set<OpId> ids;
  for (const auto& op : prefix) ids.insert(op.id);
  for (const auto& op : prefix) {
    for (const auto& d : op.deps) EXPECT_TRUE(ids.contains(d)) << to_string(op.id);
  }
}
