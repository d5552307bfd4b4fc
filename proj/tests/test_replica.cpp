#include <gtest/gtest.h>

#include "fitolab/replica.hpp"

using namespace fitolab;

namespace {

constexpr std::int64_t kSec = kNanosPerSecond;

std::int64_t hms(int h, int m, int s) { return ((h * 60LL + m) * 60 + s) * kSec; }

const Strategy kSets{BaseStrategy::ConvergentSets, false};
const Strategy kLww{BaseStrategy::LwwTimestamp, false};
const Strategy kArrival{BaseStrategy::LwwServerArrival, false};

Replica device(const char* id, Strategy s = kSets, bool causal = true, std::int64_t offset = 0) {
  Replica r(id, ClockModel{offset, 0, {}}, s, causal);
  r.seed_msg("m1", "inbox", false, "hello", 1);
  r.seed_doc("D1", {"intro", "body"}, 2);
  return r;
}

}  // namespace

TEST(Replica, LocalStampUsesDeviceClock) {
  auto phone = device("phone", kSets, true, 3 * kSec);
  const auto op = phone.apply_local(action::MarkRead{"m1"}, TrueTime{hms(2, 34, 14)});
  EXPECT_EQ(op.local_ts.nanos, hms(2, 34, 17));
  EXPECT_EQ(op.true_time.nanos, hms(2, 34, 14));
}

TEST(Replica, FirstOpHasUnitClockAndNoDeps) {
  auto a = device("A");
  const auto op = a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec});
  EXPECT_EQ(op.id, (OpId{"A", 1}));
  EXPECT_EQ(op.vclock, VectorClock({{"A", 1}}));
  EXPECT_TRUE(op.deps.empty());
  EXPECT_EQ(a.apply_local(action::MarkUnread{"m1"}, TrueTime{2 * kSec}).deps, (std::set<OpId>{op.id}));
}

TEST(Replica, ReplyDependsOnTheReadItAnswers) {
  auto phone = device("phone");
  auto laptop = device("laptop");
  const auto read = phone.apply_local(action::MarkRead{"m1"}, TrueTime{hms(2, 34, 50)});
  laptop.apply_remote(read, TrueTime{hms(2, 34, 52)});
  const auto reply = laptop.apply_local(action::Compose{"r1", "m1"}, TrueTime{hms(2, 34, 55)});
  EXPECT_TRUE(reply.deps.contains(read.id));
  EXPECT_EQ(vc_compare(read.vclock, reply.vclock), CausalOrdering::Before);
  EXPECT_GT(reply.hybrid, read.hybrid);
}

TEST(Replica, RejectsBadTargets) {
  auto a = device("A");
  EXPECT_THROW((void)a.apply_local(action::MarkRead{"nope"}, TrueTime{kSec}), ReplicaError);
  EXPECT_THROW((void)a.apply_local(action::WriteDoc{"D9", 0, "x"}, TrueTime{kSec}), ReplicaError);
  EXPECT_THROW((void)a.apply_local(action::WriteDoc{"D1", 5, "x"}, TrueTime{kSec}), ReplicaError);
  EXPECT_THROW((void)a.apply_local(TxnGroup{}, TrueTime{kSec}), ReplicaError);
}

TEST(Replica, OfflineOutboxDrainsInOrderWithOriginalStamps) {
  auto a = device("A");
  a.go_offline();
  std::vector<Operation> made;
  made.push_back(a.apply_local(action::MarkRead{"m1"}, TrueTime{1 * kSec}));
  made.push_back(a.apply_local(action::Move{"m1", "archive"}, TrueTime{2 * kSec}));
  made.push_back(a.apply_local(action::MarkUnread{"m1"}, TrueTime{3 * kSec}));
  EXPECT_EQ(a.outbox().size(), 3u);
  EXPECT_THROW((void)a.drain(), ReplicaError);
  const auto sent = a.go_online();
  ASSERT_EQ(sent.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sent[i].id, made[i].id);
    EXPECT_EQ(sent[i].local_ts, made[i].local_ts);
  }
  EXPECT_TRUE(a.outbox().empty());
}

TEST(Replica, DuplicateDeliveryIsIdempotent) {
  auto a = device("A");
  auto b = device("B");
  const auto op = a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec});
  EXPECT_FALSE(b.apply_remote(op, TrueTime{2 * kSec}).duplicate);
  const auto once = b.snapshot();
  const auto again = b.apply_remote(op, TrueTime{3 * kSec});
  EXPECT_TRUE(again.duplicate);
  EXPECT_TRUE(again.applied.empty());
  EXPECT_EQ(b.snapshot(), once);
}

TEST(Replica, OwnOpEchoIsDuplicate) {
  auto a = device("A");
  const auto op = a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec});
  EXPECT_TRUE(a.apply_remote(op, TrueTime{2 * kSec}).duplicate);
}

TEST(Replica, ConcurrentOpsCommuteUnderSets) {
  auto a = device("A");
  auto b = device("B");
  auto c = device("C");
  auto d = device("D");
  const auto x = a.apply_local(action::MarkRead{"m1"}, TrueTime{kSec});
  const auto y = b.apply_local(action::Move{"m1", "archive"}, TrueTime{kSec});
  c.apply_remote(x, TrueTime{2 * kSec});
  c.apply_remote(y, TrueTime{3 * kSec});
  d.apply_remote(y, TrueTime{2 * kSec});
  d.apply_remote(x, TrueTime{3 * kSec});
  EXPECT_EQ(c.snapshot().digest, d.snapshot().digest);
  EXPECT_EQ(c.snapshot().canonical, d.snapshot().canonical);
  EXPECT_NE(c.snapshot().digest, device("E").snapshot().digest);
  EXPECT_EQ(c.snapshot().digest.size(), 16u);
}

TEST(Replica, CausalBufferHoldsUntilDepsArrive) {
  auto a = device("A");
  auto b = device("B");
  const auto first = a.apply_local(action::MarkRead{"m1"}, TrueTime{1 * kSec});
  const auto second = a.apply_local(action::Move{"m1", "archive"}, TrueTime{2 * kSec});
  const auto early = b.apply_remote(second, TrueTime{3 * kSec});
  EXPECT_TRUE(early.buffered);
  EXPECT_EQ(b.buffered(), 1u);
  EXPECT_FALSE(b.applied().contains(second.id));
  const auto late = b.apply_remote(first, TrueTime{4 * kSec});
  EXPECT_EQ(late.applied, (std::vector<OpId>{first.id, second.id}));
  EXPECT_EQ(b.buffered(), 0u);
}

TEST(Replica, WithoutCausalDeliveryOpsApplyImmediately) {
  auto a = device("A");
  auto b = device("B", kLww, false);
  a.apply_local(action::MarkRead{"m1"}, TrueTime{1 * kSec});
  const auto second = a.apply_local(action::Move{"m1", "archive"}, TrueTime{2 * kSec});
  const auto out = b.apply_remote(second, TrueTime{3 * kSec});
  EXPECT_FALSE(out.buffered);
  EXPECT_EQ(out.applied, std::vector<OpId>{second.id});
}

TEST(Replica, ConfirmArrivalRepicksRegister) {
  auto a = device("A", kArrival, false);
  auto b = device("B", kArrival, false);
  auto mine = a.apply_local(action::MarkRead{"m1"}, TrueTime{1 * kSec});
  auto theirs = b.apply_local(action::MarkUnread{"m1"}, TrueTime{2 * kSec});
  theirs.arrival = 1;
  a.apply_remote(theirs, TrueTime{3 * kSec});
  // Unplaced local write still counts as the latest arrival.
  EXPECT_TRUE(a.mailbox().at("m1").reg.record.read);
  a.confirm_arrival(mine.id, 2);
  EXPECT_TRUE(a.mailbox().at("m1").reg.record.read);
  EXPECT_EQ(a.own_ops().at(mine.id).arrival, 2u);

  auto c = device("C", kArrival, false);
  auto early = c.apply_local(action::MarkRead{"m1"}, TrueTime{1 * kSec});
  c.apply_remote(theirs, TrueTime{3 * kSec});
  c.confirm_arrival(early.id, 0);
  EXPECT_FALSE(c.mailbox().at("m1").reg.record.read);
  EXPECT_THROW(c.confirm_arrival(theirs.id, 5), ReplicaError);
}

TEST(Replica, ResolutionsAreTakenOnce) {
  auto a = device("A", kLww, false);
  auto b = device("B", kLww, false);
  const auto x = a.apply_local(action::WriteDoc{"D1", 0, "a"}, TrueTime{1 * kSec});
  b.apply_local(action::WriteDoc{"D1", 0, "b"}, TrueTime{2 * kSec});
  b.take_resolutions();
  b.apply_remote(x, TrueTime{3 * kSec});
  const auto events = b.take_resolutions();
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().object, "doc:D1");
  EXPECT_EQ(events.back().discarded, std::vector<OpId>{x.id});
  EXPECT_TRUE(b.take_resolutions().empty());
}
