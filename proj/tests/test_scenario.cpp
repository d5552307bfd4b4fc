#include <gtest/gtest.h>

#include <random>

#include "fitolab/scenario.hpp"

using namespace fitolab;

namespace {

constexpr std::int64_t kSec = kNanosPerSecond;

std::size_t error_line(std::string_view text) {
  try {
    (void)parse_scenario(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string error_text(std::string_view text) {
  try {
    (void)parse_scenario(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Scenario, ConcurrentEditShape) {
  const auto& s = builtin_scenarios().at("S1");
  EXPECT_EQ(s.name, "concurrent-edit");
  ASSERT_EQ(s.replicas.size(), 2u);
  ASSERT_EQ(s.script.size(), 2u);
  for (const auto& line : s.script) {
    const auto* act = std::get_if<directive::Act>(&line.directive);
    ASSERT_NE(act, nullptr);
    EXPECT_TRUE(std::holds_alternative<action::WriteDoc>(act->kind));
  }
  EXPECT_EQ(s.docs.at(0).paragraphs.size(), 8u);
}

TEST(Scenario, EmptyScriptIsValid) {
  const auto s = parse_scenario("scenario nothing\nreplica a\n");
  EXPECT_EQ(s.name, "nothing");
  EXPECT_TRUE(s.script.empty());
  EXPECT_EQ(s.replicas.size(), 1u);
}

TEST(Scenario, CommentsAndBlankLinesIgnored) {
  const auto s = parse_scenario("# leading comment\n\nscenario c\nreplica a   # trailing\n");
  EXPECT_EQ(s.replicas.at(0).id, "a");
}

TEST(Scenario, UndeclaredReplicaNamesIt) {
  const auto text = "scenario x\nreplica A\nreplica B\nmsg m1\nat 1s C read m1\n";
  EXPECT_EQ(error_line(text), 5u);
  EXPECT_NE(error_text(text).find("C"), std::string::npos);
}

TEST(Scenario, UnsortedScriptRejected) {
  const auto text = "scenario x\nreplica A\nmsg m1\nat 5s A read m1\nat 3s A unread m1\n";
  EXPECT_EQ(error_line(text), 5u);
  EXPECT_NE(error_text(text).find("sorted"), std::string::npos);
}

TEST(Scenario, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("scenario x\nreplica A latency=0s\n"), 2u);
  EXPECT_EQ(error_line("scenario x\nreplica A\nreplica A\n"), 3u);
  EXPECT_EQ(error_line("scenario x\nbogus 1\n"), 2u);
  EXPECT_EQ(error_line("scenario x\nreplica A\nmsg m1\nat 1s A fly m1\n"), 4u);
  EXPECT_EQ(error_line("scenario x\nmsg m1 body=\"open\n"), 2u);
  EXPECT_EQ(error_line("scenario x\nreplica A\npartition 5s 2s A\n"), 3u);
}

TEST(Scenario, GroupMembersNeedRoomOnTheReplica) {
  const auto text =
      "scenario x\nreplica A\ndoc d \"a\" \"b\"\nat 1s A group write d 0 \"x\" ; write d 1 \"y\"\nat 1s A write d 0 \"z\"\n";
  EXPECT_EQ(error_line(text), 5u);
}

TEST(Scenario, OfflineIntervalCoversTheDeletes) {
  const auto& s = builtin_scenarios().at("S3");
  std::optional<std::int64_t> off;
  std::optional<std::int64_t> on;
  std::vector<std::int64_t> deletes;
  for (const auto& line : s.script) {
    if (std::holds_alternative<directive::Offline>(line.directive)) off = line.at.nanos;
    if (std::holds_alternative<directive::Online>(line.directive)) on = line.at.nanos;
    if (const auto* act = std::get_if<directive::Act>(&line.directive);
        act && std::holds_alternative<action::DeleteMsg>(act->kind)) {
      deletes.push_back(line.at.nanos);
    }
  }
  ASSERT_TRUE(off && on);
  ASSERT_EQ(deletes.size(), 2u);
  for (auto t : deletes) {
    EXPECT_LT(*off, t);
    EXPECT_LT(t, *on);
  }
}

TEST(Scenario, PrintParseRoundTripsEveryBuiltin) {
  for (const auto& [key, s] : builtin_scenarios()) {
    const auto text = print_scenario(s);
    EXPECT_EQ(parse_scenario(text), s) << key << "\n" << text;
    EXPECT_EQ(print_scenario(parse_scenario(text)), text) << key;
    EXPECT_EQ(parse_scenario(builtin_source(key)), s) << key;
  }
  EXPECT_GE(builtin_scenarios().size(), 7u);
}

TEST(Duration, Units) {
  EXPECT_EQ(parse_duration("10s"), 10 * kSec);
  EXPECT_EQ(parse_duration("250ms"), 250'000'000);
  EXPECT_EQ(parse_duration("-60s"), -60 * kSec);
  EXPECT_EQ(parse_duration("1500us"), 1'500'000);
  EXPECT_EQ(parse_duration("7ns"), 7);
  EXPECT_EQ(parse_duration("2m"), 120 * kSec);
  EXPECT_EQ(parse_duration("1h"), 3600 * kSec);
  EXPECT_EQ(parse_duration("0.5s"), kSec / 2);
  EXPECT_EQ(parse_duration("14:34:17"), ((14 * 60 + 34) * 60 + 17) * kSec);
  EXPECT_EQ(parse_duration("14:34:17.250"), ((14 * 60 + 34) * 60 + 17) * kSec + 250'000'000);
  EXPECT_FALSE(parse_duration(""));
  EXPECT_FALSE(parse_duration("10"));
  EXPECT_FALSE(parse_duration("10parsecs"));
  EXPECT_FALSE(parse_duration("1:2"));
}

TEST(Duration, PrintRoundTripsRandomValues) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> dist(-1'000'000 * kSec, 1'000'000 * kSec);
  for (int i = 0; i < 5000; ++i) {
    const auto v = i % 4 == 0 ? dist(rng) / kSec * kSec : dist(rng);
    const auto text = print_duration(v);
    ASSERT_EQ(parse_duration(text), v) << text;
  }
  EXPECT_EQ(print_duration(0), "0s");
  EXPECT_EQ(print_duration(2 * kSec), "2s");
}
