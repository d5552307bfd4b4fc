#include <map>
#include <string>

#include "fitolab/scenario.hpp"

namespace fitolab {

namespace {

// Two writers edit different paragraphs of one document concurrently.
constexpr std::string_view kConcurrentEdit = R"sc(scenario concurrent-edit
max_events 1000
replica alice latency=2s
replica bob latency=2s
doc report "Intro" "Background" "Method" "Results" "Data" "Analysis" "Discussion" "Conclusion"
at 10s alice write report 3 "Results (Alice's revision)"
at 11s bob write report 7 "Conclusion (Bob's revision)"
)sc";

// Read on the phone, reply from a laptop whose clock runs 10 s slow, archive on the phone.
// Stamps of read 2:34:50, reply 2:34:55, archived 2:35:00 would already be in causal
// order; the inversion needs the composing device's clock to lag.
constexpr std::string_view kReplyInversion = R"sc(scenario reply-inversion
max_events 1000
replica phone latency=1s
replica laptop offset=-10s latency=1s
msg m1 folder=inbox read=false body="Quarterly numbers"
at 14:34:50 phone read m1
at 14:34:55 laptop compose r1 reply-to=m1
at 14:35:00 phone move m1 archive
)sc";

// Laptop deletes while the phone (3 s fast) is offline and marks the same messages read.
constexpr std::string_view kOfflinePhantom = R"sc(scenario offline-phantom
max_events 1000
replica laptop latency=500ms
replica phone offset=3s latency=500ms
msg m1 folder=inbox read=false body="Flight itinerary"
msg m2 folder=inbox read=false body="Weekly newsletter"
at 14:30:00 phone offline
at 14:34:14 phone read m1
at 14:34:15 phone read m2
at 14:34:16 laptop delete m1
at 14:34:16.5 laptop delete m2
at 14:40:00 phone online
)sc";

// The phone (30 s slow) marks read after seeing the laptop's unread.
constexpr std::string_view kLostRead = R"sc(scenario lost-read
max_events 1000
replica laptop latency=1s
replica phone offset=-30s latency=1s
msg m1 folder=inbox read=true body="Team offsite"
at 100s laptop unread m1
at 105s phone read m1
)sc";

// A stale inbox state from a fast phone overwrites a move.
constexpr std::string_view kMissingMove = R"sc(scenario missing-move
max_events 1000
replica laptop latency=1s
replica phone offset=60s latency=1s
msg m1 folder=inbox read=false body="Invoice 4471"
at 100s laptop move m1 archive
at 100.5s phone read m1
)sc";

// Two clients that re-assert their flag whenever it is overwritten.
constexpr std::string_view kStuckFlipflop = R"sc(scenario stuck-flipflop
max_events 400
retry 1s
replica alice reassert=true latency=100ms
replica bob reassert=true latency=100ms
msg m1 folder=inbox read=false body="Shared inbox item"
at 10s alice read m1
at 10.05s bob unread m1
)sc";

// A group of three writes overtakes its own dependency on the way to bob.
constexpr std::string_view kTxnGroup = R"sc(scenario txn-group
max_events 1000
replica alice latency=100ms
replica bob latency=3s
doc spec "Title" "Scope" "API" "Errors" "Changelog" "Owners"
at 1s alice write spec 5 "Owners: alice"
at 1.5s bob latency 100ms
at 2s alice group write spec 1 "Scope v2" ; write spec 2 "API v2" ; write spec 3 "Errors v2"
)sc";

// Ten rounds of three devices editing one document concurrently.
std::string divergence_stress() {
  std::string text = R"sc(scenario divergence-stress
max_events 20000
replica mac latency=3s
replica ipad offset=2s latency=3s
replica vm offset=-1s drift_ppm=200 latency=3s
doc thesis "Abstract" "Introduction" "Related work" "Design" "Evaluation" "Conclusion"
)sc";
  const char* devices[] = {"mac", "ipad", "vm"};
  for (int round = 1; round <= 10; ++round) {
    for (int d = 0; d < 3; ++d) {
      const int paragraph = (round + 2 * d) % 6;
      text += "at " + std::to_string(round * 10'000 + d * 500) + "ms " + devices[d] + " write thesis " +
              std::to_string(paragraph) + " \"" + devices[d] + " round " + std::to_string(round) + "\"\n";
    }
  }
  return text;
}

struct Corpus {
  std::map<std::string, std::string> sources;
  std::map<std::string, Scenario> scenarios;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    out.sources = {
        {"S1", std::string(kConcurrentEdit)}, {"S2", std::string(kReplyInversion)},
        {"S3", std::string(kOfflinePhantom)}, {"S4", std::string(kLostRead)},
        {"S5", std::string(kMissingMove)},    {"S6", std::string(kStuckFlipflop)},
        {"S7", divergence_stress()},          {"S8", std::string(kTxnGroup)},
    };
    for (const auto& [key, src] : out.sources) out.scenarios.emplace(key, parse_scenario(src));
    return out;
  }();
  return c;
}

}  // namespace

const std::map<std::string, Scenario>& builtin_scenarios() { return corpus().scenarios; }

std::string_view builtin_source(const std::string& key) {
  const auto& sources = corpus().sources;
  auto it = sources.find(key);
  return it == sources.end() ? std::string_view{} : std::string_view{it->second};
}

}  // namespace fitolab
