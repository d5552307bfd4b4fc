#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fitolab {

using ReplicaId = std::string;

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

/// Ground-truth time inside the simulator. Replicas and strategies never see it.
struct TrueTime {
  std::int64_t nanos = 0;
  friend auto operator<=>(const TrueTime&, const TrueTime&) = default;
};

/// Wall-clock reading reported by one device.
struct LocalTimestamp {
  std::int64_t nanos = 0;
  friend auto operator<=>(const LocalTimestamp&, const LocalTimestamp&) = default;
};

struct ClockStep {
  TrueTime at;
  std::int64_t jump_nanos = 0;
  friend bool operator==(const ClockStep&, const ClockStep&) = default;
};

/// Device clock: local(t) = t + offset + drift_ppm * t / 1e6 + sum of steps with at <= t.
struct ClockModel {
  std::int64_t offset_nanos = 0;
  std::int64_t drift_ppm = 0;
  std::vector<ClockStep> steps;
  friend bool operator==(const ClockModel&, const ClockModel&) = default;
};

[[nodiscard]] LocalTimestamp local_now(const ClockModel& model, TrueTime t);

/// Per-replica counters. Zero entries are never stored, so `==` is semantic equality.
class VectorClock {
 public:
  using Entries = std::map<ReplicaId, std::uint64_t>;

  VectorClock() = default;
  /// Zero counters in `entries` are dropped.
  explicit VectorClock(Entries entries);

  [[nodiscard]] std::uint64_t get(const ReplicaId& id) const;
  [[nodiscard]] const Entries& entries() const { return entries_; }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  friend bool operator==(const VectorClock&, const VectorClock&) = default;

 private:
  friend VectorClock vc_increment(const VectorClock&, const ReplicaId&);
  friend VectorClock vc_merge(const VectorClock&, const VectorClock&);
  Entries entries_;
};

enum class CausalOrdering { Before, After, Equal, Concurrent };

[[nodiscard]] std::string_view to_string(CausalOrdering ordering);

/// Throws std::overflow_error when the counter would wrap.
[[nodiscard]] VectorClock vc_increment(const VectorClock& vc, const ReplicaId& id);
[[nodiscard]] VectorClock vc_merge(const VectorClock& a, const VectorClock& b);
[[nodiscard]] CausalOrdering vc_compare(const VectorClock& a, const VectorClock& b);

/// `{A:1,B:3}`, entries in replica-id order.
[[nodiscard]] std::string to_string(const VectorClock& vc);

/// Hybrid logical clock value; ordered lexicographically on (wall, logical).
struct HybridTimestamp {
  std::int64_t wall = 0;
  std::uint64_t logical = 0;
  friend auto operator<=>(const HybridTimestamp&, const HybridTimestamp&) = default;
};

/// Standard HLC update. For a send/local event pass no `received`.
///
///   wall'    = max(h.wall, local, received.wall)
///   logical' = max of the logical parts whose wall equals wall', plus one;
///              zero when wall' exceeds every input wall.
///
/// The result is strictly greater than `h` and than `received`.
[[nodiscard]] HybridTimestamp hlc_tick(HybridTimestamp h, LocalTimestamp local,
                                       std::optional<HybridTimestamp> received = std::nullopt);

[[nodiscard]] std::string to_string(HybridTimestamp h);

/// Fixed-point seconds with nine decimals, e.g. `-60.000000000`.
[[nodiscard]] std::string format_nanos(std::int64_t nanos);

}  // namespace fitolab
