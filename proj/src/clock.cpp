#include "fitolab/clock.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fitolab {

LocalTimestamp local_now(const ClockModel& model, TrueTime t) {
  const auto drift = static_cast<std::int64_t>(static_cast<__int128>(t.nanos) * model.drift_ppm / 1'000'000);
  std::int64_t local = t.nanos + model.offset_nanos + drift;
  for (const auto& step : model.steps) {
    if (step.at <= t) local += step.jump_nanos;
  }
  return LocalTimestamp{local};
}

VectorClock::VectorClock(Entries entries) {
  for (auto& [id, counter] : entries) {
    if (counter != 0) entries_.emplace(id, counter);
  }
}

std::uint64_t VectorClock::get(const ReplicaId& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? 0 : it->second;
}

VectorClock vc_increment(const VectorClock& vc, const ReplicaId& id) {
  VectorClock out = vc;
  auto& counter = out.entries_[id];
  if (counter == std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("vector clock counter overflow for replica " + id);
  }
  ++counter;
  return out;
}

VectorClock vc_merge(const VectorClock& a, const VectorClock& b) {
  VectorClock out = a;
  for (const auto& [id, counter] : b.entries_) {
    auto& mine = out.entries_[id];
    mine = std::max(mine, counter);
  }
  return out;
}

CausalOrdering vc_compare(const VectorClock& a, const VectorClock& b) {
  bool a_less = false;  // some entry a < b
  bool b_less = false;  // some entry b < a
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  while (ia != a.entries().end() || ib != b.entries().end()) {
    if (ib == b.entries().end() || (ia != a.entries().end() && ia->first < ib->first)) {
      b_less = true;
      ++ia;
    } else if (ia == a.entries().end() || ib->first < ia->first) {
      a_less = true;
      ++ib;
    } else {
      if (ia->second < ib->second) a_less = true;
      if (ib->second < ia->second) b_less = true;
      ++ia;
      ++ib;
    }
  }
  if (a_less && b_less) return CausalOrdering::Concurrent;
  if (a_less) return CausalOrdering::Before;
  if (b_less) return CausalOrdering::After;
  return CausalOrdering::Equal;
}

std::string_view to_string(CausalOrdering ordering) {
  switch (ordering) {
    case CausalOrdering::Before: return "Before";
    case CausalOrdering::After: return "After";
    case CausalOrdering::Equal: return "Equal";
    case CausalOrdering::Concurrent: return "Concurrent";
  }
  return "?";
}

std::string to_string(const VectorClock& vc) {
  std::string out = "{";
  bool first = true;
  for (const auto& [id, counter] : vc.entries()) {
    if (!first) out += ',';
    first = false;
    out += id;
    out += ':';
    out += std::to_string(counter);
  }
  out += '}';
  return out;
}

HybridTimestamp hlc_tick(HybridTimestamp h, LocalTimestamp local, std::optional<HybridTimestamp> received) {
  const std::int64_t recv_wall = received ? received->wall : std::numeric_limits<std::int64_t>::min();
  const std::int64_t wall = std::max({h.wall, local.nanos, recv_wall});

  std::optional<std::uint64_t> base;
  if (wall == h.wall) base = h.logical;
  if (received && wall == received->wall) base = std::max(base.value_or(0), received->logical);
  if (!base) return HybridTimestamp{wall, 0};
  if (*base == std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("hybrid logical counter overflow");
  }
  return HybridTimestamp{wall, *base + 1};
}

std::string to_string(HybridTimestamp h) {
  return "(" + std::to_string(h.wall) + "," + std::to_string(h.logical) + ")";
}

std::string format_nanos(std::int64_t nanos) {
  const bool negative = nanos < 0;
  const auto magnitude = negative ? -static_cast<unsigned __int128>(nanos) : static_cast<unsigned __int128>(nanos);
  const auto seconds = static_cast<unsigned long long>(magnitude / kNanosPerSecond);
  const auto fraction = static_cast<unsigned long long>(magnitude % kNanosPerSecond);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%09llu", negative ? "-" : "", seconds, fraction);
  return buf;
}

}  // namespace fitolab
