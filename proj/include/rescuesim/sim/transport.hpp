#pragma once

// Partially synchronous point-to-point transport. Each sender has one uplink that
// serializes its outbound copies; propagation delay is drawn per copy.

#include <optional>
#include <vector>

#include "rescuesim/rng.hpp"
#include "rescuesim/sim/config.hpp"

namespace rescuesim::sim {

struct DelayStats {
  std::uint64_t sent = 0;
  std::uint64_t dropped_pre_gst = 0;
  std::uint64_t dropped_partition = 0;
  std::uint64_t delivered = 0;
  /// Largest propagation delay of a copy sent at or after GST, seconds.
  double max_post_gst_delay = 0.0;
  /// Copies sent after GST whose propagation exceeded delta; the contract requires zero.
  std::uint64_t late_after_gst = 0;
};

class Transport {
 public:
  Transport(const NetworkConfig& cfg, std::size_t nodes, std::uint64_t seed);

  /// Group id per node; copies between different groups are dropped while the window is open.
  void set_partition(std::vector<int> groups, SimTime start, SimTime end);

  /// Queues one copy on the sender's uplink. Returns the delivery time, or nullopt
  /// when the copy is lost before GST.
  std::optional<SimTime> send(NodeId from, NodeId to, std::size_t bytes, SimTime now);

  /// Checked at delivery time.
  bool blocked(NodeId from, NodeId to, SimTime at) const;
  void note_partition_drop() { ++stats_.dropped_partition; }
  void note_delivered() { ++stats_.delivered; }

  bool partition_open(SimTime at) const { return at >= part_start_ && at < part_end_; }
  int group_of(NodeId id) const { return groups_.empty() ? 0 : groups_[id]; }
  const DelayStats& stats() const { return stats_; }

 private:
  NetworkConfig cfg_;
  Rng rng_;
  SimTime gst_;
  std::vector<SimTime> busy_until_;
  std::vector<int> groups_;
  SimTime part_start_ = 0, part_end_ = 0;
  DelayStats stats_;
};

}  // namespace rescuesim::sim
