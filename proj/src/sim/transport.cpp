#include "rescuesim/sim/transport.hpp"

#include <algorithm>

namespace rescuesim::sim {

Transport::Transport(const NetworkConfig& cfg, std::size_t nodes, std::uint64_t seed)
    : cfg_(cfg), rng_(derive_seed(seed, "transport")), gst_(seconds_to_sim(cfg.gst)), busy_until_(nodes, 0) {}

void Transport::set_partition(std::vector<int> groups, SimTime start, SimTime end) {
  groups_ = std::move(groups);
  part_start_ = start;
  part_end_ = end;
}

std::optional<SimTime> Transport::send(NodeId from, NodeId to, std::size_t bytes, SimTime now) {
  ++stats_.sent;
  const SimTime start = std::max(now, busy_until_[from]);
  const SimTime done = start + seconds_to_sim(static_cast<double>(bytes) / cfg_.uplink);
  busy_until_[from] = done;
  (void)to;
  double delay;
  if (done < gst_) {
    if (rng_.bernoulli(cfg_.pre_gst_drop)) {
      ++stats_.dropped_pre_gst;
      return std::nullopt;
    }
    delay = rng_.uniform(cfg_.delta, 10.0 * cfg_.delta);
  } else {
    delay = rng_.uniform(cfg_.post_gst_min, cfg_.post_gst_max);
    stats_.max_post_gst_delay = std::max(stats_.max_post_gst_delay, delay);
    if (delay > cfg_.delta) ++stats_.late_after_gst;
  }
  return done + seconds_to_sim(delay);
}

bool Transport::blocked(NodeId from, NodeId to, SimTime at) const {
  if (groups_.empty() || !partition_open(at)) return false;
  return groups_[from] != groups_[to];
}

}  // namespace rescuesim::sim
