#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "aegis/rational.hpp"

namespace aegis {

// Bounded FIFO event store sitting between producers and the consumer.
// Only counts matter to the scheduler, so no per-event payloads are kept;
// occupancy plus lifetime tallies capture everything the reward and the
// conservation check need. Overflow drops the newest events (the arrivals
// that no longer fit), never already-buffered ones.
class EventBuffer {
 public:
  explicit EventBuffer(std::int64_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("EventBuffer: capacity must be >= 1");
  }

  // Offers n events; returns how many fit. The remainder is dropped and
  // charged to both the lifetime and the current-cycle tallies.
  std::int64_t produce(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("EventBuffer::produce: negative count");
    const std::int64_t accepted = std::min(n, capacity_ - occupancy_);
    const std::int64_t dropped = n - accepted;
    occupancy_ += accepted;
    produced_total_ += n;
    dropped_total_ += dropped;
    cycle_events_ += n;
    cycle_dropped_ += dropped;
    return accepted;
  }

  // Drains up to n events; returns how many were actually present.
  std::int64_t consume(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("EventBuffer::consume: negative count");
    const std::int64_t drained = std::min(n, occupancy_);
    occupancy_ -= drained;
    consumed_total_ += drained;
    return drained;
  }

  // Starts a new accounting cycle for the loss ratio.
  void begin_cycle() {
    cycle_events_ = 0;
    cycle_dropped_ = 0;
  }

  // Fraction of this cycle's offered events that were dropped, exact.
  // A cycle with no events loses nothing by definition.
  Rational cycle_loss_ratio() const {
    if (cycle_events_ == 0) return Rational(0);
    return Rational(cycle_dropped_, cycle_events_);
  }

  std::int64_t capacity() const { return capacity_; }
  std::int64_t occupancy() const { return occupancy_; }
  std::int64_t free_space() const { return capacity_ - occupancy_; }
  std::int64_t produced_total() const { return produced_total_; }
  std::int64_t consumed_total() const { return consumed_total_; }
  std::int64_t dropped_total() const { return dropped_total_; }
  std::int64_t cycle_events() const { return cycle_events_; }
  std::int64_t cycle_dropped() const { return cycle_dropped_; }

  // Every produced event must be accounted for as consumed, dropped, or
  // still buffered. A violation is a bookkeeping bug, not a user error.
  void check_conservation() const {
    if (produced_total_ != consumed_total_ + dropped_total_ + occupancy_)
      throw std::logic_error(
          "EventBuffer conservation violated: produced=" + std::to_string(produced_total_) +
          " consumed=" + std::to_string(consumed_total_) +
          " dropped=" + std::to_string(dropped_total_) +
          " occupancy=" + std::to_string(occupancy_));
    if (occupancy_ < 0 || occupancy_ > capacity_)
      throw std::logic_error("EventBuffer occupancy out of range: " + std::to_string(occupancy_));
  }

 private:
  std::int64_t capacity_;
  std::int64_t occupancy_ = 0;
  std::int64_t produced_total_ = 0;
  std::int64_t consumed_total_ = 0;
  std::int64_t dropped_total_ = 0;
  std::int64_t cycle_events_ = 0;
  std::int64_t cycle_dropped_ = 0;
};

}  // namespace aegis
