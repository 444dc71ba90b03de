#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "aegis/rational.hpp"
#include "aegis/types.hpp"

namespace aegis {

// Waiting-time budgets for queues 2..N on an exponential ladder:
//   t_hat_i = t_hat_inf ^ ((i + 0.5) / N)   with i = 1..N-1 indexing queue i+1,
// rounded to the nearest tick and floored at 1. The primary queue (index 1)
// carries no budget. Values are returned as computed; strict monotonicity is
// a property of sensible t_hat_inf and is enforced by QueueConfig::validate.
inline std::vector<Tick> compute_waiting_times(Tick t_hat_inf, int num_queues) {
  if (t_hat_inf < 1) throw std::invalid_argument("compute_waiting_times: t_hat_inf must be >= 1");
  if (num_queues < 2) throw std::invalid_argument("compute_waiting_times: need at least 2 queues");
  std::vector<Tick> out;
  out.reserve(static_cast<std::size_t>(num_queues) - 1);
  for (int i = 2; i <= num_queues; ++i) {
    const double exponent = (2.0 * i + 1.0) / (2.0 * num_queues);
    const double raw = std::pow(static_cast<double>(t_hat_inf), exponent);
    Tick rounded = static_cast<Tick>(std::llround(raw));
    if (rounded < 1) rounded = 1;
    out.push_back(rounded);
  }
  return out;
}

struct QueueConfig {
  int num_queues = 4;
  std::vector<Tick> waiting_times;  // budgets for queues 2..N, strictly increasing
  Tick slice = 1;                   // dispatch slice length in ticks

  // Throws std::invalid_argument naming the offending field.
  void validate() const {
    if (num_queues < 2)
      throw std::invalid_argument("invalid-config: num_queues must be >= 2");
    if (slice < 1)
      throw std::invalid_argument("invalid-config: slice must be >= 1");
    if (waiting_times.size() != static_cast<std::size_t>(num_queues - 1))
      throw std::invalid_argument(
          "invalid-config: waiting_times must have num_queues-1 entries, got " +
          std::to_string(waiting_times.size()));
    Tick prev = 0;
    for (std::size_t i = 0; i < waiting_times.size(); ++i) {
      if (waiting_times[i] <= prev)
        throw std::invalid_argument(
            "invalid-config: waiting_times[" + std::to_string(i) +
            "] must be strictly increasing and >= 1");
      prev = waiting_times[i];
    }
  }

  // Budget for a 1-based queue index in 2..N.
  Tick waiting_time(int queue) const {
    if (queue < 2 || queue > num_queues)
      throw std::out_of_range("waiting_time: queue index " + std::to_string(queue) +
                              " outside 2.." + std::to_string(num_queues));
    return waiting_times[static_cast<std::size_t>(queue - 2)];
  }

  static QueueConfig exponential(Tick t_hat_inf, int num_queues, Tick slice) {
    QueueConfig cfg;
    cfg.num_queues = num_queues;
    cfg.waiting_times = compute_waiting_times(t_hat_inf, num_queues);
    cfg.slice = slice;
    cfg.validate();
    return cfg;
  }
};

// Hungry factor per queue: h_1 = 0 by definition (the primary queue is the
// fallback, never ranked), h_i = elapsed_i / t_hat_i for i >= 2, exact.
struct HungryFactors {
  std::vector<Rational> values;  // values[0] is queue 1

  const Rational& of(int queue) const { return values.at(static_cast<std::size_t>(queue - 1)); }
};

class QueueSystem {
 public:
  explicit QueueSystem(QueueConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    queues_.resize(static_cast<std::size_t>(cfg_.num_queues));
    elapsed_.assign(static_cast<std::size_t>(cfg_.num_queues), 0);
  }

  const QueueConfig& config() const { return cfg_; }

  int size(int queue) const { return static_cast<int>(q(queue).size()); }
  Tick elapsed(int queue) const { return elapsed_.at(idx(queue)); }

  // Scenario setup hook: start all elapsed counters from a given state.
  void set_elapsed(std::vector<Tick> elapsed) {
    if (elapsed.size() != elapsed_.size())
      throw std::invalid_argument("set_elapsed: need one value per queue");
    for (Tick t : elapsed)
      if (t < 0) throw std::invalid_argument("set_elapsed: negative elapsed time");
    elapsed_ = std::move(elapsed);
  }

  void enqueue(TaskId task, int queue) {
    if (queue < 1 || queue > cfg_.num_queues)
      throw std::out_of_range("enqueue: index-out-of-range, queue " + std::to_string(queue));
    if (members_.count(task))
      throw std::invalid_argument("enqueue: duplicate-task " + std::to_string(task));
    q(queue).push_back(task);
    members_.insert(task);
  }

  HungryFactors hungry_factors() const {
    HungryFactors hf;
    hf.values.reserve(static_cast<std::size_t>(cfg_.num_queues));
    hf.values.emplace_back(0);  // h_1 is identically zero
    for (int queue = 2; queue <= cfg_.num_queues; ++queue)
      hf.values.emplace_back(elapsed_.at(idx(queue)), cfg_.waiting_time(queue));
    return hf;
  }

  // The queue the next dispatch should come from: among non-empty non-primary
  // queues whose hungry factor has reached 1, the largest factor wins, ties
  // going to the smallest index. Falls back to a non-empty primary queue,
  // else nothing is runnable.
  std::optional<int> select_queue() const {
    const HungryFactors hf = hungry_factors();
    int best = 0;
    for (int queue = 2; queue <= cfg_.num_queues; ++queue) {
      if (q(queue).empty()) continue;
      const Rational& h = hf.of(queue);
      if (h < Rational(1)) continue;
      if (best == 0 || h > hf.of(best)) best = queue;
    }
    if (best != 0) return best;
    if (!q(1).empty()) return 1;
    return std::nullopt;
  }

  struct Dispatch {
    TaskId task;
    int queue;
  };

  // Pops the head of the selected queue and resets that queue's elapsed time.
  std::optional<Dispatch> pop_selected() {
    const auto sel = select_queue();
    if (!sel) return std::nullopt;
    auto& dq = q(*sel);
    const TaskId task = dq.front();
    dq.pop_front();
    members_.erase(task);
    elapsed_.at(idx(*sel)) = 0;
    return Dispatch{task, *sel};
  }

  // One scheduler step: all elapsed counters advance a tick, then a dispatch
  // is attempted.
  std::optional<Dispatch> tick_and_dispatch() {
    advance(1);
    return pop_selected();
  }

  void advance(Tick ticks = 1) {
    if (ticks < 0) throw std::invalid_argument("advance: negative tick count");
    for (auto& e : elapsed_) e += ticks;
  }

  bool contains(TaskId task) const { return members_.count(task) != 0; }
  std::size_t total_tasks() const { return members_.size(); }

 private:
  std::size_t idx(int queue) const {
    if (queue < 1 || queue > cfg_.num_queues)
      throw std::out_of_range("queue index-out-of-range: " + std::to_string(queue));
    return static_cast<std::size_t>(queue - 1);
  }
  std::deque<TaskId>& q(int queue) { return queues_.at(idx(queue)); }
  const std::deque<TaskId>& q(int queue) const { return queues_.at(idx(queue)); }

  QueueConfig cfg_;
  std::vector<std::deque<TaskId>> queues_;
  std::vector<Tick> elapsed_;
  std::unordered_set<TaskId> members_;
};

// Upper bound on how long the lowest-priority queue can wait between
// dispatches when every queue stays populated: s * N * t_hat_N / t_hat_2.
// Only meaningful when the slice exceeds every budget (s > t_hat_N), which
// guarantees each budget expires within any single slice; outside that
// regime the precondition is refused rather than producing a vacuous number.
inline Rational starvation_bound(const QueueConfig& cfg) {
  cfg.validate();
  const Tick t2 = cfg.waiting_time(2);
  const Tick tn = cfg.waiting_time(cfg.num_queues);
  if (!(cfg.slice > tn))
    throw std::domain_error("starvation_bound: precondition-violation, requires slice > largest waiting time");
  return Rational(cfg.slice) * Rational(cfg.num_queues) * Rational(tn, t2);
}

// Bound on the finish-time ratio of lowest-queue tasks relative to a fair
// single-queue rotation over the same task set: (t_hat_N / t_hat_2) * N.
inline Rational finish_time_ratio_bound(const QueueConfig& cfg) {
  cfg.validate();
  return Rational(cfg.waiting_time(cfg.num_queues), cfg.waiting_time(2)) *
         Rational(cfg.num_queues);
}

}  // namespace aegis
