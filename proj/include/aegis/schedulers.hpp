#pragma once

#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "aegis/queueing.hpp"
#include "aegis/types.hpp"

namespace aegis {

inline constexpr Tick kUnlimitedSlice = std::numeric_limits<Tick>::max();

struct PickResult {
  TaskId task;
  int queue;   // 1-based queue/level the task came from; 1 for single-queue policies
  Tick slice;  // ticks the task may run before the policy wants it back
};

// What every scheduling discipline exposes to the engine: admit a runnable
// task, hand out the next one, take one back at the end of its cycle.
class ReadyPolicy {
 public:
  virtual ~ReadyPolicy() = default;

  // `queue` is the placement target for the multi-queue policy; single-queue
  // disciplines ignore it.
  virtual void admit(TaskId task, int queue) = 0;
  virtual std::optional<PickResult> pick() = 0;
  virtual void replace(TaskId task, int queue, bool yielded, Tick ticks_used) = 0;
  virtual void on_tick_end() {}
  virtual std::size_t ready_count() const = 0;
};

// Non-preemptive FIFO: a dispatched task keeps the core until it finishes or
// yields; a yielding task goes to the back of the line.
class FifoPolicy final : public ReadyPolicy {
 public:
  void admit(TaskId task, int) override { q_.push_back(task); }

  std::optional<PickResult> pick() override {
    if (q_.empty()) return std::nullopt;
    const TaskId t = q_.front();
    q_.pop_front();
    return PickResult{t, 1, kUnlimitedSlice};
  }

  void replace(TaskId task, int, bool, Tick) override { q_.push_back(task); }
  std::size_t ready_count() const override { return q_.size(); }

 private:
  std::deque<TaskId> q_;
};

// Round robin over a single queue with a fixed slice.
class RrPolicy final : public ReadyPolicy {
 public:
  explicit RrPolicy(Tick slice) : slice_(slice) {
    if (slice < 1) throw std::invalid_argument("RrPolicy: slice must be >= 1");
  }

  void admit(TaskId task, int) override { q_.push_back(task); }

  std::optional<PickResult> pick() override {
    if (q_.empty()) return std::nullopt;
    const TaskId t = q_.front();
    q_.pop_front();
    return PickResult{t, 1, slice_};
  }

  void replace(TaskId task, int, bool, Tick) override { q_.push_back(task); }
  std::size_t ready_count() const override { return q_.size(); }

 private:
  Tick slice_;
  std::deque<TaskId> q_;
};

// Multi-level feedback: new tasks enter the top level, burning a full slice
// demotes, yielding keeps the level, and a periodic boost lifts everyone
// back to the top so nothing starves. Slices double per level.
class MlfqPolicy final : public ReadyPolicy {
 public:
  MlfqPolicy(int levels, Tick base_slice, Tick boost_period)
      : levels_(levels), base_slice_(base_slice), boost_period_(boost_period) {
    if (levels < 1) throw std::invalid_argument("MlfqPolicy: levels must be >= 1");
    if (base_slice < 1) throw std::invalid_argument("MlfqPolicy: base slice must be >= 1");
    if (boost_period < 1) throw std::invalid_argument("MlfqPolicy: boost period must be >= 1");
    queues_.resize(static_cast<std::size_t>(levels));
  }

  void admit(TaskId task, int) override {
    level_[task] = 0;
    queues_[0].push_back(task);
  }

  std::optional<PickResult> pick() override {
    for (int l = 0; l < levels_; ++l) {
      if (!queues_[static_cast<std::size_t>(l)].empty()) {
        const TaskId t = queues_[static_cast<std::size_t>(l)].front();
        queues_[static_cast<std::size_t>(l)].pop_front();
        return PickResult{t, l + 1, base_slice_ << l};
      }
    }
    return std::nullopt;
  }

  void replace(TaskId task, int, bool yielded, Tick) override {
    int l = level_.at(task);
    if (!yielded) l = std::min(l + 1, levels_ - 1);
    level_[task] = l;
    queues_[static_cast<std::size_t>(l)].push_back(task);
  }

  void on_tick_end() override {
    if (++ticks_ % boost_period_ != 0) return;
    // Collect top-down so relative order survives the boost.
    std::deque<TaskId> all;
    for (auto& q : queues_) {
      for (TaskId t : q) {
        all.push_back(t);
        level_[t] = 0;
      }
      q.clear();
    }
    queues_[0] = std::move(all);
  }

  std::size_t ready_count() const override {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

 private:
  int levels_;
  Tick base_slice_;
  Tick boost_period_;
  Tick ticks_ = 0;
  std::vector<std::deque<TaskId>> queues_;
  std::map<TaskId, int> level_;
};

// Virtual-deadline fairness: each task accrues runtime divided by its
// weight, and the smallest accrual runs next. Ties break on task id so the
// order is a function of the history alone.
class VdeadlinePolicy final : public ReadyPolicy {
 public:
  VdeadlinePolicy(Tick slice, std::vector<double> weights)
      : slice_(slice), weights_(std::move(weights)) {
    if (slice < 1) throw std::invalid_argument("VdeadlinePolicy: slice must be >= 1");
    for (double w : weights_)
      if (!(w > 0)) throw std::invalid_argument("VdeadlinePolicy: weights must be positive");
    vruntime_.assign(weights_.size(), 0.0);
  }

  void admit(TaskId task, int) override {
    // Late arrivals start at the current minimum so they cannot monopolize
    // the core while catching up on runtime they never had.
    double vr = vruntime_.at(task);
    if (!ready_.empty()) vr = std::max(vr, ready_.begin()->first);
    vruntime_[task] = vr;
    ready_.emplace(vr, task);
  }

  std::optional<PickResult> pick() override {
    if (ready_.empty()) return std::nullopt;
    const auto it = ready_.begin();
    const TaskId t = it->second;
    ready_.erase(it);
    return PickResult{t, 1, slice_};
  }

  void replace(TaskId task, int, bool, Tick ticks_used) override {
    vruntime_[task] += static_cast<double>(ticks_used) / weights_.at(task);
    ready_.emplace(vruntime_[task], task);
  }

  std::size_t ready_count() const override { return ready_.size(); }

 private:
  Tick slice_;
  std::vector<double> weights_;
  std::vector<double> vruntime_;
  std::set<std::pair<double, TaskId>> ready_;
};

// The budgeted multi-queue backbone behind the learned scheduler. Placement
// targets come from the engine (static pin or network decision); this class
// only enforces queue mechanics and budget-driven selection.
class BudgetQueuePolicy final : public ReadyPolicy {
 public:
  explicit BudgetQueuePolicy(QueueConfig cfg) : qs_(std::move(cfg)) {}

  void admit(TaskId task, int queue) override { qs_.enqueue(task, queue); }

  std::optional<PickResult> pick() override {
    const auto d = qs_.pop_selected();
    if (!d) return std::nullopt;
    return PickResult{d->task, d->queue, qs_.config().slice};
  }

  void replace(TaskId task, int queue, bool, Tick) override { qs_.enqueue(task, queue); }
  void on_tick_end() override { qs_.advance(1); }
  std::size_t ready_count() const override { return qs_.total_tasks(); }

  QueueSystem& queue_system() { return qs_; }
  const QueueSystem& queue_system() const { return qs_; }

 private:
  QueueSystem qs_;
};

}  // namespace aegis
