#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "aegis/config.hpp"
#include "aegis/dqn.hpp"
#include "aegis/quantize.hpp"
#include "aegis/sim.hpp"

namespace aegis {

// Derives normalization caps from a short prefix of the scenario run under
// round robin (no weights needed): each cap is the largest raw value seen,
// with 25% headroom so the real run can overshoot the calibration a bit
// before clamping. The queue-index and buffer-fraction features have exact
// ranges, so those caps are pinned rather than measured.
inline NormalizationSpec calibrate_normalization(const ScenarioSpec& scenario,
                                                 const QueueConfig& queues,
                                                 Tick calibration_ticks) {
  NormalizationSpec spec = NormalizationSpec::defaults();
  std::array<double, kFeatureCount> seen{};
  ScenarioSpec probe = scenario;
  probe.scheduler = SchedulerKind::rr;
  probe.duration = std::min(probe.duration, calibration_ticks);
  RunOptions opt;
  opt.queue_config = queues;
  opt.record_trace = false;
  opt.on_context = [&seen](TaskId, const TaskContext& ctx) {
    const auto v = ctx.to_vector();
    for (int i = 0; i < kFeatureCount; ++i) seen[i] = std::max(seen[i], v[i]);
  };
  run_scenario(probe, opt);
  for (int i = 0; i < kFeatureCount; ++i) spec.caps[i] = std::max(1.0, seen[i] * 1.25);
  spec.caps[6] = static_cast<double>(queues.num_queues);  // prio: exact queue range
  spec.caps[10] = 1.0;                                    // availability: a fraction
  spec.validate();
  return spec;
}

struct EpochLog {
  std::int64_t step = 0;        // optimization step index
  std::int64_t cycle = 0;       // dispatch cycle at which the step ran
  double loss = 0;
  double mean_reward_loss = 0;  // mean provenance reward over the trailing window
  double mean_reward_util = 0;  // mean utilization reward over the trailing window
  double drop_ratio = 0;        // cumulative dropped/produced at this point
};

// Owns the online/target networks, replay memory, and the convergence
// window. Pure synchronous core: callers decide when add_transition and
// train_once run, so wiring it directly into the engine's hooks gives a
// fully deterministic training loop.
class Trainer {
 public:
  Trainer(const TrainingConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        online_(QNetwork::random_init(seed)),
        target_(online_),
        memory_(cfg.hp.replay_capacity),
        rng_(seed ^ 0xd1b54a32d192ed03ULL),
        snapshot_(std::make_shared<QuantizedNetwork>(quantize_int4(online_))) {
    cfg_.validate();
  }

  void add_transition(const Transition& t, double reward_loss, double reward_util) {
    memory_.push(t);
    window_.push_back(reward_loss);
    if (reward_loss != 0.0) ++window_nonzero_;
    while (window_.size() > static_cast<std::size_t>(cfg_.convergence_window)) {
      if (window_.front() != 0.0) --window_nonzero_;
      window_.pop_front();
    }
    recent_loss_sum_ += reward_loss;
    recent_util_sum_ += reward_util;
    ++recent_count_;
  }

  bool can_train() const { return memory_.size() >= static_cast<std::size_t>(cfg_.hp.batch_size); }

  double train_once() {
    const double loss = train_step(online_, target_, memory_, cfg_.hp, rng_);
    snapshot_ = std::make_shared<QuantizedNetwork>(quantize_int4(online_));
    ++steps_;
    return loss;
  }

  // The loss-reward side of every transition in the trailing window is zero.
  bool converged() const {
    return window_.size() == static_cast<std::size_t>(cfg_.convergence_window) &&
           window_nonzero_ == 0;
  }

  void log_epoch(std::int64_t cycle, double loss) {
    EpochLog row;
    row.step = steps_;
    row.cycle = cycle;
    row.loss = loss;
    row.mean_reward_loss = recent_count_ ? recent_loss_sum_ / recent_count_ : 0.0;
    row.mean_reward_util = recent_count_ ? recent_util_sum_ / recent_count_ : 0.0;
    row.drop_ratio = -row.mean_reward_loss;  // mean dropped share of recent cycles
    log_.push_back(row);
    recent_loss_sum_ = recent_util_sum_ = 0;
    recent_count_ = 0;
  }

  const QNetwork& online() const { return online_; }
  const ReplayMemory& memory() const { return memory_; }
  std::shared_ptr<const QuantizedNetwork> snapshot() const { return snapshot_; }
  const std::vector<EpochLog>& log() const { return log_; }
  std::int64_t steps() const { return steps_; }
  const TrainingConfig& config() const { return cfg_; }

 private:
  TrainingConfig cfg_;
  QNetwork online_;
  QNetwork target_;
  ReplayMemory memory_;
  std::mt19937_64 rng_;
  std::shared_ptr<const QuantizedNetwork> snapshot_;
  std::deque<double> window_;
  std::int64_t window_nonzero_ = 0;
  double recent_loss_sum_ = 0, recent_util_sum_ = 0;
  std::int64_t recent_count_ = 0;
  std::int64_t steps_ = 0;
  std::vector<EpochLog> log_;
};

// Decoupled trainer: the engine pushes transitions into a bounded FIFO and
// reads the freshest quantized snapshot; a worker thread does the gradient
// work. If the queue is full the oldest transition is discarded (the engine
// must never block on the learner). Results are not bit-reproducible across
// runs; the synchronous path exists for that.
class AsyncTrainer {
 public:
  AsyncTrainer(const TrainingConfig& cfg, std::uint64_t seed, std::size_t queue_capacity = 4096)
      : trainer_(cfg, seed), queue_capacity_(queue_capacity) {
    set_snapshot(trainer_.snapshot());
    worker_ = std::thread([this] { run(); });
  }

  ~AsyncTrainer() { stop(); }

  void push_transition(const Transition& t, double reward_loss, double reward_util) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (queue_.size() >= queue_capacity_) {
        queue_.pop_front();
        ++overflow_;
      }
      queue_.push_back(Item{t, reward_loss, reward_util});
    }
    cv_.notify_one();
  }

  std::shared_ptr<const QuantizedNetwork> snapshot() const {
    std::lock_guard<std::mutex> lk(snapshot_mu_);
    return snapshot_;
  }
  bool converged() const { return converged_.load(); }
  std::int64_t overflow() const { return overflow_.load(); }

  // Drains the queue and joins the worker; the trainer is then safe to read.
  void stop() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_one();
    if (worker_.joinable()) worker_.join();
  }

  const Trainer& trainer() const { return trainer_; }
  Trainer& trainer() { return trainer_; }

 private:
  struct Item {
    Transition t;
    double reward_loss;
    double reward_util;
  };

  void run() {
    std::int64_t since_train = 0;
    for (;;) {
      Item item;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;  // stopping and drained
        item = queue_.front();
        queue_.pop_front();
      }
      trainer_.add_transition(item.t, item.reward_loss, item.reward_util);
      if (++since_train >= trainer_.config().train_every && trainer_.can_train()) {
        trainer_.train_once();
        set_snapshot(trainer_.snapshot());
        since_train = 0;
      }
      if (trainer_.converged()) converged_.store(true);
    }
  }

  void set_snapshot(std::shared_ptr<const QuantizedNetwork> s) {
    std::lock_guard<std::mutex> lk(snapshot_mu_);
    snapshot_ = std::move(s);
  }

  Trainer trainer_;
  std::size_t queue_capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> queue_;
  bool stopping_ = false;
  std::thread worker_;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const QuantizedNetwork> snapshot_;
  std::atomic<bool> converged_{false};
  std::atomic<std::int64_t> overflow_{0};
};

}  // namespace aegis
