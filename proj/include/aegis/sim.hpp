#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aegis/dqn.hpp"
#include "aegis/event_buffer.hpp"
#include "aegis/features.hpp"
#include "aegis/quantize.hpp"
#include "aegis/queueing.hpp"
#include "aegis/random.hpp"
#include "aegis/schedulers.hpp"
#include "aegis/types.hpp"

namespace aegis {

// Event output of a task per scheduled tick, as a function of how many ticks
// the task has run so far. Scheduled time, not wall time: a task that is
// starved emits nothing, which is exactly the coupling the scheduler learns.
struct ProducerProfile {
  enum class Kind { none, constant, bursty, doubling };

  Kind kind = Kind::none;
  std::int64_t rate = 0;          // events per scheduled tick (peak rate for bursty)
  std::int64_t period = 0;        // bursty: scheduled ticks per on/off cycle
  std::int64_t duty = 0;          // bursty: scheduled ticks at peak within a period
  std::int64_t double_every = 1;  // doubling: scheduled ticks between rate doublings

  std::int64_t events_at(std::int64_t scheduled_tick) const {
    switch (kind) {
      case Kind::none:
        return 0;
      case Kind::constant:
        return rate;
      case Kind::bursty:
        return (scheduled_tick % period) < duty ? rate : 0;
      case Kind::doubling: {
        std::int64_t shift = scheduled_tick / double_every;
        if (shift > 40) shift = 40;  // cap: doubling tests run a handful of cycles
        return rate << shift;
      }
    }
    return 0;
  }

  void validate(const std::string& where) const {
    if (rate < 0) throw std::invalid_argument("invalid-config: " + where + ".rate must be >= 0");
    if (kind == Kind::bursty && (period < 1 || duty < 0 || duty > period))
      throw std::invalid_argument("invalid-config: " + where +
                                  " bursty profile needs period >= 1 and 0 <= duty <= period");
    if (kind == Kind::doubling && double_every < 1)
      throw std::invalid_argument("invalid-config: " + where + ".double_every must be >= 1");
  }
};

// Per-tick chances of scheduler-visible task behavior. A probability of zero
// costs no RNG draw, so purely compute-bound tasks leave the random stream
// untouched.
struct BehaviorSpec {
  double yield_prob = 0;  // give up the core early this tick
  double stop_prob = 0;   // receive a stop signal
  double wait_prob = 0;   // block on a resource
  double wake_prob = 0;   // get woken by another task

  void validate(const std::string& where) const {
    for (double p : {yield_prob, stop_prob, wait_prob, wake_prob})
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("invalid-config: " + where +
                                    " behavior probabilities must be in [0, 1]");
  }
};

struct SimTask {
  std::string name;
  Tick arrival = 0;
  std::int64_t cpu_demand = -1;  // scheduled ticks until it finishes, -1 = never
  double weight = 1;             // share under the virtual-deadline policy
  ProducerProfile producer;
  BehaviorSpec behavior;
  bool is_consumer = false;  // drains the event buffer while scheduled
  int initial_queue = 1;     // first placement under the multi-queue policy
};

struct BufferConfig {
  std::int64_t capacity = 256;
  std::int64_t drain_per_tick = 16;  // consumer throughput while scheduled
};

enum class SchedulerKind { aegis, fifo, rr, mlfq, vdeadline };

inline std::string to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::aegis: return "aegis";
    case SchedulerKind::fifo: return "fifo";
    case SchedulerKind::rr: return "rr";
    case SchedulerKind::mlfq: return "mlfq";
    case SchedulerKind::vdeadline: return "vdeadline";
  }
  return "?";
}

inline SchedulerKind scheduler_from_string(const std::string& s) {
  if (s == "aegis") return SchedulerKind::aegis;
  if (s == "fifo") return SchedulerKind::fifo;
  if (s == "rr") return SchedulerKind::rr;
  if (s == "mlfq") return SchedulerKind::mlfq;
  if (s == "vdeadline") return SchedulerKind::vdeadline;
  throw std::invalid_argument("invalid-config: unknown scheduler '" + s + "'");
}

struct MlfqParams {
  int levels = 3;
  Tick boost_period = 200;
};

struct ScenarioSpec {
  std::string name = "scenario";
  std::vector<SimTask> tasks;
  int cores = 1;
  Tick duration = 0;
  BufferConfig buffer;
  MlfqParams mlfq;
  SchedulerKind scheduler = SchedulerKind::aegis;
  std::uint64_t seed = 1;

  void validate(int num_queues) const {
    if (cores < 1) throw std::invalid_argument("invalid-config: cores must be >= 1");
    if (duration < 1) throw std::invalid_argument("invalid-config: duration must be >= 1");
    if (buffer.capacity < 1)
      throw std::invalid_argument("invalid-config: buffer.capacity must be >= 1");
    if (buffer.drain_per_tick < 0)
      throw std::invalid_argument("invalid-config: buffer.drain_per_tick must be >= 0");
    if (tasks.empty()) throw std::invalid_argument("invalid-config: tasks must be non-empty");
    if (mlfq.levels < 1 || mlfq.boost_period < 1)
      throw std::invalid_argument("invalid-config: mlfq needs levels >= 1 and boost_period >= 1");
    std::set<std::string> names;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& t = tasks[i];
      const std::string where = "tasks[" + std::to_string(i) + "]";
      if (t.name.empty()) throw std::invalid_argument("invalid-config: " + where + ".name empty");
      if (!names.insert(t.name).second)
        throw std::invalid_argument("invalid-config: duplicate task name '" + t.name + "'");
      if (t.arrival < 0)
        throw std::invalid_argument("invalid-config: " + where + ".arrival must be >= 0");
      if (t.cpu_demand == 0 || t.cpu_demand < -1)
        throw std::invalid_argument("invalid-config: " + where + ".cpu_demand must be -1 or >= 1");
      if (!(t.weight > 0))
        throw std::invalid_argument("invalid-config: " + where + ".weight must be > 0");
      if (t.initial_queue < 1 || t.initial_queue > num_queues)
        throw std::invalid_argument("invalid-config: " + where + ".initial_queue outside 1.." +
                                    std::to_string(num_queues));
      t.producer.validate(where + ".producer");
      t.behavior.validate(where + ".behavior");
    }
  }
};

struct TraceRecord {
  Tick tick;
  int core;
  std::int32_t task;  // index into ScenarioSpec::tasks, -1 when the core idled
  int queue;          // queue/level the running task was dispatched from, 0 if idle
  bool new_dispatch;  // first tick of a dispatch cycle
  std::int64_t produced;  // events this core's task offered this tick
  std::int64_t dropped;   // of those, how many the buffer rejected
  std::int64_t consumed;  // events this core's task drained this tick
  std::int64_t occupancy; // buffer fill at end of tick (global)
};

struct Metrics {
  std::int64_t produced = 0;
  std::int64_t consumed = 0;
  std::int64_t dropped = 0;
  double loss_ratio = 0;  // dropped / produced, 0 when nothing was produced
  std::int64_t idle_ticks = 0;
  std::int64_t dispatch_cycles = 0;
  std::int64_t decisions = 0;   // placement decision points (network mode)
  std::int64_t inferences = 0;  // decisions that consulted the network
  std::int64_t gate_skips = 0;  // decisions resolved by the change gate
  Tick end_tick = 0;            // ticks actually simulated
  std::map<std::string, Tick> finish_ticks;  // tasks that completed their demand
  std::vector<std::string> unfinished;       // finite-demand tasks that did not
  Tick last_finish = -1;                     // latest entry in finish_ticks
};

struct SimTrace {
  std::vector<TraceRecord> records;
  Metrics metrics;
  std::vector<std::string> task_names;
};

enum class PlacementMode { pinned, network };

// Everything about a run that is not workload: scheduler configuration,
// placement policy, inference gating, and the training integration hooks.
struct RunOptions {
  QueueConfig queue_config;  // multi-queue policy shape; slice feeds all policies
  PlacementMode placement = PlacementMode::pinned;

  // network placement sources; exactly one is consulted per inference
  bool use_quantized = true;
  const QNetwork* float_net = nullptr;
  const QuantizedNetwork* quantized_net = nullptr;
  // When set, overrides quantized_net at every inference; lets a trainer swap
  // in fresh weights mid-run.
  std::function<const QuantizedNetwork*()> snapshot_fn;

  bool delta_gate_enabled = false;
  double delta = 0.25;
  NormalizationSpec norm = NormalizationSpec::defaults();

  std::vector<Tick> initial_elapsed;  // optional queue-elapsed seed (multi-queue policy)
  bool record_trace = true;
  bool stop_when_finite_done = false;  // end once every finite-demand task finished

  // training hooks; on_transition also reports the two reward components
  // (provenance, utilization) so a trainer can watch them separately
  std::function<double(std::int64_t cycle)> epsilon_fn;  // absent = greedy
  std::function<void(const Transition&, double, double)> on_transition;
  std::function<bool(std::int64_t cycle)> after_cycle;  // return false to stop the run
  std::function<void(TaskId, const TaskContext&)> on_context;  // after every context update

  RunOptions() : queue_config(QueueConfig::exponential(500000, 4, 1)) {}
};

namespace detail {

struct TaskRuntime {
  bool alive = false;     // admitted and not finished
  bool arrived = false;
  std::int64_t remaining = -1;
  std::int64_t scheduled_ticks = 0;
  int current_queue = 1;
  std::int64_t cycles_completed = 0;
  TaskContext ctx;

  // accumulated over the current dispatch cycle
  Tick cyc_ticks = 0;
  int cyc_stops = 0, cyc_waits = 0, cyc_wakes = 0;
  std::int64_t cyc_events = 0, cyc_drops = 0;
  double cyc_lat_sum = 0;
  std::int64_t cyc_lat_n = 0;
  std::int64_t idle_before_dispatch = 0;
  std::int64_t idle_mark = 0;  // global idle count at this task's last cycle end

  // reward bookkeeping for the transition begun at the last placement
  bool has_pending = false;
  StateVector pending_state{};
  int pending_action = 1;
  std::int64_t pending_idle = 0;
  std::int64_t produced_mark = 0;
  std::int64_t dropped_mark = 0;
};

struct CoreState {
  std::optional<TaskId> running;
  int queue = 0;
  Tick slice_left = 0;
  bool new_dispatch = false;
  bool yielded = false;
  bool finished = false;
};

}  // namespace detail

// Runs one scenario to completion under the configured scheduler. Fully
// deterministic for a given (scenario, options) pair: all randomness flows
// from two seeded generators, one for workload behavior and one for policy
// exploration, so enabling or disabling inference features cannot disturb
// how the workload itself unfolds.
inline SimTrace run_scenario(const ScenarioSpec& spec, const RunOptions& opt) {
  opt.queue_config.validate();
  spec.validate(opt.queue_config.num_queues);
  opt.norm.validate();
  if (opt.placement == PlacementMode::network && spec.scheduler == SchedulerKind::aegis) {
    if (opt.use_quantized && !opt.quantized_net && !opt.snapshot_fn)
      throw std::invalid_argument("run_scenario: missing-weights, network placement needs a quantized net");
    if (!opt.use_quantized && !opt.float_net)
      throw std::invalid_argument("run_scenario: missing-weights, network placement needs a float net");
  }

  std::mt19937_64 behavior_rng(spec.seed);
  std::mt19937_64 policy_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);

  std::unique_ptr<ReadyPolicy> policy;
  switch (spec.scheduler) {
    case SchedulerKind::aegis:
      policy = std::make_unique<BudgetQueuePolicy>(opt.queue_config);
      break;
    case SchedulerKind::fifo:
      policy = std::make_unique<FifoPolicy>();
      break;
    case SchedulerKind::rr:
      policy = std::make_unique<RrPolicy>(opt.queue_config.slice);
      break;
    case SchedulerKind::mlfq:
      policy = std::make_unique<MlfqPolicy>(spec.mlfq.levels, opt.queue_config.slice,
                                            spec.mlfq.boost_period);
      break;
    case SchedulerKind::vdeadline: {
      std::vector<double> weights;
      for (const auto& t : spec.tasks) weights.push_back(t.weight);
      policy = std::make_unique<VdeadlinePolicy>(opt.queue_config.slice, std::move(weights));
      break;
    }
  }
  if (spec.scheduler == SchedulerKind::aegis && !opt.initial_elapsed.empty())
    static_cast<BudgetQueuePolicy&>(*policy).queue_system().set_elapsed(opt.initial_elapsed);

  EventBuffer buffer(spec.buffer.capacity);
  std::vector<detail::TaskRuntime> rt(spec.tasks.size());
  std::vector<detail::CoreState> cores(static_cast<std::size_t>(spec.cores));

  SimTrace trace;
  for (const auto& t : spec.tasks) trace.task_names.push_back(t.name);
  Metrics& m = trace.metrics;
  if (opt.record_trace)
    trace.records.reserve(static_cast<std::size_t>(
        std::min<std::int64_t>(spec.duration * spec.cores, 1 << 22)));

  std::int64_t finite_unfinished = 0;
  for (const auto& t : spec.tasks)
    if (t.cpu_demand > 0) ++finite_unfinished;

  std::int64_t idle_total = 0;
  bool stop_requested = false;

  const auto placement_target = [&](TaskId id, const StateVector& state,
                                    const TaskContext* prev, const TaskContext& cur) -> int {
    const SimTask& task = spec.tasks[id];
    if (task.is_consumer) return 1;  // the consumer always keeps the fallback queue
    if (opt.placement == PlacementMode::pinned) return rt[id].current_queue;

    ++m.decisions;
    if (opt.delta_gate_enabled && prev != nullptr &&
        delta_gate(prev, cur, opt.delta) == GateDecision::skip) {
      ++m.gate_skips;
      return rt[id].current_queue;
    }
    ++m.inferences;
    const double eps = opt.epsilon_fn ? opt.epsilon_fn(m.dispatch_cycles) : 0.0;
    if (eps > 0.0 && uniform_unit(policy_rng) < eps)
      return 1 + static_cast<int>(uniform_index(policy_rng, QNetwork::kOutput));
    if (opt.use_quantized) {
      const QuantizedNetwork* qn = opt.snapshot_fn ? opt.snapshot_fn() : opt.quantized_net;
      return quantized_argmax(*qn, to_int_state(state));
    }
    return argmax_action(forward(*opt.float_net, state));
  };

  Tick t = 0;
  for (; t < spec.duration && !stop_requested; ++t) {
    // arrivals
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
      if (!rt[i].arrived && spec.tasks[i].arrival == t) {
        rt[i].arrived = true;
        rt[i].alive = true;
        rt[i].remaining = spec.tasks[i].cpu_demand;
        rt[i].idle_mark = idle_total;
        const int q0 = spec.tasks[i].is_consumer ? 1 : spec.tasks[i].initial_queue;
        rt[i].current_queue = q0;
        policy->admit(static_cast<TaskId>(i), q0);
      }
    }

    // dispatch onto free cores
    for (auto& core : cores) {
      core.new_dispatch = false;
      if (core.running) continue;
      if (const auto p = policy->pick()) {
        core.running = p->task;
        core.queue = p->queue;
        core.slice_left = p->slice;
        core.new_dispatch = true;
        core.yielded = false;
        core.finished = false;
        auto& r = rt[p->task];
        r.idle_before_dispatch = idle_total - r.idle_mark;
        r.current_queue = p->queue;
      }
    }

    // execute one tick per core
    struct TickIo {
      std::int64_t produced = 0, dropped = 0, consumed = 0;
    };
    std::vector<TickIo> io(cores.size());
    for (std::size_t c = 0; c < cores.size(); ++c) {
      auto& core = cores[c];
      if (!core.running) {
        ++idle_total;
        continue;
      }
      const TaskId id = *core.running;
      const SimTask& task = spec.tasks[id];
      auto& r = rt[id];

      if (task.is_consumer && spec.buffer.drain_per_tick > 0)
        io[c].consumed = buffer.consume(spec.buffer.drain_per_tick);

      const std::int64_t n = task.producer.events_at(r.scheduled_ticks);
      if (n > 0) {
        const std::int64_t backlog = buffer.occupancy();
        const std::int64_t accepted = buffer.produce(n);
        io[c].produced = n;
        io[c].dropped = n - accepted;
        r.cyc_events += n;
        r.cyc_drops += n - accepted;
        r.cyc_lat_sum += static_cast<double>(backlog);
        r.cyc_lat_n += 1;
      }

      r.scheduled_ticks += 1;
      r.cyc_ticks += 1;
      if (r.remaining > 0 && --r.remaining == 0) core.finished = true;

      const BehaviorSpec& b = task.behavior;
      if (b.stop_prob > 0 && bernoulli(behavior_rng, b.stop_prob)) ++r.cyc_stops;
      if (b.wait_prob > 0 && bernoulli(behavior_rng, b.wait_prob)) ++r.cyc_waits;
      if (b.wake_prob > 0 && bernoulli(behavior_rng, b.wake_prob)) ++r.cyc_wakes;
      if (!core.finished && b.yield_prob > 0 && bernoulli(behavior_rng, b.yield_prob))
        core.yielded = true;
      --core.slice_left;
    }

    policy->on_tick_end();
    buffer.check_conservation();

    if (opt.record_trace) {
      for (std::size_t c = 0; c < cores.size(); ++c) {
        const auto& core = cores[c];
        trace.records.push_back(TraceRecord{
            t, static_cast<int>(c),
            core.running ? static_cast<std::int32_t>(*core.running) : -1,
            core.running ? core.queue : 0, core.new_dispatch, io[c].produced, io[c].dropped,
            io[c].consumed, buffer.occupancy()});
      }
    }

    // cycle boundaries
    for (auto& core : cores) {
      if (!core.running) continue;
      if (!(core.finished || core.yielded || core.slice_left == 0)) continue;
      const TaskId id = *core.running;
      const SimTask& task = spec.tasks[id];
      auto& r = rt[id];

      CycleObservations obs;
      obs.ticks_run = r.cyc_ticks;
      obs.voluntary_switches = core.yielded ? 1 : 0;
      obs.waits = r.cyc_waits;
      obs.wakes = r.cyc_wakes;
      obs.stops = r.cyc_stops;
      obs.idle_before = r.idle_before_dispatch;
      obs.queue = core.queue;
      obs.events_produced = r.cyc_events;
      obs.events_dropped = r.cyc_drops;
      obs.has_latency_sample = r.cyc_lat_n > 0;
      obs.latency_mean = r.cyc_lat_n > 0 ? r.cyc_lat_sum / static_cast<double>(r.cyc_lat_n) : 0.0;
      obs.buffer_free_fraction =
          static_cast<double>(buffer.free_space()) / static_cast<double>(buffer.capacity());

      const TaskContext prev_ctx = r.ctx;
      const bool has_prev = r.cycles_completed > 0;
      const TaskContext new_ctx = update_context(r.ctx, obs);
      const StateVector state = normalize(new_ctx, opt.norm);

      if (opt.on_context) opt.on_context(id, new_ctx);

      if (r.has_pending && opt.on_transition) {
        const std::int64_t e = buffer.produced_total() - r.produced_mark;
        const std::int64_t d = buffer.dropped_total() - r.dropped_mark;
        const double rc = reward_provenance(e, d);
        const double rp = reward_utilization(r.pending_idle, obs.idle_before);
        Transition tr;
        tr.state = r.pending_state;
        tr.action = r.pending_action;
        tr.reward = rc + rp;
        tr.next_state = state;
        opt.on_transition(tr, rc, rp);
        r.has_pending = false;
      }

      if (core.finished) {
        r.alive = false;
        m.finish_ticks[task.name] = t;
        m.last_finish = std::max(m.last_finish, t);
        if (task.cpu_demand > 0) --finite_unfinished;
      } else {
        const int target = placement_target(id, state, has_prev ? &prev_ctx : nullptr, new_ctx);
        policy->replace(id, target, core.yielded, r.cyc_ticks);
        r.current_queue = target;
        if (opt.on_transition && opt.placement == PlacementMode::network && !task.is_consumer) {
          r.pending_state = state;
          r.pending_action = target;
          r.pending_idle = obs.idle_before;
          r.produced_mark = buffer.produced_total();
          r.dropped_mark = buffer.dropped_total();
          r.has_pending = true;
        }
      }

      r.ctx = new_ctx;
      r.cycles_completed += 1;
      r.idle_mark = idle_total;
      r.cyc_ticks = 0;
      r.cyc_stops = r.cyc_waits = r.cyc_wakes = 0;
      r.cyc_events = r.cyc_drops = 0;
      r.cyc_lat_sum = 0;
      r.cyc_lat_n = 0;

      core.running.reset();
      ++m.dispatch_cycles;
      if (opt.after_cycle && !opt.after_cycle(m.dispatch_cycles)) stop_requested = true;
    }

    if (opt.stop_when_finite_done && finite_unfinished == 0) {
      ++t;
      break;
    }
  }

  m.end_tick = t;
  m.produced = buffer.produced_total();
  m.consumed = buffer.consumed_total();
  m.dropped = buffer.dropped_total();
  m.loss_ratio = m.produced > 0
                     ? static_cast<double>(m.dropped) / static_cast<double>(m.produced)
                     : 0.0;
  m.idle_ticks = idle_total;
  for (const auto& task : spec.tasks)
    if (task.cpu_demand > 0 && !m.finish_ticks.count(task.name)) m.unfinished.push_back(task.name);
  return trace;
}

}  // namespace aegis
