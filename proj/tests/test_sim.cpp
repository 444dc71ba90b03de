#include <gtest/gtest.h>

#include <vector>

#include "aegis/sim.hpp"

using namespace aegis;

namespace {

SimTask make_task(std::string name, std::int64_t demand, int queue) {
  SimTask t;
  t.name = std::move(name);
  t.cpu_demand = demand;
  t.initial_queue = queue;
  return t;
}

bool same_record(const TraceRecord& a, const TraceRecord& b) {
  return a.tick == b.tick && a.core == b.core && a.task == b.task && a.queue == b.queue &&
         a.new_dispatch == b.new_dispatch && a.produced == b.produced && a.dropped == b.dropped &&
         a.consumed == b.consumed && a.occupancy == b.occupancy;
}

}  // namespace

TEST(ProducerProfile, EmitsPerKindSchedules) {
  ProducerProfile none;
  EXPECT_EQ(none.events_at(7), 0);

  ProducerProfile c;
  c.kind = ProducerProfile::Kind::constant;
  c.rate = 6;
  EXPECT_EQ(c.events_at(0), 6);
  EXPECT_EQ(c.events_at(1000), 6);

  ProducerProfile b;
  b.kind = ProducerProfile::Kind::bursty;
  b.rate = 10;
  b.period = 5;
  b.duty = 2;
  for (int t = 0; t < 10; ++t) EXPECT_EQ(b.events_at(t), (t % 5) < 2 ? 10 : 0) << t;

  ProducerProfile d;
  d.kind = ProducerProfile::Kind::doubling;
  d.rate = 3;
  d.double_every = 4;
  EXPECT_EQ(d.events_at(0), 3);
  EXPECT_EQ(d.events_at(3), 3);
  EXPECT_EQ(d.events_at(4), 6);
  EXPECT_EQ(d.events_at(9), 12);
  EXPECT_EQ(d.events_at(4 * 100), 3LL << 40);  // growth capped, no shift overflow

  ProducerProfile bad;
  bad.kind = ProducerProfile::Kind::bursty;
  bad.rate = 1;
  bad.period = 0;
  EXPECT_THROW(bad.validate("x"), std::invalid_argument);
}

TEST(ScenarioValidation, NamesTheOffendingField) {
  ScenarioSpec spec;
  spec.duration = 10;
  spec.tasks = {make_task("a", -1, 1), make_task("a", -1, 1)};
  EXPECT_THROW(spec.validate(4), std::invalid_argument);

  spec.tasks = {make_task("a", -1, 5)};
  EXPECT_THROW(spec.validate(4), std::invalid_argument);

  spec.tasks = {make_task("a", 0, 1)};
  EXPECT_THROW(spec.validate(4), std::invalid_argument);

  spec.tasks = {make_task("a", -1, 1)};
  EXPECT_NO_THROW(spec.validate(4));

  EXPECT_EQ(scheduler_from_string("mlfq"), SchedulerKind::mlfq);
  EXPECT_THROW(scheduler_from_string("cfs"), std::invalid_argument);
  EXPECT_EQ(to_string(SchedulerKind::vdeadline), "vdeadline");
}

TEST(Engine, ReproducesTheWorkedBudgetDispatchSequence) {
  // Four pinned tasks, one per queue, budgets {2, 4, 8} and all elapsed
  // counters starting at 8. The dispatch order is fully determined by the
  // hungry-factor rule and is checked tick by tick.
  ScenarioSpec spec;
  spec.duration = 12;
  spec.scheduler = SchedulerKind::aegis;
  for (int q = 1; q <= 4; ++q) spec.tasks.push_back(make_task("t" + std::to_string(q), -1, q));

  RunOptions opt;
  opt.queue_config = QueueConfig{4, {2, 4, 8}, 1};
  opt.initial_elapsed = {8, 8, 8, 8};

  const SimTrace trace = run_scenario(spec, opt);
  const std::vector<int> want = {2, 3, 4, 2, 1, 2, 3, 2, 1, 2, 3, 4};
  ASSERT_EQ(trace.records.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(trace.records[i].queue, want[i]) << "tick " << i;
    EXPECT_EQ(trace.records[i].task, want[i] - 1) << "tick " << i;
    EXPECT_TRUE(trace.records[i].new_dispatch);
  }
  EXPECT_EQ(trace.metrics.idle_ticks, 0);
  EXPECT_EQ(trace.metrics.dispatch_cycles, 12);
}

TEST(Engine, FifoRunsToCompletionAndStopsEarlyWhenAsked) {
  ScenarioSpec spec;
  spec.duration = 100;
  spec.scheduler = SchedulerKind::fifo;
  spec.tasks = {make_task("a", 3, 1), make_task("b", 3, 1)};
  RunOptions opt;
  opt.stop_when_finite_done = true;

  const SimTrace trace = run_scenario(spec, opt);
  EXPECT_EQ(trace.metrics.finish_ticks.at("a"), 2);
  EXPECT_EQ(trace.metrics.finish_ticks.at("b"), 5);
  EXPECT_EQ(trace.metrics.last_finish, 5);
  EXPECT_EQ(trace.metrics.end_tick, 6);
  EXPECT_EQ(trace.records.size(), 6u);
  EXPECT_TRUE(trace.metrics.unfinished.empty());
  EXPECT_EQ(trace.metrics.dispatch_cycles, 2);
}

TEST(Engine, FifoWithCertainYieldsAlternates) {
  // yield probability 1 costs no randomness and forces a cycle per tick, so
  // plain FIFO degenerates into strict alternation.
  ScenarioSpec spec;
  spec.duration = 8;
  spec.scheduler = SchedulerKind::fifo;
  spec.tasks = {make_task("a", -1, 1), make_task("b", -1, 1)};
  for (auto& t : spec.tasks) t.behavior.yield_prob = 1.0;

  const SimTrace trace = run_scenario(spec, RunOptions{});
  for (std::size_t i = 0; i < trace.records.size(); ++i)
    EXPECT_EQ(trace.records[i].task, static_cast<std::int32_t>(i % 2)) << i;
}

TEST(Engine, RoundRobinHonorsTheSliceLength) {
  ScenarioSpec spec;
  spec.duration = 12;
  spec.scheduler = SchedulerKind::rr;
  spec.tasks = {make_task("a", -1, 1), make_task("b", -1, 1)};
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 3);

  const SimTrace trace = run_scenario(spec, opt);
  const std::vector<std::int32_t> want = {0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1};
  ASSERT_EQ(trace.records.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(trace.records[i].task, want[i]) << i;
    EXPECT_EQ(trace.records[i].new_dispatch, i % 3 == 0) << i;
  }
}

TEST(Engine, MlfqDemotesAfterEachFullSlice) {
  ScenarioSpec spec;
  spec.duration = 14;
  spec.scheduler = SchedulerKind::mlfq;
  spec.mlfq.levels = 3;
  spec.mlfq.boost_period = 1000;
  spec.tasks = {make_task("hog", -1, 1)};
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 2);  // base slice 2

  const SimTrace trace = run_scenario(spec, opt);
  const std::vector<int> want = {1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3};
  ASSERT_EQ(trace.records.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(trace.records[i].queue, want[i]) << i;
}

TEST(Engine, VirtualDeadlineSharesTheCoreByWeight) {
  ScenarioSpec spec;
  spec.duration = 9;
  spec.scheduler = SchedulerKind::vdeadline;
  spec.tasks = {make_task("heavy", -1, 1), make_task("light", -1, 1)};
  spec.tasks[0].weight = 2.0;
  spec.tasks[1].weight = 1.0;
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 1);

  const SimTrace trace = run_scenario(spec, opt);
  int heavy = 0, light = 0;
  for (const auto& r : trace.records) (r.task == 0 ? heavy : light)++;
  EXPECT_EQ(heavy, 6);
  EXPECT_EQ(light, 3);
}

TEST(Engine, ConsumerDrainsWhatTheProducerOffers) {
  ScenarioSpec spec;
  spec.duration = 20;
  spec.cores = 2;
  spec.scheduler = SchedulerKind::fifo;
  spec.buffer = {64, 8};
  spec.tasks = {make_task("prod", -1, 1), make_task("cons", -1, 1)};
  spec.tasks[0].producer = {ProducerProfile::Kind::constant, 4, 0, 0, 1};
  spec.tasks[1].is_consumer = true;

  const SimTrace trace = run_scenario(spec, RunOptions{});
  EXPECT_EQ(trace.metrics.produced, 80);
  EXPECT_EQ(trace.metrics.consumed, 80);
  EXPECT_EQ(trace.metrics.dropped, 0);
  EXPECT_DOUBLE_EQ(trace.metrics.loss_ratio, 0.0);
  for (const auto& r : trace.records) EXPECT_EQ(r.occupancy, 0) << r.tick;
}

TEST(Engine, CountsDropsWhenTheBufferSaturates) {
  ScenarioSpec spec;
  spec.duration = 10;
  spec.scheduler = SchedulerKind::fifo;
  spec.buffer = {16, 0};
  spec.tasks = {make_task("prod", -1, 1)};
  spec.tasks[0].producer = {ProducerProfile::Kind::constant, 10, 0, 0, 1};

  const SimTrace trace = run_scenario(spec, RunOptions{});
  EXPECT_EQ(trace.metrics.produced, 100);
  EXPECT_EQ(trace.metrics.dropped, 84);
  EXPECT_EQ(trace.metrics.consumed, 0);
  EXPECT_DOUBLE_EQ(trace.metrics.loss_ratio, 0.84);
  EXPECT_EQ(trace.records.back().occupancy, 16);
}

TEST(Engine, IdleCoresAreTracedAsIdle) {
  ScenarioSpec spec;
  spec.duration = 10;
  spec.scheduler = SchedulerKind::fifo;
  spec.tasks = {make_task("late", -1, 1)};
  spec.tasks[0].arrival = 5;

  const SimTrace trace = run_scenario(spec, RunOptions{});
  EXPECT_EQ(trace.metrics.idle_ticks, 5);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(trace.records[static_cast<std::size_t>(t)].task, -1);
    EXPECT_EQ(trace.records[static_cast<std::size_t>(t)].queue, 0);
  }
  EXPECT_EQ(trace.records[5].task, 0);
}

TEST(Engine, LateArrivalFinishesUnderRoundRobin) {
  ScenarioSpec spec;
  spec.duration = 40;
  spec.scheduler = SchedulerKind::rr;
  spec.tasks = {make_task("a", -1, 1), make_task("b", 2, 1)};
  spec.tasks[1].arrival = 4;
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 2);

  const SimTrace trace = run_scenario(spec, opt);
  EXPECT_EQ(trace.metrics.finish_ticks.at("b"), 7);
  EXPECT_EQ(trace.metrics.unfinished.size(), 0u);  // "a" is infinite, not unfinished
}

TEST(Engine, TraceHasOneRecordPerCorePerTick) {
  ScenarioSpec spec;
  spec.duration = 8;
  spec.cores = 2;
  spec.scheduler = SchedulerKind::rr;
  spec.tasks = {make_task("a", -1, 1), make_task("b", -1, 1), make_task("c", -1, 1)};
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 2);

  const SimTrace trace = run_scenario(spec, opt);
  ASSERT_EQ(trace.records.size(), 16u);
  EXPECT_EQ(trace.metrics.idle_ticks, 0);
  for (Tick t = 0; t < 8; ++t) {
    const auto& r0 = trace.records[static_cast<std::size_t>(2 * t)];
    const auto& r1 = trace.records[static_cast<std::size_t>(2 * t + 1)];
    EXPECT_EQ(r0.tick, t);
    EXPECT_EQ(r1.tick, t);
    EXPECT_EQ(r0.core, 0);
    EXPECT_EQ(r1.core, 1);
    EXPECT_NE(r0.task, r1.task);  // one core per task
  }
}

TEST(Engine, NetworkPlacementFollowsTheArgmaxQueue) {
  QNetwork net = QNetwork::zeros();
  net.b2[2] = 1.0;  // queue 3 always wins

  ScenarioSpec spec;
  spec.duration = 12;
  spec.scheduler = SchedulerKind::aegis;
  spec.tasks = {make_task("worker", -1, 1)};

  RunOptions opt;
  opt.queue_config = QueueConfig{4, {2, 4, 8}, 1};
  opt.placement = PlacementMode::network;
  opt.use_quantized = false;
  opt.float_net = &net;

  const SimTrace trace = run_scenario(spec, opt);
  // First dispatch comes from the pinned initial queue at tick 0. The task
  // lands in queue 3 at the end of that tick with the queue clock already at
  // 1, so its factor first reaches 1 at tick 4 and every re-dispatch waits
  // out the full budget: dispatches at ticks 0, 4, 8 and idle in between.
  EXPECT_EQ(trace.records[0].queue, 1);
  EXPECT_EQ(trace.records[3].queue, 0);
  EXPECT_EQ(trace.records[4].queue, 3);
  EXPECT_EQ(trace.records[8].queue, 3);
  EXPECT_EQ(trace.records[11].queue, 0);
  EXPECT_EQ(trace.metrics.idle_ticks, 9);
  EXPECT_EQ(trace.metrics.decisions, 3);
  EXPECT_EQ(trace.metrics.inferences, 3);
  EXPECT_EQ(trace.metrics.gate_skips, 0);

  // The int4 route must place identically for this network.
  const QuantizedNetwork qn = quantize_int4(net);
  RunOptions qopt = opt;
  qopt.use_quantized = true;
  qopt.float_net = nullptr;
  qopt.quantized_net = &qn;
  const SimTrace qtrace = run_scenario(spec, qopt);
  ASSERT_EQ(qtrace.records.size(), trace.records.size());
  for (std::size_t i = 0; i < trace.records.size(); ++i)
    EXPECT_TRUE(same_record(trace.records[i], qtrace.records[i])) << i;
}

TEST(Engine, ChangeGateSuppressesInferenceOnceRatesSettle) {
  // One steady producer that never yields: the switch-rate field stays at
  // zero on both sides and the event-rate EMA enters the 25% band at its
  // third comparison, so of 30 decision points exactly 3 consult the network.
  QNetwork net = QNetwork::zeros();
  net.b2[0] = 1.0;  // stay in queue 1, so every tick is a cycle

  ScenarioSpec spec;
  spec.duration = 30;
  spec.scheduler = SchedulerKind::aegis;
  spec.buffer = {100000, 0};
  spec.tasks = {make_task("steady", -1, 1)};
  spec.tasks[0].producer = {ProducerProfile::Kind::constant, 5, 0, 0, 1};

  RunOptions opt;
  opt.queue_config = QueueConfig{4, {2, 4, 8}, 1};
  opt.placement = PlacementMode::network;
  opt.use_quantized = false;
  opt.float_net = &net;
  opt.delta_gate_enabled = true;
  opt.delta = 0.25;

  const SimTrace trace = run_scenario(spec, opt);
  EXPECT_EQ(trace.metrics.decisions, 30);
  EXPECT_EQ(trace.metrics.inferences, 3);
  EXPECT_EQ(trace.metrics.gate_skips, 27);
}

TEST(Engine, NetworkPlacementWithoutWeightsIsRefused) {
  ScenarioSpec spec;
  spec.duration = 5;
  spec.scheduler = SchedulerKind::aegis;
  spec.tasks = {make_task("w", -1, 1)};
  RunOptions opt;
  opt.placement = PlacementMode::network;
  try {
    run_scenario(spec, opt);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("missing-weights"), std::string::npos);
  }
}

TEST(Engine, TransitionsCarryZeroRewardsWhenNothingDropsOrIdles) {
  QNetwork net = QNetwork::zeros();
  net.b2[0] = 1.0;

  ScenarioSpec spec;
  spec.duration = 10;
  spec.scheduler = SchedulerKind::aegis;
  spec.buffer = {10000, 0};
  spec.tasks = {make_task("p", -1, 1)};
  spec.tasks[0].producer = {ProducerProfile::Kind::constant, 4, 0, 0, 1};

  RunOptions opt;
  opt.placement = PlacementMode::network;
  opt.use_quantized = false;
  opt.float_net = &net;
  int calls = 0;
  opt.on_transition = [&](const Transition& tr, double rc, double rp) {
    ++calls;
    EXPECT_EQ(tr.action, 1);
    EXPECT_DOUBLE_EQ(rc, 0.0);
    EXPECT_DOUBLE_EQ(rp, 0.0);
    EXPECT_DOUBLE_EQ(tr.reward, 0.0);
    EXPECT_DOUBLE_EQ(tr.next_state[6], 32.0);  // queue feature: 1 of 4, scaled to 128
  };

  run_scenario(spec, opt);
  EXPECT_EQ(calls, 9);  // a placement precedes every measured window
}

TEST(Engine, AfterCycleHookCanStopTheRun) {
  ScenarioSpec spec;
  spec.duration = 1000;
  spec.scheduler = SchedulerKind::rr;
  spec.tasks = {make_task("a", -1, 1)};
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 1);
  opt.after_cycle = [](std::int64_t cycle) { return cycle < 5; };

  const SimTrace trace = run_scenario(spec, opt);
  EXPECT_EQ(trace.metrics.dispatch_cycles, 5);
  EXPECT_EQ(trace.metrics.end_tick, 5);
}

TEST(Engine, IdenticalRunsProduceIdenticalTraces) {
  ScenarioSpec spec;
  spec.name = "busy";
  spec.duration = 300;
  spec.cores = 2;
  spec.seed = 42;
  spec.scheduler = SchedulerKind::mlfq;
  spec.buffer = {128, 6};
  spec.tasks = {make_task("p1", -1, 1), make_task("p2", -1, 1), make_task("fin", 40, 1),
                make_task("cons", -1, 1)};
  spec.tasks[0].producer = {ProducerProfile::Kind::bursty, 12, 7, 3, 1};
  spec.tasks[0].behavior = {0.2, 0.1, 0.15, 0.15};
  spec.tasks[1].producer = {ProducerProfile::Kind::constant, 3, 0, 0, 1};
  spec.tasks[1].behavior = {0.35, 0.0, 0.1, 0.2};
  spec.tasks[2].behavior = {0.5, 0.2, 0.0, 0.0};
  spec.tasks[3].is_consumer = true;
  spec.tasks[3].behavior = {0.4, 0.0, 0.0, 0.0};
  RunOptions opt;
  opt.queue_config = QueueConfig::exponential(256, 4, 2);

  const SimTrace a = run_scenario(spec, opt);
  const SimTrace b = run_scenario(spec, opt);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    ASSERT_TRUE(same_record(a.records[i], b.records[i])) << i;
  EXPECT_EQ(a.metrics.produced, b.metrics.produced);
  EXPECT_EQ(a.metrics.dropped, b.metrics.dropped);
  EXPECT_EQ(a.metrics.consumed, b.metrics.consumed);
  EXPECT_EQ(a.metrics.idle_ticks, b.metrics.idle_ticks);
  EXPECT_EQ(a.metrics.dispatch_cycles, b.metrics.dispatch_cycles);
  EXPECT_EQ(a.metrics.finish_ticks, b.metrics.finish_ticks);

  ScenarioSpec other = spec;
  other.seed = 43;
  const SimTrace c = run_scenario(other, opt);
  bool differs = c.records.size() != a.records.size();
  for (std::size_t i = 0; !differs && i < a.records.size(); ++i)
    differs = !same_record(a.records[i], c.records[i]);
  EXPECT_TRUE(differs);
}
