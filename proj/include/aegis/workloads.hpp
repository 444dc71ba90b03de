#pragma once

#include <string>
#include <vector>

#include "aegis/queueing.hpp"
#include "aegis/rational.hpp"
#include "aegis/sim.hpp"

namespace aegis {

// A "super producer" burst: `intensity` identical scan-style producers, each
// emitting `scan_rate` events per scheduled tick, plus a couple of ordinary
// compute tasks so the burst never arrives without bystanders. Aggregate
// output over equal scheduled time is linear in intensity, which is what
// makes the pattern a clean stress knob.
inline std::vector<SimTask> make_super_producer(int intensity, std::int64_t scan_rate,
                                                Tick arrival = 0, std::int64_t cpu_demand = -1,
                                                const std::string& prefix = "super") {
  if (intensity < 1) throw std::invalid_argument("make_super_producer: intensity must be >= 1");
  if (scan_rate < 1) throw std::invalid_argument("make_super_producer: scan_rate must be >= 1");
  std::vector<SimTask> out;
  for (int i = 0; i < intensity; ++i) {
    SimTask t;
    t.name = prefix + "-producer-" + std::to_string(i);
    t.arrival = arrival;
    t.cpu_demand = cpu_demand;
    t.producer.kind = ProducerProfile::Kind::constant;
    t.producer.rate = scan_rate;
    out.push_back(std::move(t));
  }
  for (int i = 0; i < 2; ++i) {
    SimTask t;
    t.name = prefix + "-background-" + std::to_string(i);
    t.arrival = arrival;
    t.cpu_demand = cpu_demand;
    t.behavior.yield_prob = 0.25;
    out.push_back(std::move(t));
  }
  return out;
}

// One adversarial starvation setting: every queue above the lowest is kept
// saturated by hog tasks that never finish, and the tasks we time sit at the
// bottom. Budgets follow the published experiment grid, scaled down to tick
// units with the ratios kept exact; the slice exceeds the largest budget so
// the analytical bound applies.
struct WorstCaseSetting {
  std::string name;
  std::vector<Tick> waiting_times;  // budgets for queues 2..N
  int hogs_per_queue = 10;
  int measured_tasks = 4;
  std::int64_t demand_slices = 2;  // how many full slices each measured task needs
};

inline std::vector<WorstCaseSetting> default_worst_case_settings() {
  return {
      {"E1", {4}},
      {"E2", {7, 500}},
      {"E3", {2, 30, 500}},
      {"E4", {2, 40}},
      {"E5", {2, 400}},
      {"E6", {2, 1750}},
  };
}

struct WorstCaseResult {
  std::string name;
  int num_queues = 0;
  std::vector<Tick> waiting_times;
  Tick slice = 0;
  int measured_tasks = 0;
  Tick budgeted_last_finish = 0;  // multi-queue policy, static placement
  Tick rr_last_finish = 0;
  double ratio = 0;  // budgeted / rr
  Rational bound{0};
  bool within_bound = false;
};

namespace detail {

inline ScenarioSpec worst_case_scenario(const WorstCaseSetting& s, Tick slice, int num_queues,
                                        Tick duration) {
  ScenarioSpec spec;
  spec.name = s.name;
  spec.duration = duration;
  spec.buffer.capacity = 1;  // no event flow in these runs
  spec.buffer.drain_per_tick = 0;
  spec.seed = 1;
  for (int q = 1; q < num_queues; ++q) {
    for (int i = 0; i < s.hogs_per_queue; ++i) {
      SimTask t;
      t.name = "hog-q" + std::to_string(q) + "-" + std::to_string(i);
      t.initial_queue = q;
      spec.tasks.push_back(std::move(t));
    }
  }
  for (int i = 0; i < s.measured_tasks; ++i) {
    SimTask t;
    t.name = "measured-" + std::to_string(i);
    t.cpu_demand = s.demand_slices * slice;
    t.initial_queue = num_queues;
    spec.tasks.push_back(std::move(t));
  }
  return spec;
}

}  // namespace detail

// Runs each setting once under the budgeted multi-queue policy (static
// placement, so the adversarial layout stays put) and once under round robin
// over the identical task set, and compares the last finish time of the
// measured tasks against the analytical ratio bound.
inline std::vector<WorstCaseResult> worst_case_suite(
    std::vector<WorstCaseSetting> settings = default_worst_case_settings()) {
  std::vector<WorstCaseResult> out;
  for (const auto& s : settings) {
    WorstCaseResult r;
    r.name = s.name;
    r.num_queues = static_cast<int>(s.waiting_times.size()) + 1;
    r.waiting_times = s.waiting_times;
    r.slice = s.waiting_times.back() + 1;  // the bound's validity regime
    r.measured_tasks = s.measured_tasks;

    QueueConfig qcfg;
    qcfg.num_queues = r.num_queues;
    qcfg.waiting_times = s.waiting_times;
    qcfg.slice = r.slice;
    qcfg.validate();
    r.bound = finish_time_ratio_bound(qcfg);

    const std::int64_t total_tasks = static_cast<std::int64_t>(s.hogs_per_queue) *
                                         (r.num_queues - 1) +
                                     s.measured_tasks;
    // Generous ceilings; runs end as soon as the measured tasks finish.
    const Tick rr_cap = (total_tasks + 1) * r.slice * (s.demand_slices + 2);
    const Tick budget_cap = static_cast<Tick>(
        (r.bound.to_double() + 2.0) * static_cast<double>(r.slice) *
        static_cast<double>(s.measured_tasks * s.demand_slices + 4) * 2.0);

    RunOptions opt;
    opt.queue_config = qcfg;
    opt.record_trace = false;
    opt.stop_when_finite_done = true;

    ScenarioSpec rr_spec = detail::worst_case_scenario(s, r.slice, r.num_queues, rr_cap);
    rr_spec.scheduler = SchedulerKind::rr;
    const SimTrace rr = run_scenario(rr_spec, opt);
    if (!rr.metrics.unfinished.empty())
      throw std::logic_error("worst_case_suite: rr run did not finish " + s.name);
    r.rr_last_finish = rr.metrics.last_finish;

    ScenarioSpec bq_spec = detail::worst_case_scenario(s, r.slice, r.num_queues, budget_cap);
    bq_spec.scheduler = SchedulerKind::aegis;
    const SimTrace bq = run_scenario(bq_spec, opt);
    if (!bq.metrics.unfinished.empty())
      throw std::logic_error("worst_case_suite: budgeted run did not finish " + s.name);
    r.budgeted_last_finish = bq.metrics.last_finish;

    r.ratio = static_cast<double>(r.budgeted_last_finish) /
              static_cast<double>(r.rr_last_finish);
    r.within_bound = Rational(r.budgeted_last_finish, r.rr_last_finish) <= r.bound;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace aegis
