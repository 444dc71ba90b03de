#pragma once

#include <array>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aegis/config.hpp"
#include "aegis/log.hpp"
#include "aegis/trace.hpp"
#include "aegis/training.hpp"
#include "aegis/weights_io.hpp"
#include "aegis/workloads.hpp"

namespace aegis {

// Process exit codes shared by the commands and the CLI wrapper.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;      // bad config / arguments / files
inline constexpr int kExitViolation = 3;    // a checked bound or expectation failed
inline constexpr int kExitNoConverge = 4;   // training ended without converging

struct CliOverrides {
  std::optional<SchedulerKind> scheduler;
  std::optional<std::uint64_t> seed;
  bool disable_gate = false;
  bool sync_train = false;
};

namespace detail {

inline void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o) {
  if (o.scheduler) cfg.scenario.scheduler = *o.scheduler;
  if (o.seed) cfg.scenario.seed = *o.seed;
  if (o.disable_gate) cfg.gate_enabled = false;
}

inline void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::invalid_argument("cannot create output directory: " + out_dir);
}

inline std::string training_log_csv(const std::vector<EpochLog>& rows) {
  std::ostringstream out;
  out << "step,cycle,loss,mean_reward_loss,mean_reward_util,drop_ratio\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.cycle << ',' << r.loss << ',' << r.mean_reward_loss << ','
        << r.mean_reward_util << ',' << r.drop_ratio << '\n';
  return out.str();
}

}  // namespace detail

// Trains on the configured scenario until the loss-side reward has been zero
// across the convergence window, or until the cycle budget runs out. Always
// writes weights and the per-step log; the exit code reports which of the
// two endings happened.
inline int cmd_train(ExperimentConfig cfg, const CliOverrides& o, const std::string& out_dir) {
  detail::apply_overrides(cfg, o);
  if (cfg.scenario.scheduler != SchedulerKind::aegis)
    throw std::invalid_argument("invalid-config: training requires scheduler=aegis");
  detail::ensure_out_dir(out_dir);

  const NormalizationSpec norm =
      cfg.norm ? *cfg.norm
               : calibrate_normalization(cfg.scenario, cfg.queues, cfg.training.calibration_ticks);
  log_info("training: normalization " + std::string(cfg.norm ? "from config" : "calibrated"));

  RunOptions opt;
  opt.queue_config = cfg.queues;
  opt.placement = PlacementMode::network;
  opt.use_quantized = true;
  opt.delta_gate_enabled = false;  // explore every decision while learning
  opt.norm = norm;
  opt.record_trace = false;

  const std::int64_t budget = cfg.training.cycle_budget;
  const std::int64_t train_every = cfg.training.train_every;
  bool converged = false;

  Trainer* trainer_view = nullptr;
  std::unique_ptr<Trainer> sync_trainer;
  std::unique_ptr<AsyncTrainer> async_trainer;

  if (o.sync_train) {
    sync_trainer = std::make_unique<Trainer>(cfg.training, cfg.scenario.seed);
    trainer_view = sync_trainer.get();
    Trainer& tr = *sync_trainer;
    opt.snapshot_fn = [&tr, holder = std::shared_ptr<const QuantizedNetwork>()]() mutable {
      holder = tr.snapshot();
      return holder.get();
    };
    opt.on_transition = [&tr](const Transition& t, double rc, double rp) {
      tr.add_transition(t, rc, rp);
    };
    opt.after_cycle = [&tr, budget, train_every, &converged](std::int64_t cycle) {
      if (cycle % train_every == 0 && tr.can_train()) {
        const double loss = tr.train_once();
        tr.log_epoch(cycle, loss);
      }
      if (tr.converged()) {
        converged = true;
        return false;
      }
      return cycle < budget;
    };
  } else {
    async_trainer = std::make_unique<AsyncTrainer>(cfg.training, cfg.scenario.seed);
    AsyncTrainer& tr = *async_trainer;
    opt.snapshot_fn = [&tr, holder = std::shared_ptr<const QuantizedNetwork>()]() mutable {
      holder = tr.snapshot();
      return holder.get();
    };
    opt.on_transition = [&tr](const Transition& t, double rc, double rp) {
      tr.push_transition(t, rc, rp);
    };
    opt.after_cycle = [&tr, budget, &converged](std::int64_t cycle) {
      if (tr.converged()) {
        converged = true;
        return false;
      }
      return cycle < budget;
    };
  }
  opt.epsilon_fn = [hp = cfg.training.hp, budget](std::int64_t cycle) {
    return epsilon_at(hp, cycle, budget);
  };

  ScenarioSpec scenario = cfg.scenario;
  // The cycle budget is the real stopping rule; the tick ceiling just keeps a
  // quiet scenario from idling forever.
  scenario.duration = std::max(scenario.duration, budget * cfg.queues.slice * 4);

  const SimTrace trace = run_scenario(scenario, opt);

  if (async_trainer) {
    async_trainer->stop();
    trainer_view = &async_trainer->trainer();
    converged = trainer_view->converged();
    if (async_trainer->overflow() > 0)
      log_warn("training: transition queue dropped " +
               std::to_string(async_trainer->overflow()) + " oldest entries");
  }

  WeightsFile wf;
  wf.float_net = trainer_view->online();
  wf.quantized = quantize_int4(trainer_view->online());
  wf.norm = norm;
  save_weights(out_dir + "/weights_int4.json", [&] {
    WeightsFile q;
    q.quantized = wf.quantized;
    q.norm = norm;
    return q;
  }());
  save_weights(out_dir + "/weights_float.json", [&] {
    WeightsFile f;
    f.float_net = wf.float_net;
    f.norm = norm;
    return f;
  }());
  write_text_file(out_dir + "/training_log.csv", detail::training_log_csv(trainer_view->log()));

  nlohmann::json summary = summary_json(cfg.scenario, trace);
  summary["converged"] = converged;
  summary["train_steps"] = trainer_view->steps();
  summary["cycles_run"] = trace.metrics.dispatch_cycles;
  summary["sync"] = o.sync_train;
  write_json_file(out_dir + "/train_summary.json", summary);

  log_info("training: " + std::string(converged ? "converged" : "budget exhausted") + " after " +
           std::to_string(trace.metrics.dispatch_cycles) + " cycles, " +
           std::to_string(trainer_view->steps()) + " steps");
  return converged ? kExitOk : kExitNoConverge;
}

// Frozen-inference (or baseline) run; writes trace.csv and summary.json.
inline int cmd_eval(ExperimentConfig cfg, const CliOverrides& o, const std::string& weights_path,
                    const std::string& out_dir) {
  detail::apply_overrides(cfg, o);
  detail::ensure_out_dir(out_dir);

  RunOptions opt;
  opt.queue_config = cfg.queues;
  opt.delta_gate_enabled = cfg.gate_enabled && !o.disable_gate;
  opt.delta = cfg.delta;

  WeightsFile wf;
  if (cfg.scenario.scheduler == SchedulerKind::aegis) {
    if (weights_path.empty())
      throw std::invalid_argument("missing-weights: eval with scheduler=aegis needs --weights");
    wf = load_weights(weights_path);
    opt.placement = PlacementMode::network;
    if (wf.quantized) {
      opt.use_quantized = true;
      opt.quantized_net = &*wf.quantized;
    } else {
      opt.use_quantized = false;
      opt.float_net = &*wf.float_net;
    }
    if (wf.norm)
      opt.norm = *wf.norm;
    else if (cfg.norm)
      opt.norm = *cfg.norm;
    else
      throw std::invalid_argument(
          "invalid-config: no normalization in weights file or config");
  }

  const SimTrace trace = run_scenario(cfg.scenario, opt);
  write_text_file(out_dir + "/trace.csv", trace_to_csv(trace));
  nlohmann::json summary = summary_json(cfg.scenario, trace);
  summary["gate_enabled"] = opt.delta_gate_enabled;
  write_json_file(out_dir + "/summary.json", summary);
  log_info("eval: loss_ratio " + std::to_string(trace.metrics.loss_ratio));
  return kExitOk;
}

namespace detail {

struct GoldenStep {
  std::array<const char*, 3> factors;  // printed cells for queues 2..4
  int selected;
};

// The reference walkthrough: budgets {2,4,8}, every queue kept busy, all
// elapsed counters starting at 8. Cells are the exact factors at each
// selection instant; brackets mark the winner, '-' a factor below 1.
inline const std::array<GoldenStep, 12>& golden_walkthrough() {
  static const std::array<GoldenStep, 12> steps = {{
      {{"[4]", "2", "1"}, 2},
      {{"-", "[9/4]", "9/8"}, 3},
      {{"1", "-", "[5/4]"}, 4},
      {{"[3/2]", "-", "-"}, 2},
      {{"-", "-", "-"}, 1},
      {{"[1]", "1", "-"}, 2},
      {{"-", "[5/4]", "-"}, 3},
      {{"[1]", "-", "-"}, 2},
      {{"-", "-", "-"}, 1},
      {{"[1]", "-", "-"}, 2},
      {{"-", "[1]", "1"}, 3},
      {{"1", "-", "[9/8]"}, 4},
  }};
  return steps;
}

}  // namespace detail

// Replays the documented 12-step selection walkthrough and checks every
// printed factor and every selection against the reference. Returns
// kExitViolation on any mismatch, which would mean the selection rule or the
// exact arithmetic regressed.
inline int cmd_table5(std::ostream& out = std::cout) {
  QueueConfig cfg;
  cfg.num_queues = 4;
  cfg.waiting_times = {2, 4, 8};
  cfg.slice = 1;
  QueueSystem qs(cfg);
  for (int q = 1; q <= 4; ++q) qs.enqueue(static_cast<TaskId>(q), q);
  qs.set_elapsed({8, 8, 8, 8});

  const auto& golden = detail::golden_walkthrough();
  std::array<std::vector<std::string>, 3> cells;
  std::vector<int> selections;
  bool ok = true;

  for (std::size_t step = 0; step < golden.size(); ++step) {
    const HungryFactors hf = qs.hungry_factors();
    const auto d = qs.pop_selected();
    const int sel = d ? d->queue : 0;
    if (d) qs.enqueue(d->task, d->queue);  // the task returns, the queue stays busy
    for (int q = 2; q <= 4; ++q) {
      const Rational& h = hf.of(q);
      std::string cell;
      if (h < Rational(1))
        cell = "-";
      else if (q == sel)
        cell = "[" + h.str() + "]";
      else
        cell = h.str();
      cells[static_cast<std::size_t>(q - 2)].push_back(cell);
      if (cell != golden[step].factors[static_cast<std::size_t>(q - 2)]) ok = false;
    }
    selections.push_back(sel);
    if (sel != golden[step].selected) ok = false;
    qs.advance(1);
  }

  const auto row = [&out](const std::string& head, const std::vector<std::string>& vals) {
    out << std::left << std::setw(8) << head;
    for (const auto& v : vals) out << std::right << std::setw(6) << v;
    out << "\n";
  };
  std::vector<std::string> times, results;
  for (std::size_t i = 1; i <= golden.size(); ++i) times.push_back(std::to_string(i));
  for (int s : selections) results.push_back(std::to_string(s));
  row("time", times);
  row("h2", cells[0]);
  row("h3", cells[1]);
  row("h4", cells[2]);
  row("result", results);
  out << (ok ? "walkthrough reproduced\n" : "walkthrough MISMATCH\n");
  return ok ? kExitOk : kExitViolation;
}

// Runs the adversarial starvation grid and checks each measured finish-time
// ratio against its analytical bound, plus the expected ordering of the
// three widening-budget settings.
inline int cmd_worstcase(const std::string& out_dir, std::ostream& out = std::cout) {
  detail::ensure_out_dir(out_dir);
  const auto results = worst_case_suite();

  bool ok = true;
  nlohmann::json rows = nlohmann::json::array();
  out << std::left << std::setw(6) << "name" << std::right << std::setw(10) << "queues"
      << std::setw(14) << "slice" << std::setw(14) << "budgeted" << std::setw(14) << "rr"
      << std::setw(10) << "ratio" << std::setw(12) << "bound" << std::setw(8) << "ok"
      << "\n";
  for (const auto& r : results) {
    if (!r.within_bound) ok = false;
    out << std::left << std::setw(6) << r.name << std::right << std::setw(10) << r.num_queues
        << std::setw(14) << r.slice << std::setw(14) << r.budgeted_last_finish << std::setw(14)
        << r.rr_last_finish << std::setw(10) << std::fixed << std::setprecision(2) << r.ratio
        << std::setw(12) << r.bound.str() << std::setw(8) << (r.within_bound ? "yes" : "NO")
        << "\n";
    nlohmann::json row;
    row["name"] = r.name;
    row["num_queues"] = r.num_queues;
    row["waiting_times"] = r.waiting_times;
    row["slice"] = r.slice;
    row["measured_tasks"] = r.measured_tasks;
    row["budgeted_last_finish"] = r.budgeted_last_finish;
    row["rr_last_finish"] = r.rr_last_finish;
    row["ratio"] = r.ratio;
    row["bound"] = r.bound.str();
    row["within_bound"] = r.within_bound;
    rows.push_back(row);
  }

  // The last three settings share task layout and differ only in how wide
  // the budget spread is; the ratio must not shrink as the spread grows.
  double prev = -1;
  for (const auto& r : results) {
    if (r.name == "E4" || r.name == "E5" || r.name == "E6") {
      if (r.ratio < prev) {
        ok = false;
        out << "ordering violation at " << r.name << "\n";
      }
      prev = r.ratio;
    }
  }

  nlohmann::json j;
  j["results"] = rows;
  j["all_within_bound"] = ok;
  write_json_file(out_dir + "/worstcase.json", j);
  return ok ? kExitOk : kExitViolation;
}

}  // namespace aegis
