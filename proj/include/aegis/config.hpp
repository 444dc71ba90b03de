#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "aegis/dqn.hpp"
#include "aegis/features.hpp"
#include "aegis/queueing.hpp"
#include "aegis/sim.hpp"
#include "aegis/workloads.hpp"

namespace aegis {

struct TrainingConfig {
  Hyperparams hp;
  std::int64_t cycle_budget = 100000;
  std::int64_t train_every = 4;      // dispatch cycles between optimization steps
  int convergence_window = 500;      // trailing cycles whose loss reward must be zero
  Tick calibration_ticks = 4000;     // prefix length used to derive normalization caps

  void validate() const {
    hp.validate();
    if (cycle_budget < 1) throw std::invalid_argument("invalid-config: training.cycle_budget must be >= 1");
    if (train_every < 1) throw std::invalid_argument("invalid-config: training.train_every must be >= 1");
    if (convergence_window < 1)
      throw std::invalid_argument("invalid-config: training.convergence_window must be >= 1");
    if (calibration_ticks < 1)
      throw std::invalid_argument("invalid-config: training.calibration_ticks must be >= 1");
  }
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  QueueConfig queues;
  bool gate_enabled = true;
  double delta = 0.25;
  std::optional<NormalizationSpec> norm;  // absent: calibrate (train) / read from weights (eval)
  TrainingConfig training;

  ExperimentConfig() : queues(QueueConfig::exponential(500000, 4, 1)) {}

  void validate() const {
    queues.validate();
    scenario.validate(queues.num_queues);
    if (!(delta > 0) || !std::isfinite(delta))
      throw std::invalid_argument("invalid-config: delta_gate.delta must be positive");
    if (norm) norm->validate();
    training.validate();
  }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("invalid-config: " + path + ": " + what);
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(path + "." + key, "wrong type");
  }
}

template <typename T>
T require_field(const nlohmann::json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) config_error(path + "." + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(path + "." + key, "wrong type");
  }
}

inline ProducerProfile producer_from_json(const nlohmann::json& j, const std::string& path) {
  ProducerProfile p;
  const std::string kind = get_field<std::string>(j, path, "kind", "constant");
  if (kind == "none")
    p.kind = ProducerProfile::Kind::none;
  else if (kind == "constant")
    p.kind = ProducerProfile::Kind::constant;
  else if (kind == "bursty")
    p.kind = ProducerProfile::Kind::bursty;
  else if (kind == "doubling")
    p.kind = ProducerProfile::Kind::doubling;
  else
    config_error(path + ".kind", "unknown producer kind '" + kind + "'");
  p.rate = get_field<std::int64_t>(j, path, "rate", 0);
  p.period = get_field<std::int64_t>(j, path, "period", 0);
  p.duty = get_field<std::int64_t>(j, path, "duty", 0);
  p.double_every = get_field<std::int64_t>(j, path, "double_every", 1);
  return p;
}

inline BehaviorSpec behavior_from_json(const nlohmann::json& j, const std::string& path) {
  BehaviorSpec b;
  b.yield_prob = get_field<double>(j, path, "yield_prob", 0.0);
  b.stop_prob = get_field<double>(j, path, "stop_prob", 0.0);
  b.wait_prob = get_field<double>(j, path, "wait_prob", 0.0);
  b.wake_prob = get_field<double>(j, path, "wake_prob", 0.0);
  return b;
}

inline SimTask task_from_json(const nlohmann::json& j, const std::string& path) {
  SimTask t;
  t.name = require_field<std::string>(j, path, "name");
  t.arrival = get_field<Tick>(j, path, "arrival", 0);
  t.cpu_demand = get_field<std::int64_t>(j, path, "cpu_demand", -1);
  t.weight = get_field<double>(j, path, "weight", 1.0);
  t.is_consumer = get_field<bool>(j, path, "consumer", false);
  t.initial_queue = get_field<int>(j, path, "initial_queue", 1);
  if (j.contains("producer")) t.producer = producer_from_json(j.at("producer"), path + ".producer");
  if (j.contains("behavior")) t.behavior = behavior_from_json(j.at("behavior"), path + ".behavior");
  return t;
}

inline void expand_task_entry(const nlohmann::json& j, const std::string& path,
                              std::vector<SimTask>& out) {
  if (!j.is_object()) config_error(path, "task entry must be an object");
  if (!j.contains("generator")) {
    out.push_back(task_from_json(j, path));
    return;
  }
  const std::string gen = j.at("generator").get<std::string>();
  if (gen == "super_producer") {
    const int intensity = require_field<int>(j, path, "intensity");
    const std::int64_t rate = require_field<std::int64_t>(j, path, "scan_rate");
    const Tick arrival = get_field<Tick>(j, path, "arrival", 0);
    const std::int64_t demand = get_field<std::int64_t>(j, path, "cpu_demand", -1);
    const std::string prefix = get_field<std::string>(j, path, "prefix", "super");
    for (auto& t : make_super_producer(intensity, rate, arrival, demand, prefix))
      out.push_back(std::move(t));
  } else if (gen == "periodic_super_producer") {
    const int intensity = require_field<int>(j, path, "intensity");
    const std::int64_t rate = require_field<std::int64_t>(j, path, "scan_rate");
    const std::int64_t count = require_field<std::int64_t>(j, path, "count");
    const Tick period = require_field<Tick>(j, path, "period");
    const Tick start = get_field<Tick>(j, path, "start", 0);
    const std::int64_t demand = require_field<std::int64_t>(j, path, "burst_demand");
    const std::string prefix = get_field<std::string>(j, path, "prefix", "stress");
    if (count < 1) config_error(path + ".count", "must be >= 1");
    for (std::int64_t k = 0; k < count; ++k) {
      for (auto& t : make_super_producer(intensity, rate, start + k * period, demand,
                                         prefix + "-" + std::to_string(k)))
        out.push_back(std::move(t));
    }
  } else {
    config_error(path + ".generator", "unknown generator '" + gen + "'");
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using detail::config_error;
  using detail::get_field;
  using detail::require_field;
  if (!root.is_object()) throw std::invalid_argument("invalid-config: root must be an object");

  ExperimentConfig cfg;

  if (!root.contains("scenario")) config_error("scenario", "missing");
  const auto& sj = root.at("scenario");
  ScenarioSpec& s = cfg.scenario;
  s.name = get_field<std::string>(sj, "scenario", "name", "scenario");
  s.cores = get_field<int>(sj, "scenario", "cores", 1);
  s.duration = require_field<Tick>(sj, "scenario", "duration");
  s.seed = get_field<std::uint64_t>(sj, "scenario", "seed", 1);
  s.scheduler = scheduler_from_string(get_field<std::string>(sj, "scenario", "scheduler", "aegis"));
  if (sj.contains("buffer")) {
    const auto& bj = sj.at("buffer");
    s.buffer.capacity = get_field<std::int64_t>(bj, "scenario.buffer", "capacity", 256);
    s.buffer.drain_per_tick = get_field<std::int64_t>(bj, "scenario.buffer", "drain_per_tick", 16);
  }
  if (sj.contains("mlfq")) {
    const auto& mj = sj.at("mlfq");
    s.mlfq.levels = get_field<int>(mj, "scenario.mlfq", "levels", 3);
    s.mlfq.boost_period = get_field<Tick>(mj, "scenario.mlfq", "boost_period", 200);
  }
  if (!sj.contains("tasks") || !sj.at("tasks").is_array())
    config_error("scenario.tasks", "missing or not an array");
  std::size_t i = 0;
  for (const auto& tj : sj.at("tasks"))
    detail::expand_task_entry(tj, "scenario.tasks[" + std::to_string(i++) + "]", s.tasks);

  if (root.contains("queues")) {
    const auto& qj = root.at("queues");
    QueueConfig q;
    q.num_queues = get_field<int>(qj, "queues", "count", 4);
    q.slice = get_field<Tick>(qj, "queues", "slice", 1);
    if (qj.contains("waiting_times")) {
      q.waiting_times = qj.at("waiting_times").get<std::vector<Tick>>();
    } else {
      const Tick tinf = get_field<Tick>(qj, "queues", "t_hat_inf", 500000);
      q.waiting_times = compute_waiting_times(tinf, q.num_queues);
    }
    cfg.queues = q;
  }

  if (root.contains("delta_gate")) {
    const auto& gj = root.at("delta_gate");
    cfg.gate_enabled = get_field<bool>(gj, "delta_gate", "enabled", true);
    cfg.delta = get_field<double>(gj, "delta_gate", "delta", 0.25);
  }

  if (root.contains("normalization")) {
    NormalizationSpec norm = NormalizationSpec::defaults();
    const auto& nj = root.at("normalization");
    if (nj.contains("caps")) {
      const auto caps = nj.at("caps").get<std::vector<double>>();
      if (caps.size() != kFeatureCount)
        config_error("normalization.caps", "needs 11 entries");
      for (int k = 0; k < kFeatureCount; ++k) norm.caps[k] = caps[static_cast<std::size_t>(k)];
    }
    if (nj.contains("modes")) {
      const auto modes = nj.at("modes").get<std::vector<std::string>>();
      if (modes.size() != kFeatureCount)
        config_error("normalization.modes", "needs 11 entries");
      for (int k = 0; k < kFeatureCount; ++k) {
        if (modes[static_cast<std::size_t>(k)] == "uniform")
          norm.modes[k] = NormMode::uniform;
        else if (modes[static_cast<std::size_t>(k)] == "log2")
          norm.modes[k] = NormMode::log2;
        else
          config_error("normalization.modes", "unknown mode '" + modes[k] + "'");
      }
    }
    cfg.norm = norm;
  }

  if (root.contains("training")) {
    const auto& tj = root.at("training");
    TrainingConfig& t = cfg.training;
    t.cycle_budget = get_field<std::int64_t>(tj, "training", "cycle_budget", t.cycle_budget);
    t.train_every = get_field<std::int64_t>(tj, "training", "train_every", t.train_every);
    t.convergence_window =
        get_field<int>(tj, "training", "convergence_window", t.convergence_window);
    t.calibration_ticks = get_field<Tick>(tj, "training", "calibration_ticks", t.calibration_ticks);
    if (tj.contains("hyperparams")) {
      const auto& hj = tj.at("hyperparams");
      Hyperparams& hp = t.hp;
      hp.gamma = get_field<double>(hj, "training.hyperparams", "gamma", hp.gamma);
      hp.tau = get_field<double>(hj, "training.hyperparams", "tau", hp.tau);
      hp.learning_rate =
          get_field<double>(hj, "training.hyperparams", "learning_rate", hp.learning_rate);
      hp.batch_size = get_field<int>(hj, "training.hyperparams", "batch_size", hp.batch_size);
      hp.replay_capacity = get_field<std::size_t>(hj, "training.hyperparams", "replay_capacity",
                                                  hp.replay_capacity);
      hp.epsilon_start =
          get_field<double>(hj, "training.hyperparams", "epsilon_start", hp.epsilon_start);
      hp.epsilon_end = get_field<double>(hj, "training.hyperparams", "epsilon_end", hp.epsilon_end);
      hp.anneal_fraction =
          get_field<double>(hj, "training.hyperparams", "anneal_fraction", hp.anneal_fraction);
    }
  }

  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("invalid-config: cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid-config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace aegis
