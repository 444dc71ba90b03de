#include <gtest/gtest.h>

#include "aegis/config.hpp"

using namespace aegis;
using nlohmann::json;

namespace {

json minimal() {
  return json{{"scenario",
               {{"duration", 100},
                {"tasks", json::array({{{"name", "a"}}})}}}};
}

void expect_invalid(const json& j, const std::string& needle) {
  try {
    config_from_json(j);
    FAIL() << "expected invalid_argument for " << j.dump();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("invalid-config"), std::string::npos) << what;
    EXPECT_NE(what.find(needle), std::string::npos) << what;
  }
}

}  // namespace

TEST(Config, MinimalDocumentFillsInDefaults) {
  const ExperimentConfig cfg = config_from_json(minimal());
  EXPECT_EQ(cfg.scenario.duration, 100);
  EXPECT_EQ(cfg.scenario.cores, 1);
  EXPECT_EQ(cfg.scenario.seed, 1u);
  EXPECT_EQ(cfg.scenario.scheduler, SchedulerKind::aegis);
  ASSERT_EQ(cfg.scenario.tasks.size(), 1u);
  EXPECT_EQ(cfg.scenario.tasks[0].name, "a");
  EXPECT_EQ(cfg.scenario.tasks[0].cpu_demand, -1);
  EXPECT_EQ(cfg.queues.num_queues, 4);
  EXPECT_EQ(cfg.queues.waiting_times, (std::vector<Tick>{3646, 96961, 2578346}));
  EXPECT_TRUE(cfg.gate_enabled);
  EXPECT_DOUBLE_EQ(cfg.delta, 0.25);
  EXPECT_FALSE(cfg.norm.has_value());
  EXPECT_EQ(cfg.training.cycle_budget, 100000);
}

TEST(Config, FullDocumentIsHonored) {
  json j = minimal();
  j["scenario"]["name"] = "stress";
  j["scenario"]["cores"] = 2;
  j["scenario"]["seed"] = 99;
  j["scenario"]["scheduler"] = "mlfq";
  j["scenario"]["buffer"] = {{"capacity", 512}, {"drain_per_tick", 24}};
  j["scenario"]["mlfq"] = {{"levels", 5}, {"boost_period", 77}};
  j["scenario"]["tasks"] = json::array({
      {{"name", "prod"},
       {"initial_queue", 2},
       {"producer", {{"kind", "bursty"}, {"rate", 20}, {"period", 10}, {"duty", 3}}},
       {"behavior", {{"yield_prob", 0.5}, {"wait_prob", 0.25}}}},
      {{"name", "sink"}, {"consumer", true}},
  });
  j["queues"] = {{"count", 3}, {"slice", 2}, {"waiting_times", {4, 9}}};
  j["delta_gate"] = {{"enabled", false}, {"delta", 0.5}};
  j["normalization"] = {{"caps", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}}};
  j["training"] = {{"cycle_budget", 5000},
                   {"train_every", 2},
                   {"hyperparams", {{"gamma", 0.95}, {"batch_size", 32}}}};

  const ExperimentConfig cfg = config_from_json(j);
  EXPECT_EQ(cfg.scenario.name, "stress");
  EXPECT_EQ(cfg.scenario.cores, 2);
  EXPECT_EQ(cfg.scenario.scheduler, SchedulerKind::mlfq);
  EXPECT_EQ(cfg.scenario.buffer.capacity, 512);
  EXPECT_EQ(cfg.scenario.buffer.drain_per_tick, 24);
  EXPECT_EQ(cfg.scenario.mlfq.levels, 5);
  EXPECT_EQ(cfg.scenario.mlfq.boost_period, 77);
  ASSERT_EQ(cfg.scenario.tasks.size(), 2u);
  EXPECT_EQ(cfg.scenario.tasks[0].producer.kind, ProducerProfile::Kind::bursty);
  EXPECT_EQ(cfg.scenario.tasks[0].producer.duty, 3);
  EXPECT_DOUBLE_EQ(cfg.scenario.tasks[0].behavior.wait_prob, 0.25);
  EXPECT_TRUE(cfg.scenario.tasks[1].is_consumer);
  EXPECT_EQ(cfg.queues.num_queues, 3);
  EXPECT_EQ(cfg.queues.waiting_times, (std::vector<Tick>{4, 9}));
  EXPECT_FALSE(cfg.gate_enabled);
  EXPECT_DOUBLE_EQ(cfg.delta, 0.5);
  ASSERT_TRUE(cfg.norm.has_value());
  EXPECT_DOUBLE_EQ(cfg.norm->caps[10], 11.0);
  EXPECT_EQ(cfg.training.cycle_budget, 5000);
  EXPECT_EQ(cfg.training.train_every, 2);
  EXPECT_DOUBLE_EQ(cfg.training.hp.gamma, 0.95);
  EXPECT_EQ(cfg.training.hp.batch_size, 32);
}

TEST(Config, SuperProducerGeneratorExpands) {
  json j = minimal();
  j["scenario"]["tasks"] = json::array({
      {{"generator", "super_producer"}, {"intensity", 3}, {"scan_rate", 40}},
  });
  const ExperimentConfig cfg = config_from_json(j);
  EXPECT_EQ(cfg.scenario.tasks.size(), 5u);  // 3 producers + 2 background
}

TEST(Config, PeriodicSuperProducerGeneratorStaggersArrivals) {
  json j = minimal();
  j["scenario"]["tasks"] = json::array({
      {{"generator", "periodic_super_producer"},
       {"intensity", 2},
       {"scan_rate", 10},
       {"count", 3},
       {"period", 50},
       {"start", 5},
       {"burst_demand", 20}},
  });
  const ExperimentConfig cfg = config_from_json(j);
  ASSERT_EQ(cfg.scenario.tasks.size(), 12u);  // 3 groups of (2 producers + 2 background)
  std::map<Tick, int> by_arrival;
  for (const auto& t : cfg.scenario.tasks) {
    ++by_arrival[t.arrival];
    EXPECT_EQ(t.cpu_demand, 20);
  }
  EXPECT_EQ(by_arrival[5], 4);
  EXPECT_EQ(by_arrival[55], 4);
  EXPECT_EQ(by_arrival[105], 4);
}

TEST(Config, ErrorsNameTheFieldAndItsPath) {
  expect_invalid(json::array(), "root");

  json j = json{{"scenario", {{"tasks", json::array({{{"name", "a"}}})}}}};
  expect_invalid(j, "scenario.duration");

  j = minimal();
  j["scenario"]["duration"] = "soon";
  expect_invalid(j, "scenario.duration");

  j = minimal();
  j["scenario"]["tasks"] = json::array({{{"arrival", 3}}});
  expect_invalid(j, "tasks[0].name");

  j = minimal();
  j["scenario"]["tasks"][0]["producer"] = {{"kind", "quadratic"}};
  expect_invalid(j, "producer.kind");

  j = minimal();
  j["scenario"]["tasks"] = json::array({{{"generator", "fork_bomb"}}});
  expect_invalid(j, "generator");

  j = minimal();
  j["normalization"] = {{"caps", {1, 2, 3}}};
  expect_invalid(j, "normalization.caps");

  j = minimal();
  j["queues"] = {{"count", 3}, {"waiting_times", {9, 4}}};  // not increasing
  expect_invalid(j, "waiting_times");

  j = minimal();
  j["scenario"]["tasks"][0]["initial_queue"] = 40;
  expect_invalid(j, "initial_queue");
}

TEST(Config, LoadConfigReportsMissingAndBrokenFiles) {
  EXPECT_THROW(load_config("/nonexistent/missing.json"), std::invalid_argument);
  const std::string path = std::string(::testing::TempDir()) + "broken_config.json";
  std::ofstream(path) << "[1, 2";
  try {
    load_config(path);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("invalid-config"), std::string::npos);
  }
  std::remove(path.c_str());
}
