#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aegis/harness.hpp"
#include "aegis/log.hpp"

namespace {

int dispatch(const std::string& mode, const std::string& config_path,
             const std::string& weights, const std::string& out_dir,
             const aegis::CliOverrides& overrides) {
  if (mode == "table5") return aegis::cmd_table5();
  if (mode == "worstcase") return aegis::cmd_worstcase(out_dir);
  if (config_path.empty())
    throw std::invalid_argument("invalid-config: --config is required for mode " + mode);
  aegis::ExperimentConfig cfg = aegis::load_config(config_path);
  if (mode == "train") return aegis::cmd_train(std::move(cfg), overrides, out_dir);
  if (mode == "eval") return aegis::cmd_eval(std::move(cfg), overrides, weights, out_dir);
  throw std::invalid_argument("unknown mode: " + mode);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic scheduling simulator with learned queue placement"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute one experiment");
  std::string mode;
  std::string config_path;
  std::string weights;
  std::string out_dir = "out";
  std::string scheduler;
  std::uint64_t seed = 0;
  bool has_seed = false;
  aegis::CliOverrides overrides;

  run->add_option("--mode", mode, "train | eval | worstcase | table5")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "worstcase", "table5"}));
  run->add_option("--config", config_path, "experiment config (JSON)");
  run->add_option("--weights", weights, "weight file for eval");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--scheduler", scheduler, "override the configured scheduler")
      ->check(CLI::IsMember({"aegis", "fifo", "rr", "mlfq", "vdeadline"}));
  run->add_option("--seed", seed, "override the configured seed")
      ->each([&has_seed](const std::string&) { has_seed = true; });
  run->add_flag("--no-delta-gate", overrides.disable_gate, "force inference on every decision");
  run->add_flag("--sync-train", overrides.sync_train,
                "train inside the simulation loop (deterministic)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!scheduler.empty()) overrides.scheduler = aegis::scheduler_from_string(scheduler);
    if (has_seed) overrides.seed = seed;
    return dispatch(mode, config_path, weights, out_dir, overrides);
  } catch (const std::invalid_argument& e) {
    aegis::log_error(e.what());
    return aegis::kExitInvalid;
  } catch (const std::out_of_range& e) {
    aegis::log_error(e.what());
    return aegis::kExitInvalid;
  } catch (const std::domain_error& e) {
    aegis::log_error(e.what());
    return aegis::kExitInvalid;
  } catch (const std::runtime_error& e) {
    aegis::log_error(e.what());
    return aegis::kExitInvalid;
  } catch (const std::exception& e) {
    aegis::log_error(std::string("internal error: ") + e.what());
    return aegis::kExitViolation;
  }
}
