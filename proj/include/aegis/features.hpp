#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "aegis/types.hpp"

namespace aegis {

inline constexpr int kFeatureCount = 11;
inline constexpr double kDefaultEmaAlpha = 1.0 / 8.0;

// Per-task state the placement policy sees. Field order here is the network
// input contract: scheduling behavior first, then the provenance counters.
struct TaskContext {
  double runtime = 0;       // total ticks this task has been scheduled
  double nvcsw = 0;         // voluntary context switches per cycle (EMA)
  double wait_freq = 0;     // wait events per cycle (EMA)
  double wake_freq = 0;     // wakeup events per cycle (EMA)
  double nr_stop = 0;       // stop signals observed in the last cycle
  double nr_idle = 0;       // idle slices seen before the last dispatch
  double prio = 1;          // queue index the task last ran from
  double nr_event = 0;      // events produced per cycle (EMA)
  double nr_drop = 0;       // events dropped per cycle (EMA)
  double latency = 0;       // buffer backlog ahead of this task's events (EMA)
  double availability = 1;  // free fraction of the event buffer, instantaneous

  std::array<double, kFeatureCount> to_vector() const {
    return {runtime, nvcsw,    wait_freq, wake_freq, nr_stop, nr_idle,
            prio,    nr_event, nr_drop,   latency,   availability};
  }
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "runtime", "nvcsw",    "wait_freq", "wake_freq", "nr_stop", "nr_idle",
    "prio",    "nr_event", "nr_drop",   "latency",   "availability"};

// What the engine observed about one task over one dispatch cycle.
struct CycleObservations {
  Tick ticks_run = 0;
  int voluntary_switches = 0;
  int waits = 0;
  int wakes = 0;
  int stops = 0;
  std::int64_t idle_before = 0;       // idle slices between its last two dispatches
  int queue = 1;                      // queue the cycle ran from
  std::int64_t events_produced = 0;   // offered to the buffer, drops included
  std::int64_t events_dropped = 0;
  double latency_mean = 0;            // mean backlog ahead of this cycle's events
  bool has_latency_sample = false;
  double buffer_free_fraction = 1.0;  // at cycle end
};

// Folds one cycle's observations into the context. Rate-like fields use an
// exponential moving average that starts from zero, so a freshly observed
// task ramps toward its steady rate over ~1/alpha cycles; snapshot-like
// fields are overwritten. Keeping the zero start matters: the change
// detector below compares consecutive EMA values and must still see a
// geometric ramp (not an instant lock-on) for workloads whose rate grows
// every cycle.
inline TaskContext update_context(TaskContext ctx, const CycleObservations& obs,
                                  double alpha = kDefaultEmaAlpha) {
  if (!(alpha > 0.0) || !(alpha <= 1.0))
    throw std::invalid_argument("update_context: alpha must be in (0, 1]");
  const auto ema = [alpha](double prev, double sample) {
    return (1.0 - alpha) * prev + alpha * sample;
  };
  ctx.runtime += static_cast<double>(obs.ticks_run);
  ctx.nvcsw = ema(ctx.nvcsw, obs.voluntary_switches);
  ctx.wait_freq = ema(ctx.wait_freq, obs.waits);
  ctx.wake_freq = ema(ctx.wake_freq, obs.wakes);
  ctx.nr_stop = static_cast<double>(obs.stops);
  ctx.nr_idle = static_cast<double>(obs.idle_before);
  ctx.prio = static_cast<double>(obs.queue);
  ctx.nr_event = ema(ctx.nr_event, static_cast<double>(obs.events_produced));
  ctx.nr_drop = ema(ctx.nr_drop, static_cast<double>(obs.events_dropped));
  ctx.latency = ema(ctx.latency, obs.has_latency_sample ? obs.latency_mean : 0.0);
  ctx.availability = obs.buffer_free_fraction;
  return ctx;
}

enum class NormMode { uniform, log2 };

// How each feature maps into the network's [0, 128] input range. Long-tailed
// counters go through log2 so an order-of-magnitude spike still lands inside
// the range instead of saturating it.
struct NormalizationSpec {
  std::array<NormMode, kFeatureCount> modes{};
  std::array<double, kFeatureCount> caps{};  // raw value that maps to 128

  void validate() const {
    for (int i = 0; i < kFeatureCount; ++i)
      if (!(caps[i] > 0) || !std::isfinite(caps[i]))
        throw std::invalid_argument(std::string("invalid-config: normalization cap for ") +
                                    kFeatureNames[i] + " must be positive and finite");
  }

  static NormalizationSpec defaults() {
    NormalizationSpec spec;
    spec.modes = {NormMode::uniform, NormMode::log2,    NormMode::uniform, NormMode::uniform,
                  NormMode::uniform, NormMode::uniform, NormMode::uniform, NormMode::log2,
                  NormMode::log2,    NormMode::log2,    NormMode::uniform};
    spec.caps = {100000, 8, 4, 4, 4, 64, 4, 64, 64, 256, 1};
    return spec;
  }
};

// Maps a context onto [0, 128]^11. Uniform: clamp(x * 128 / cap). Log:
// clamp(log2(1 + x) * 128 / log2(1 + cap)), which keeps 0 -> 0 and cap -> 128.
inline std::array<double, kFeatureCount> normalize(const TaskContext& ctx,
                                                   const NormalizationSpec& spec) {
  spec.validate();
  const std::array<double, kFeatureCount> raw = ctx.to_vector();
  std::array<double, kFeatureCount> out{};
  for (int i = 0; i < kFeatureCount; ++i) {
    const double x = raw[i] < 0 ? 0.0 : raw[i];
    double v;
    if (spec.modes[i] == NormMode::uniform) {
      v = x * 128.0 / spec.caps[i];
    } else {
      v = std::log2(1.0 + x) * 128.0 / std::log2(1.0 + spec.caps[i]);
    }
    out[i] = std::min(128.0, std::max(0.0, v));
  }
  return out;
}

enum class GateDecision { infer, skip };

// Inference gate: a task whose voluntary-switch rate and event rate both
// moved by less than `delta` (relative) since the previous cycle keeps its
// queue; otherwise the network is consulted. A counter that appears or
// disappears entirely (zero on exactly one side) always counts as changed,
// and with no previous context there is nothing to compare, so infer.
inline GateDecision delta_gate(const TaskContext* prev, const TaskContext& cur, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("delta_gate: delta must be positive and finite");
  if (prev == nullptr) return GateDecision::infer;
  const double fields[2][2] = {{prev->nvcsw, cur.nvcsw}, {prev->nr_event, cur.nr_event}};
  for (const auto& f : fields) {
    const double p = f[0];
    const double c = f[1];
    if (p == 0.0 && c == 0.0) continue;  // never observed on either side
    if (p == 0.0 || c == 0.0) return GateDecision::infer;
    if (std::abs(1.0 - p / c) >= delta) return GateDecision::infer;
  }
  return GateDecision::skip;
}

}  // namespace aegis
