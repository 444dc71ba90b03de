#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aegis/features.hpp"
#include "aegis/random.hpp"

namespace aegis {

// Two-layer fully connected value network: 11 inputs, 256 ReLU hidden units,
// one Q-value per queue. Small enough that plain scalar math trains it in
// seconds, so no tensor library is pulled in.
struct QNetwork {
  static constexpr int kInput = kFeatureCount;
  static constexpr int kHidden = 256;
  static constexpr int kOutput = 4;

  std::vector<double> w1;  // [kInput][kHidden], row-major
  std::vector<double> b1;  // [kHidden]
  std::vector<double> w2;  // [kHidden][kOutput], row-major
  std::vector<double> b2;  // [kOutput]

  static QNetwork zeros() {
    QNetwork n;
    n.w1.assign(kInput * kHidden, 0.0);
    n.b1.assign(kHidden, 0.0);
    n.w2.assign(kHidden * kOutput, 0.0);
    n.b2.assign(kOutput, 0.0);
    return n;
  }

  // Xavier-uniform weights, zero biases. Uses the pinned uniform helper so a
  // seed reproduces identical weights on any platform.
  static QNetwork random_init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    QNetwork n = zeros();
    const auto fill = [&rng](std::vector<double>& w, int fan_in, int fan_out) {
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : w) v = (2.0 * uniform_unit(rng) - 1.0) * a;
    };
    fill(n.w1, kInput, kHidden);
    fill(n.w2, kHidden, kOutput);
    return n;
  }

  void check_shapes() const {
    if (w1.size() != static_cast<std::size_t>(kInput * kHidden) ||
        b1.size() != static_cast<std::size_t>(kHidden) ||
        w2.size() != static_cast<std::size_t>(kHidden * kOutput) ||
        b2.size() != static_cast<std::size_t>(kOutput))
      throw std::invalid_argument("QNetwork: weight array shapes do not match 11x256x4");
  }
};

using StateVector = std::array<double, QNetwork::kInput>;
using QValues = std::array<double, QNetwork::kOutput>;

namespace detail {

// Forward pass that also exposes the post-ReLU hidden layer for backprop.
inline QValues forward_hidden(const QNetwork& net, const StateVector& state,
                              std::array<double, QNetwork::kHidden>& hidden) {
  for (int j = 0; j < QNetwork::kHidden; ++j) hidden[j] = net.b1[j];
  for (int i = 0; i < QNetwork::kInput; ++i) {
    const double x = state[i];
    if (x != 0.0) {
      const double* row = &net.w1[static_cast<std::size_t>(i) * QNetwork::kHidden];
      for (int j = 0; j < QNetwork::kHidden; ++j) hidden[j] += row[j] * x;
    }
  }
  for (int j = 0; j < QNetwork::kHidden; ++j)
    if (hidden[j] < 0.0) hidden[j] = 0.0;
  QValues q;
  for (int k = 0; k < QNetwork::kOutput; ++k) q[k] = net.b2[k];
  for (int j = 0; j < QNetwork::kHidden; ++j) {
    const double h = hidden[j];
    if (h != 0.0) {
      const double* row = &net.w2[static_cast<std::size_t>(j) * QNetwork::kOutput];
      for (int k = 0; k < QNetwork::kOutput; ++k) q[k] += row[k] * h;
    }
  }
  return q;
}

}  // namespace detail

inline QValues forward(const QNetwork& net, const StateVector& state) {
  net.check_shapes();
  for (double v : state)
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input state");
  std::array<double, QNetwork::kHidden> hidden;
  return detail::forward_hidden(net, state, hidden);
}

inline int argmax_action(const QValues& q) {
  int best = 0;
  for (int k = 1; k < QNetwork::kOutput; ++k)
    if (q[k] > q[best]) best = k;  // strict: ties keep the smallest index
  return best + 1;                 // queues are 1-based
}

// Epsilon-greedy placement. With epsilon == 0 this consults the RNG not at
// all, so frozen-inference runs stay bit-stable no matter what other
// components share the stream.
inline int select_action(const QNetwork& net, const StateVector& state, double epsilon,
                         std::mt19937_64& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("select_action: epsilon outside [0, 1]");
  if (epsilon > 0.0 && uniform_unit(rng) < epsilon)
    return 1 + static_cast<int>(uniform_index(rng, QNetwork::kOutput));
  return argmax_action(forward(net, state));
}

// Provenance reward: the negated fraction of this cycle's events that were
// dropped, in [-1, 0]. No events means nothing could be lost.
inline double reward_provenance(std::int64_t events, std::int64_t dropped) {
  if (events < 0 || dropped < 0 || dropped > events)
    throw std::invalid_argument("reward_provenance: need 0 <= dropped <= events");
  if (events == 0) return 0.0;
  return -static_cast<double>(dropped) / static_cast<double>(events);
}

// Utilization reward: idle slices before the acted-on cycle relative to the
// idle slices around it, in [0, 1). Shrinking next-cycle idleness pays.
inline double reward_utilization(std::int64_t idle_before, std::int64_t idle_after) {
  if (idle_before < 0 || idle_after < 0)
    throw std::invalid_argument("reward_utilization: negative idle count");
  return static_cast<double>(idle_before) /
         static_cast<double>(idle_before + idle_after + 1);
}

struct Transition {
  StateVector state{};
  int action = 1;  // queue index 1..4
  double reward = 0;
  StateVector next_state{};
};

// Fixed-capacity FIFO store of recent transitions; once full, the oldest
// entry is overwritten.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayMemory: capacity must be > 0");
    data_.reserve(capacity);
  }

  void push(const Transition& t) {
    if (t.action < 1 || t.action > QNetwork::kOutput)
      throw std::invalid_argument("ReplayMemory::push: action outside 1..4");
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[head_] = t;
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_.at(i); }

  // Uniform sample with replacement.
  std::vector<std::size_t> sample(std::size_t n, std::mt19937_64& rng) const {
    if (data_.empty()) throw std::logic_error("ReplayMemory::sample: empty memory");
    std::vector<std::size_t> idx(n);
    for (auto& v : idx) v = uniform_index(rng, data_.size());
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

struct Hyperparams {
  double gamma = 0.9;
  double tau = 0.005;          // soft target update rate
  double learning_rate = 1e-4;
  int batch_size = 128;
  std::size_t replay_capacity = 10000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double anneal_fraction = 0.25;  // share of the cycle budget spent annealing

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("invalid-config: gamma must be in [0, 1)");
    if (!(tau > 0.0 && tau <= 1.0))
      throw std::invalid_argument("invalid-config: tau must be in (0, 1]");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("invalid-config: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("invalid-config: batch_size must be >= 1");
    if (replay_capacity == 0)
      throw std::invalid_argument("invalid-config: replay_capacity must be > 0");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
        !(epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
      throw std::invalid_argument("invalid-config: need 0 <= epsilon_end <= epsilon_start <= 1");
    if (!(anneal_fraction > 0.0 && anneal_fraction <= 1.0))
      throw std::invalid_argument("invalid-config: anneal_fraction must be in (0, 1]");
  }
};

struct Gradients {
  std::vector<double> w1, b1, w2, b2;

  static Gradients zeros() {
    Gradients g;
    g.w1.assign(QNetwork::kInput * QNetwork::kHidden, 0.0);
    g.b1.assign(QNetwork::kHidden, 0.0);
    g.w2.assign(QNetwork::kHidden * QNetwork::kOutput, 0.0);
    g.b2.assign(QNetwork::kOutput, 0.0);
    return g;
  }
};

namespace detail {

inline double huber(double e) {
  const double a = std::abs(e);
  return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

inline double huber_grad(double e) { return e > 1.0 ? 1.0 : (e < -1.0 ? -1.0 : e); }

inline double td_target(const QNetwork& target, const Transition& t, double gamma) {
  std::array<double, QNetwork::kHidden> hidden;
  const QValues qn = forward_hidden(target, t.next_state, hidden);
  double best = qn[0];
  for (int k = 1; k < QNetwork::kOutput; ++k) best = std::max(best, qn[k]);
  return t.reward + gamma * best;
}

}  // namespace detail

// Mean Huber loss of the online net's Q(s, a) against bootstrap targets
// r + gamma * max_a' Q_target(s', a'). Pure function of its arguments, which
// is exactly what the finite-difference gradient check needs.
inline double batch_loss(const QNetwork& online, const QNetwork& target,
                         const std::vector<Transition>& batch, double gamma) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  std::array<double, QNetwork::kHidden> hidden;
  double total = 0;
  for (const Transition& t : batch) {
    const QValues q = detail::forward_hidden(online, t.state, hidden);
    const double e = q[t.action - 1] - detail::td_target(target, t, gamma);
    total += detail::huber(e);
  }
  return total / static_cast<double>(batch.size());
}

// Analytic gradient of batch_loss with respect to the online parameters.
// Returns the loss computed on the way through.
inline double batch_gradients(const QNetwork& online, const QNetwork& target,
                              const std::vector<Transition>& batch, double gamma,
                              Gradients& out) {
  if (batch.empty()) throw std::invalid_argument("batch_gradients: empty batch");
  out = Gradients::zeros();
  std::array<double, QNetwork::kHidden> hidden;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0;
  for (const Transition& t : batch) {
    const QValues q = detail::forward_hidden(online, t.state, hidden);
    const int a = t.action - 1;
    const double e = q[a] - detail::td_target(target, t, gamma);
    total += detail::huber(e);
    const double d = detail::huber_grad(e) * inv_b;  // dLoss/dQ(s,a)

    out.b2[a] += d;
    for (int j = 0; j < QNetwork::kHidden; ++j) {
      const double h = hidden[j];
      if (h <= 0.0) continue;  // dead ReLU unit: no gradient flows through
      const std::size_t w2i = static_cast<std::size_t>(j) * QNetwork::kOutput + a;
      out.w2[w2i] += d * h;
      const double dh = d * online.w2[w2i];
      out.b1[j] += dh;
      for (int i = 0; i < QNetwork::kInput; ++i)
        out.w1[static_cast<std::size_t>(i) * QNetwork::kHidden + j] += dh * t.state[i];
    }
  }
  return total * inv_b;
}

inline void sgd_apply(QNetwork& net, const Gradients& g, double lr) {
  for (std::size_t i = 0; i < net.w1.size(); ++i) net.w1[i] -= lr * g.w1[i];
  for (std::size_t i = 0; i < net.b1.size(); ++i) net.b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < net.w2.size(); ++i) net.w2[i] -= lr * g.w2[i];
  for (std::size_t i = 0; i < net.b2.size(); ++i) net.b2[i] -= lr * g.b2[i];
}

// target <- tau * online + (1 - tau) * target
inline void soft_update(QNetwork& target, const QNetwork& online, double tau) {
  const auto blend = [tau](std::vector<double>& t, const std::vector<double>& o) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau * o[i] + (1.0 - tau) * t[i];
  };
  blend(target.w1, online.w1);
  blend(target.b1, online.b1);
  blend(target.w2, online.w2);
  blend(target.b2, online.b2);
}

// One optimization step: sample a batch, descend the Huber TD loss with
// plain SGD, then nudge the target net. Returns the batch loss.
inline double train_step(QNetwork& online, QNetwork& target, const ReplayMemory& memory,
                         const Hyperparams& hp, std::mt19937_64& rng) {
  hp.validate();
  if (memory.size() < static_cast<std::size_t>(hp.batch_size))
    throw std::logic_error("train_step: replay memory smaller than one batch");
  const std::vector<std::size_t> idx = memory.sample(static_cast<std::size_t>(hp.batch_size), rng);
  std::vector<Transition> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(memory.at(i));
  Gradients g = Gradients::zeros();
  const double loss = batch_gradients(online, target, batch, hp.gamma, g);
  sgd_apply(online, g, hp.learning_rate);
  soft_update(target, online, hp.tau);
  return loss;
}

// Linear anneal from epsilon_start to epsilon_end over the first
// anneal_fraction of the cycle budget, flat afterwards.
inline double epsilon_at(const Hyperparams& hp, std::int64_t cycle, std::int64_t cycle_budget) {
  if (cycle_budget <= 0) return hp.epsilon_end;
  const double horizon = hp.anneal_fraction * static_cast<double>(cycle_budget);
  if (horizon <= 0) return hp.epsilon_end;
  const double f = static_cast<double>(cycle) / horizon;
  if (f >= 1.0) return hp.epsilon_end;
  return hp.epsilon_start + f * (hp.epsilon_end - hp.epsilon_start);
}

}  // namespace aegis
