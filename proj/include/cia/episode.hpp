// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cia/rng.hpp"

namespace cia::rl {

// One recorded trajectory. Observations and states have length+1 entries
// (the final entry is the post-terminal observation used for bootstrapping).
struct Episode {
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t length = 0;

  std::vector<double> obs;        // (length+1) x n_agents x obs_dim
  std::vector<double> states;     // (length+1) x state_dim
  std::vector<int> actions;       // length x n_agents
  std::vector<double> rewards;    // length
  std::vector<int> turn_holder;   // length+1, -1 when the game has no turns
  bool terminated = false;        // ended by the game rather than truncated

  std::span<const double> obs_at(std::size_t t) const {
    return std::span<const double>(obs).subspan(t * n_agents * obs_dim, n_agents * obs_dim);
  }
  std::span<const double> state_at(std::size_t t) const {
    return std::span<const double>(states).subspan(t * state_dim, state_dim);
  }
  int action(std::size_t t, std::size_t k) const { return actions[t * n_agents + k]; }

  double total_reward() const;
  double discounted_return(double gamma) const;
};

// B episodes padded to a common horizon N.
struct EpisodeBatch {
  std::size_t batch = 0;
  std::size_t horizon = 0;
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;

  std::vector<double> obs;         // B x (N+1) x K x obs_dim
  std::vector<double> states;      // B x (N+1) x S
  std::vector<int> actions;        // B x N x K, padding = 0
  std::vector<double> rewards;     // B x N, padding = 0
  std::vector<double> mask;        // B x N, 1 on valid steps
  std::vector<double> terminated;  // B x N, 1 on a terminal transition

  // Throws if an episode is longer than `horizon` or schemas differ.
  static EpisodeBatch from_episodes(std::span<const Episode* const> episodes, std::size_t horizon);

  std::size_t steps() const { return batch * horizon; }
  std::span<const double> obs_at(std::size_t b, std::size_t t) const {
    return std::span<const double>(obs).subspan(((b * (horizon + 1)) + t) * n_agents * obs_dim,
                                                n_agents * obs_dim);
  }
  std::span<const double> state_at(std::size_t b, std::size_t t) const {
    return std::span<const double>(states).subspan((b * (horizon + 1) + t) * state_dim, state_dim);
  }
  int action(std::size_t b, std::size_t t, std::size_t k) const {
    return actions[(b * horizon + t) * n_agents + k];
  }
  double valid(std::size_t b, std::size_t t) const { return mask[b * horizon + t]; }
};

// FIFO ring buffer of whole episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Episode episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool can_sample(std::size_t n) const { return n > 0 && size() >= n; }
  // n distinct episodes, uniformly at random.
  std::vector<const Episode*> sample(std::size_t n, Rng& rng) const;
  // Oldest first.
  std::vector<const Episode*> contents() const;

  // Raw slot layout, for exact snapshots.
  const std::vector<Episode>& slots() const { return episodes_; }
  std::size_t head() const { return head_; }
  void restore(std::vector<Episode> slots, std::size_t head);

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest episode once full
  std::vector<Episode> episodes_;
};

}  // namespace cia::rl
