// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/episode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cia::rl {

double Episode::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

double Episode::discounted_return(double gamma) const {
  double g = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) g = rewards[t] + gamma * g;
  return g;
}

EpisodeBatch EpisodeBatch::from_episodes(std::span<const Episode* const> episodes,
                                         std::size_t horizon) {
  if (episodes.empty()) throw std::invalid_argument("cannot batch zero episodes");
  const Episode& first = *episodes.front();
  EpisodeBatch b;
  b.batch = episodes.size();
  b.horizon = horizon;
  b.n_agents = first.n_agents;
  b.obs_dim = first.obs_dim;
  b.state_dim = first.state_dim;
  const std::size_t obs_row = b.n_agents * b.obs_dim;
  b.obs.assign(b.batch * (horizon + 1) * obs_row, 0.0);
  b.states.assign(b.batch * (horizon + 1) * b.state_dim, 0.0);
  b.actions.assign(b.batch * horizon * b.n_agents, 0);
  b.rewards.assign(b.batch * horizon, 0.0);
  b.mask.assign(b.batch * horizon, 0.0);
  b.terminated.assign(b.batch * horizon, 0.0);

  for (std::size_t i = 0; i < b.batch; ++i) {
    const Episode& e = *episodes[i];
    if (e.n_agents != b.n_agents || e.obs_dim != b.obs_dim || e.state_dim != b.state_dim) {
      throw std::invalid_argument("episodes in a batch must share their schema");
    }
    if (e.length > horizon) {
      throw std::invalid_argument("episode length " + std::to_string(e.length) +
                                  " exceeds horizon " + std::to_string(horizon));
    }
    std::copy(e.obs.begin(), e.obs.end(),
              b.obs.begin() + static_cast<std::ptrdiff_t>(i * (horizon + 1) * obs_row));
    std::copy(e.states.begin(), e.states.end(),
              b.states.begin() + static_cast<std::ptrdiff_t>(i * (horizon + 1) * b.state_dim));
    std::copy(e.actions.begin(), e.actions.end(),
              b.actions.begin() + static_cast<std::ptrdiff_t>(i * horizon * b.n_agents));
    for (std::size_t t = 0; t < e.length; ++t) {
      b.rewards[i * horizon + t] = e.rewards[t];
      b.mask[i * horizon + t] = 1.0;
    }
    if (e.terminated && e.length > 0) b.terminated[i * horizon + e.length - 1] = 1.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Episode episode) {
  if (episodes_.size() < capacity_) {
    episodes_.push_back(std::move(episode));
    return;
  }
  episodes_[head_] = std::move(episode);
  head_ = (head_ + 1) % capacity_;
}

std::vector<const Episode*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (!can_sample(n)) {
    throw std::invalid_argument("cannot sample " + std::to_string(n) + " episodes from a buffer of " +
                                std::to_string(size()));
  }
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Episode*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    out.push_back(&episodes_[idx[i]]);
  }
  return out;
}

std::vector<const Episode*> ReplayBuffer::contents() const {
  std::vector<const Episode*> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.push_back(&episodes_[(head_ + i) % episodes_.size()]);
  }
  return out;
}

void ReplayBuffer::restore(std::vector<Episode> slots, std::size_t head) {
  if (slots.size() > capacity_ || (head != 0 && head >= slots.size()) ||
      (head != 0 && slots.size() < capacity_)) {
    throw std::invalid_argument("inconsistent replay buffer snapshot");
  }
  episodes_ = std::move(slots);
  head_ = head;
}

}  // namespace cia::rl
