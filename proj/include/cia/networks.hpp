// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cia/agent_net.hpp"
#include "cia/autodiff.hpp"
#include "cia/episode.hpp"
#include "cia/mixer.hpp"
#include "cia/params.hpp"

namespace cia::rl {

inline constexpr const char* kIdentityParam = "identity.weight";

// Architecture of one value-decomposition learner. Parameters live in a
// ParamStore; this only describes shapes and wiring.
struct Networks {
  nn::AgentNet agent;
  mixer::Mixer mixer;
  std::size_t horizon = 0;  // N, the width of temporal credits and identities

  std::size_t n_agents() const { return agent.dims().n_agents; }

  // Agent net + mixer + K x N identity matrix, all freshly initialised.
  nn::ParamStore init(Rng& rng) const;
};

struct BoundNetworks {
  nn::AgentNet::Bound agent;
  mixer::Mixer::Bound mixer;
};

BoundNetworks bind(ad::Graph& graph, const Networks& nets, const nn::ParamStore& store,
                   bool trainable);

// Recurrent unroll over every step 0..N of a batch. Entry t is (B*K) x |U|
// with row b*K + k.
std::vector<ad::Var> unroll_agents(ad::Graph& graph, const nn::AgentNet& net,
                                   const nn::AgentNet::Bound& bound, const EpisodeBatch& batch);

// Chosen-action values for steps 0..N-1, episode-major: (B*N) x K, row b*N + t.
ad::Var chosen_values(ad::Graph& graph, std::span<const ad::Var> q_steps, const EpisodeBatch& batch);

// Per-agent greedy values at steps offset..offset+N-1, episode-major (B*N) x K.
// With `selector`, the argmax is taken over selector values (double estimation)
// and the value read from `values`.
Tensor greedy_values(std::span<const ad::Var> values, std::span<const ad::Var> selector,
                     const EpisodeBatch& batch, std::size_t offset);

// States at steps offset..offset+N-1, episode-major (B*N) x S.
Tensor step_states(const EpisodeBatch& batch, std::size_t offset);

// (B*N) x 1 column of a per-step batch field.
Tensor step_column(const EpisodeBatch& batch, std::span<const double> field);

}  // namespace cia::rl
