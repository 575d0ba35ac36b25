// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cia/autodiff.hpp"
#include "cia/params.hpp"
#include "cia/rng.hpp"

namespace cia::nn {

struct AgentNetDims {
  std::size_t obs_dim = 0;
  std::size_t n_actions = 0;
  std::size_t n_agents = 0;
  std::size_t hidden = 64;

  // observation ++ last-action one-hot ++ agent-id one-hot
  std::size_t input_dim() const { return obs_dim + n_actions + n_agents; }
};

// Recurrent utility network shared by all agents:
//   x  = relu(fc1(input))
//   h' = GRUCell(x, h)           (fully gated, PyTorch gate layout r|z|n)
//   q  = fc2(h')
class AgentNet {
 public:
  explicit AgentNet(AgentNetDims dims);

  const AgentNetDims& dims() const { return dims_; }
  std::vector<LayerSpec> layers() const;
  void init(ParamStore& store, Rng& rng) const;

  struct Bound {
    ad::Var fc1_w, fc1_b;
    ad::Var gru_wi, gru_bi, gru_wh, gru_bh;
    ad::Var fc2_w, fc2_b;
  };
  Bound bind(ad::Graph& graph, const ParamStore& store, bool trainable) const;

  struct Output {
    ad::Var q;       // rows x n_actions
    ad::Var hidden;  // rows x hidden
  };
  // One step for a batch of agent rows. inputs: rows x input_dim.
  Output forward(const Bound& net, ad::Var inputs, ad::Var hidden) const;

  // Input rows for all agents of one environment step. `obs` holds n_agents
  // consecutive observation vectors; last_actions[k] < 0 means "no previous
  // action" (episode start).
  void append_inputs(std::span<const double> obs, std::span<const int> last_actions,
                     std::vector<double>& rows) const;

 private:
  AgentNetDims dims_;
};

// Single-agent, single-step evaluation on raw tensors (no gradient).
// obs: 1 x obs_dim, last_action / agent_id: one-hot rows, hidden: 1 x H.
std::pair<Tensor, Tensor> agent_forward(const AgentNet& net, const ParamStore& store,
                                        const Tensor& obs, const Tensor& last_action,
                                        const Tensor& agent_id, const Tensor& hidden);

}  // namespace cia::nn
