// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/networks.hpp"

#include <cmath>
#include <stdexcept>

namespace cia::rl {

nn::ParamStore Networks::init(Rng& rng) const {
  if (horizon == 0) throw std::invalid_argument("Networks::horizon must be positive");
  nn::ParamStore store;
  agent.init(store, rng);
  mixer.init(store, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(horizon));
  Tensor identity(n_agents(), horizon);
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = rng.uniform(-bound, bound);
  store.add(kIdentityParam, std::move(identity));
  return store;
}

BoundNetworks bind(ad::Graph& graph, const Networks& nets, const nn::ParamStore& store,
                   bool trainable) {
  return {nets.agent.bind(graph, store, trainable), nets.mixer.bind(graph, store, trainable)};
}

std::vector<ad::Var> unroll_agents(ad::Graph& graph, const nn::AgentNet& net,
                                   const nn::AgentNet::Bound& bound, const EpisodeBatch& batch) {
  const auto& d = net.dims();
  if (batch.n_agents != d.n_agents || batch.obs_dim != d.obs_dim) {
    throw std::invalid_argument("batch schema does not match the agent network");
  }
  const std::size_t rows = batch.batch * d.n_agents;
  ad::Var hidden = graph.constant(Tensor(rows, d.hidden));
  std::vector<ad::Var> out;
  out.reserve(batch.horizon + 1);
  std::vector<int> last(d.n_agents);
  for (std::size_t t = 0; t <= batch.horizon; ++t) {
    std::vector<double> inputs;
    inputs.reserve(rows * d.input_dim());
    for (std::size_t b = 0; b < batch.batch; ++b) {
      for (std::size_t k = 0; k < d.n_agents; ++k) {
        last[k] = (t > 0 && batch.valid(b, t - 1) > 0.0) ? batch.action(b, t - 1, k) : -1;
      }
      net.append_inputs(batch.obs_at(b, t), last, inputs);
    }
    auto step = net.forward(bound, graph.constant(Tensor(rows, d.input_dim(), std::move(inputs))),
                            hidden);
    hidden = step.hidden;
    out.push_back(step.q);
  }
  return out;
}

ad::Var chosen_values(ad::Graph& graph, std::span<const ad::Var> q_steps, const EpisodeBatch& batch) {
  if (q_steps.size() < batch.horizon) throw std::invalid_argument("too few unrolled steps");
  const std::size_t k_agents = batch.n_agents;
  const std::size_t n_actions = q_steps[0].cols();
  std::vector<ad::Var> per_step;
  per_step.reserve(batch.horizon);
  for (std::size_t t = 0; t < batch.horizon; ++t) {
    Tensor onehot(batch.batch * k_agents, n_actions);
    for (std::size_t b = 0; b < batch.batch; ++b) {
      for (std::size_t k = 0; k < k_agents; ++k) {
        onehot(b * k_agents + k, static_cast<std::size_t>(batch.action(b, t, k))) = 1.0;
      }
    }
    ad::Var picked = ad::row_sum(q_steps[t] * graph.constant(std::move(onehot)));
    per_step.push_back(ad::reshape(picked, batch.batch, k_agents));
  }
  // concat gives row t*B + b; reorder to b*N + t.
  std::vector<std::size_t> order(batch.steps());
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 0; t < batch.horizon; ++t) order[b * batch.horizon + t] = t * batch.batch + b;
  }
  return ad::gather_rows(ad::concat_rows(per_step), std::move(order));
}

Tensor greedy_values(std::span<const ad::Var> values, std::span<const ad::Var> selector,
                     const EpisodeBatch& batch, std::size_t offset) {
  const std::size_t k_agents = batch.n_agents;
  Tensor out(batch.steps(), k_agents);
  for (std::size_t t = 0; t < batch.horizon; ++t) {
    const Tensor& v = values[t + offset].value();
    const Tensor& s = selector.empty() ? v : selector[t + offset].value();
    for (std::size_t b = 0; b < batch.batch; ++b) {
      for (std::size_t k = 0; k < k_agents; ++k) {
        const std::size_t row = b * k_agents + k;
        std::size_t best = 0;
        for (std::size_t a = 1; a < s.cols(); ++a) {
          if (s(row, a) > s(row, best)) best = a;
        }
        out(b * batch.horizon + t, k) = v(row, best);
      }
    }
  }
  return out;
}

Tensor step_states(const EpisodeBatch& batch, std::size_t offset) {
  Tensor out(batch.steps(), batch.state_dim);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 0; t < batch.horizon; ++t) {
      auto s = batch.state_at(b, t + offset);
      std::copy(s.begin(), s.end(),
                out.data().begin() +
                    static_cast<std::ptrdiff_t>((b * batch.horizon + t) * batch.state_dim));
    }
  }
  return out;
}

Tensor step_column(const EpisodeBatch& batch, std::span<const double> field) {
  if (field.size() != batch.steps()) throw std::invalid_argument("per-step field has wrong length");
  return Tensor::column_vector(field);
}

}  // namespace cia::rl
