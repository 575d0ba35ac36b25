// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/agent_net.hpp"

#include <stdexcept>
#include <string>

namespace cia::nn {

AgentNet::AgentNet(AgentNetDims dims) : dims_(dims) {
  if (dims_.obs_dim == 0 || dims_.n_actions == 0 || dims_.n_agents == 0 || dims_.hidden == 0) {
    throw std::invalid_argument("AgentNet dimensions must be positive");
  }
}

std::vector<LayerSpec> AgentNet::layers() const {
  const std::size_t h = dims_.hidden;
  return {
      {"agent.fc1", dims_.input_dim(), h},
      {"agent.gru.input", h, 3 * h},
      {"agent.gru.hidden", h, 3 * h},
      {"agent.fc2", h, dims_.n_actions},
  };
}

void AgentNet::init(ParamStore& store, Rng& rng) const {
  for (const auto& layer : layers()) init_layer(store, layer, rng);
}

AgentNet::Bound AgentNet::bind(ad::Graph& graph, const ParamStore& store, bool trainable) const {
  auto b = [&](const char* name) { return nn::bind(graph, store, name, trainable); };
  return Bound{b("agent.fc1.weight"),        b("agent.fc1.bias"),
               b("agent.gru.input.weight"),  b("agent.gru.input.bias"),
               b("agent.gru.hidden.weight"), b("agent.gru.hidden.bias"),
               b("agent.fc2.weight"),        b("agent.fc2.bias")};
}

AgentNet::Output AgentNet::forward(const Bound& net, ad::Var inputs, ad::Var hidden) const {
  const std::size_t h = dims_.hidden;
  if (inputs.cols() != dims_.input_dim()) {
    throw std::invalid_argument("agent input width " + std::to_string(inputs.cols()) +
                                " does not match expected " + std::to_string(dims_.input_dim()));
  }
  if (hidden.cols() != h || hidden.rows() != inputs.rows()) {
    throw std::invalid_argument("hidden state " + shape_string(hidden.value()) +
                                " does not match " + std::to_string(inputs.rows()) + " rows of width " +
                                std::to_string(h));
  }
  ad::Var x = ad::relu(ad::matmul(inputs, net.fc1_w) + net.fc1_b);
  ad::Var gi = ad::matmul(x, net.gru_wi) + net.gru_bi;
  ad::Var gh = ad::matmul(hidden, net.gru_wh) + net.gru_bh;
  ad::Var r = ad::sigmoid(ad::slice_cols(gi, 0, h) + ad::slice_cols(gh, 0, h));
  ad::Var z = ad::sigmoid(ad::slice_cols(gi, h, h) + ad::slice_cols(gh, h, h));
  ad::Var n = ad::tanh(ad::slice_cols(gi, 2 * h, h) + r * ad::slice_cols(gh, 2 * h, h));
  // h' = n + z * (h - n)  ==  (1 - z) * n + z * h
  ad::Var h_next = n + z * (hidden - n);
  ad::Var q = ad::matmul(h_next, net.fc2_w) + net.fc2_b;
  return {q, h_next};
}

void AgentNet::append_inputs(std::span<const double> obs, std::span<const int> last_actions,
                             std::vector<double>& rows) const {
  const std::size_t k_agents = dims_.n_agents;
  if (obs.size() != k_agents * dims_.obs_dim || last_actions.size() != k_agents) {
    throw std::invalid_argument("observation block of length " + std::to_string(obs.size()) +
                                " does not match " + std::to_string(k_agents) + " agents x " +
                                std::to_string(dims_.obs_dim) + " features");
  }
  for (std::size_t k = 0; k < k_agents; ++k) {
    auto o = obs.subspan(k * dims_.obs_dim, dims_.obs_dim);
    rows.insert(rows.end(), o.begin(), o.end());
    for (std::size_t a = 0; a < dims_.n_actions; ++a) {
      rows.push_back(last_actions[k] == static_cast<int>(a) ? 1.0 : 0.0);
    }
    for (std::size_t j = 0; j < k_agents; ++j) rows.push_back(j == k ? 1.0 : 0.0);
  }
}

std::pair<Tensor, Tensor> agent_forward(const AgentNet& net, const ParamStore& store,
                                        const Tensor& obs, const Tensor& last_action,
                                        const Tensor& agent_id, const Tensor& hidden) {
  const AgentNetDims& d = net.dims();
  if (obs.size() != d.obs_dim || last_action.size() != d.n_actions ||
      agent_id.size() != d.n_agents) {
    throw std::invalid_argument("agent_forward: feature lengths " + std::to_string(obs.size()) +
                                "/" + std::to_string(last_action.size()) + "/" +
                                std::to_string(agent_id.size()) + " do not match " +
                                std::to_string(d.obs_dim) + "/" + std::to_string(d.n_actions) +
                                "/" + std::to_string(d.n_agents));
  }
  std::vector<double> row(obs.data().begin(), obs.data().end());
  row.insert(row.end(), last_action.data().begin(), last_action.data().end());
  row.insert(row.end(), agent_id.data().begin(), agent_id.data().end());
  const std::size_t width = row.size();
  ad::Graph g;
  auto bound = net.bind(g, store, false);
  auto out = net.forward(bound, g.constant(Tensor(1, width, std::move(row))),
                         g.constant(Tensor(1, hidden.size(),
                                           std::vector<double>(hidden.data().begin(),
                                                               hidden.data().end()))));
  return {out.q.value(), out.hidden.value()};
}

}  // namespace cia::nn
