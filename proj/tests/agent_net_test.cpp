// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/agent_net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace cia::nn {
namespace {

constexpr AgentNetDims kSmall{5, 3, 2, 4};

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

// Random weights and non-zero biases.
ParamStore random_store(const AgentNet& net, Rng& rng) {
  ParamStore s;
  net.init(s, rng);
  for (const auto& [name, t] : s.tensors()) {
    if (name.ends_with(".bias")) s.at(name) = random_tensor(t.rows(), t.cols(), rng);
  }
  return s;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop GRU step, written from the cell equations with PyTorch's r|z|n
// gate layout.
std::vector<double> naive_step(const ParamStore& s, const std::vector<double>& in,
                               std::vector<double>& h) {
  const Tensor& w1 = s.at("agent.fc1.weight");
  const Tensor& b1 = s.at("agent.fc1.bias");
  const Tensor& wi = s.at("agent.gru.input.weight");
  const Tensor& bi = s.at("agent.gru.input.bias");
  const Tensor& wh = s.at("agent.gru.hidden.weight");
  const Tensor& bh = s.at("agent.gru.hidden.bias");
  const Tensor& w2 = s.at("agent.fc2.weight");
  const Tensor& b2 = s.at("agent.fc2.bias");
  const std::size_t H = h.size();
  std::vector<double> x(H);
  for (std::size_t j = 0; j < H; ++j) {
    double a = b1(0, j);
    for (std::size_t i = 0; i < in.size(); ++i) a += in[i] * w1(i, j);
    x[j] = a > 0 ? a : 0;
  }
  auto gate = [&](const Tensor& w, const Tensor& b, const std::vector<double>& v, std::size_t col) {
    double a = b(0, col);
    for (std::size_t i = 0; i < v.size(); ++i) a += v[i] * w(i, col);
    return a;
  };
  std::vector<double> next(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double r = sigmoid(gate(wi, bi, x, j) + gate(wh, bh, h, j));
    const double z = sigmoid(gate(wi, bi, x, H + j) + gate(wh, bh, h, H + j));
    const double n = std::tanh(gate(wi, bi, x, 2 * H + j) + r * gate(wh, bh, h, 2 * H + j));
    next[j] = (1 - z) * n + z * h[j];
  }
  h = next;
  std::vector<double> q(w2.cols());
  for (std::size_t a = 0; a < q.size(); ++a) q[a] = gate(w2, b2, h, a);
  return q;
}

TEST(AgentNet, LayerShapes) {
  AgentNet net(kSmall);
  EXPECT_EQ(kSmall.input_dim(), 10u);
  Rng rng(1);
  ParamStore s;
  net.init(s, rng);
  EXPECT_EQ(s.at("agent.fc1.weight").rows(), 10u);
  EXPECT_EQ(s.at("agent.gru.input.weight").cols(), 12u);
  EXPECT_EQ(s.at("agent.fc2.weight").cols(), 3u);
  EXPECT_EQ(s.size(), 8u);
}

TEST(AgentNet, ForwardMatchesNaiveGruOverSeveralSteps) {
  AgentNet net(kSmall);
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamStore s = random_store(net, rng);
    ad::Graph g;
    auto b = net.bind(g, s, false);
    std::vector<double> h_ref(kSmall.hidden, 0.0);
    ad::Var h = g.constant(Tensor(1, kSmall.hidden));
    for (int t = 0; t < 4; ++t) {
      Tensor in = random_tensor(1, kSmall.input_dim(), rng);
      auto out = net.forward(b, g.constant(in), h);
      h = out.hidden;
      const auto q_ref = naive_step(s, std::vector<double>(in.data().begin(), in.data().end()), h_ref);
      for (std::size_t a = 0; a < q_ref.size(); ++a) EXPECT_NEAR(out.q.value()(0, a), q_ref[a], 1e-12);
      for (std::size_t j = 0; j < h_ref.size(); ++j) EXPECT_NEAR(h.value()(0, j), h_ref[j], 1e-12);
    }
  }
}

TEST(AgentNet, AppendInputsLayout) {
  AgentNet net(kSmall);
  const std::vector<double> obs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<int> last = {2, -1};
  std::vector<double> rows;
  net.append_inputs(obs, last, rows);
  const std::vector<double> expected = {1, 2, 3, 4, 5, 0, 0, 1, 1, 0,
                                        6, 7, 8, 9, 10, 0, 0, 0, 0, 1};
  EXPECT_EQ(rows, expected);
  EXPECT_THROW(net.append_inputs(std::vector<double>(3), last, rows), std::invalid_argument);
}

TEST(AgentNet, RowsAreIndependent) {
  AgentNet net(kSmall);
  Rng rng(4);
  ParamStore s = random_store(net, rng);
  Tensor in = random_tensor(3, kSmall.input_dim(), rng);
  Tensor h0 = random_tensor(3, kSmall.hidden, rng);
  ad::Graph g;
  auto b = net.bind(g, s, false);
  auto batched = net.forward(b, g.constant(in), g.constant(h0));
  for (std::size_t r = 0; r < 3; ++r) {
    Tensor one(1, kSmall.input_dim(), std::vector<double>(in.row(r).begin(), in.row(r).end()));
    Tensor hr(1, kSmall.hidden, std::vector<double>(h0.row(r).begin(), h0.row(r).end()));
    auto single = net.forward(b, g.constant(one), g.constant(hr));
    for (std::size_t a = 0; a < kSmall.n_actions; ++a) {
      EXPECT_EQ(single.q.value()(0, a), batched.q.value()(r, a));
    }
  }
}

TEST(AgentNet, AgentForwardValidatesLengths) {
  AgentNet net(kSmall);
  Rng rng(5);
  ParamStore s = random_store(net, rng);
  const Tensor obs(1, 5), act(1, 3), id(1, 2), h(1, 4);
  const auto [q, h2] = agent_forward(net, s, obs, act, id, h);
  EXPECT_EQ(q.cols(), 3u);
  EXPECT_EQ(h2.cols(), 4u);
  EXPECT_THROW(agent_forward(net, s, Tensor(1, 4), act, id, h), std::invalid_argument);
}

// Gradient of a two-step unroll with respect to every parameter tensor and
// the inputs, against central differences, 100 random instances.
class AgentNetGradient : public ::testing::TestWithParam<int> {};

TEST_P(AgentNetGradient, MatchesFiniteDifferences) {
  AgentNet net(kSmall);
  Rng rng(1000 + GetParam());
  const ParamStore s = random_store(net, rng);
  const Tensor in0 = random_tensor(2, kSmall.input_dim(), rng);
  const Tensor in1 = random_tensor(2, kSmall.input_dim(), rng);
  const Tensor mix = random_tensor(2, kSmall.n_actions, rng);

  auto loss = [&](ad::Graph& g, AgentNet::Bound b, ad::Var x0) {
    auto o0 = net.forward(b, x0, g.constant(Tensor(2, kSmall.hidden)));
    auto o1 = net.forward(b, g.constant(in1), o0.hidden);
    return ad::sum(ad::square(o1.q) * g.constant(mix) + o0.q);
  };
  for (const auto& [name, value] : s.tensors()) {
    ad::ScalarFunction f = [&, name = name](ad::Graph& g, ad::Var x) {
      auto b = net.bind(g, s, false);
      ad::Var* slot[] = {&b.fc1_w, &b.fc1_b, &b.gru_wi, &b.gru_bi,
                         &b.gru_wh, &b.gru_bh, &b.fc2_w, &b.fc2_b};
      const char* names[] = {"agent.fc1.weight", "agent.fc1.bias",
                             "agent.gru.input.weight", "agent.gru.input.bias",
                             "agent.gru.hidden.weight", "agent.gru.hidden.bias",
                             "agent.fc2.weight", "agent.fc2.bias"};
      for (int i = 0; i < 8; ++i) {
        if (name == names[i]) *slot[i] = x;
      }
      return loss(g, b, g.constant(in0));
    };
    EXPECT_LT(ad::grad_check(f, value, 1e-6), 1e-5) << name;
  }
  ad::ScalarFunction wrt_input = [&](ad::Graph& g, ad::Var x) {
    return loss(g, net.bind(g, s, false), x);
  };
  EXPECT_LT(ad::grad_check(wrt_input, in0, 1e-6), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Instances, AgentNetGradient, ::testing::Range(0, 100));

}  // namespace
}  // namespace cia::nn
