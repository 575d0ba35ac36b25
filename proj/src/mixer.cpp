// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/mixer.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace cia::mixer {

std::string_view to_string(MixerKind kind) { return kind == MixerKind::kVdn ? "vdn" : "qmix"; }

MixerKind parse_mixer_kind(std::string_view text) {
  if (text == "vdn") return MixerKind::kVdn;
  if (text == "qmix") return MixerKind::kQmix;
  throw std::invalid_argument("unknown mixer '" + std::string(text) + "' (expected vdn or qmix)");
}

Mixer::Mixer(MixerKind kind, MixerDims dims) : kind_(kind), dims_(dims) {
  if (dims_.n_agents == 0) throw std::invalid_argument("mixer needs at least one agent");
  if (kind_ == MixerKind::kQmix && (dims_.state_dim == 0 || dims_.embed_dim == 0)) {
    throw std::invalid_argument("QMIX needs positive state and embedding widths");
  }
}

std::vector<nn::LayerSpec> Mixer::layers() const {
  if (kind_ == MixerKind::kVdn) return {};
  const std::size_t s = dims_.state_dim;
  const std::size_t m = dims_.embed_dim;
  return {
      {"mixer.hyper_w1", s, dims_.n_agents * m},
      {"mixer.hyper_b1", s, m},
      {"mixer.hyper_w2", s, m},
      {"mixer.hyper_v1", s, m},
      {"mixer.hyper_v2", m, 1},
  };
}

void Mixer::init(nn::ParamStore& store, Rng& rng) const {
  for (const auto& layer : layers()) nn::init_layer(store, layer, rng);
}

Mixer::Bound Mixer::bind(ad::Graph& graph, const nn::ParamStore& store, bool trainable) const {
  if (kind_ == MixerKind::kVdn) return {};
  auto b = [&](const char* name) { return nn::bind(graph, store, name, trainable); };
  return Bound{b("mixer.hyper_w1.weight"), b("mixer.hyper_w1.bias"),
               b("mixer.hyper_b1.weight"), b("mixer.hyper_b1.bias"),
               b("mixer.hyper_w2.weight"), b("mixer.hyper_w2.bias"),
               b("mixer.hyper_v1.weight"), b("mixer.hyper_v1.bias"),
               b("mixer.hyper_v2.weight"), b("mixer.hyper_v2.bias")};
}

void Mixer::check(ad::Var q, ad::Var states) const {
  if (q.cols() != dims_.n_agents) {
    throw std::invalid_argument("mixer: agent values " + shape_string(q.value()) + " vs " +
                                std::to_string(dims_.n_agents) + " agents");
  }
  if (kind_ == MixerKind::kQmix &&
      (states.cols() != dims_.state_dim || states.rows() != q.rows())) {
    throw std::invalid_argument("mixer: states " + shape_string(states.value()) +
                                " do not match agent values " + shape_string(q.value()) +
                                " with state width " + std::to_string(dims_.state_dim));
  }
}

Mixer::Hyper Mixer::hyper(const Bound& p, ad::Var states) const {
  Hyper h;
  h.w1 = ad::abs(ad::matmul(states, p.hyper_w1_w) + p.hyper_w1_b);
  h.b1 = ad::matmul(states, p.hyper_b1_w) + p.hyper_b1_b;
  h.w2 = ad::abs(ad::matmul(states, p.hyper_w2_w) + p.hyper_w2_b);
  h.b2 = ad::matmul(ad::relu(ad::matmul(states, p.hyper_v1_w) + p.hyper_v1_b), p.hyper_v2_w) +
         p.hyper_v2_b;
  return h;
}

ad::Var Mixer::pre_activation(const Hyper& h, ad::Var q) const {
  const std::size_t m = dims_.embed_dim;
  ad::Var pre = h.b1;
  for (std::size_t k = 0; k < dims_.n_agents; ++k) {
    pre = pre + ad::slice_cols(q, k, 1) * ad::slice_cols(h.w1, k * m, m);
  }
  return pre;
}

ad::Var Mixer::mix(const Bound& params, ad::Var q, ad::Var states) const {
  check(q, states);
  if (kind_ == MixerKind::kVdn) {
    // Sum each row in ascending order so Q_tot does not depend on agent order,
    // bit for bit.
    const std::size_t rows = q.rows();
    const std::size_t k = dims_.n_agents;
    std::vector<std::size_t> order(rows * k);
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = order.begin() + static_cast<std::ptrdiff_t>(r * k);
      for (std::size_t j = 0; j < k; ++j) row[static_cast<std::ptrdiff_t>(j)] = r * k + j;
      std::stable_sort(row, row + static_cast<std::ptrdiff_t>(k),
                       [&](std::size_t a, std::size_t b) { return q.value()[a] < q.value()[b]; });
    }
    return ad::row_sum(ad::reshape(ad::gather_rows(ad::reshape(q, rows * k, 1), std::move(order)), rows, k));
  }
  const Hyper h = hyper(params, states);
  ad::Var hidden = ad::elu(pre_activation(h, q));
  return ad::row_sum(hidden * h.w2) + h.b2;
}

ad::Var Mixer::credits(const Bound& params, ad::Var q, ad::Var states) const {
  check(q, states);
  if (kind_ == MixerKind::kVdn) {
    return q.graph()->constant(Tensor(q.rows(), dims_.n_agents, 1.0));
  }
  const std::size_t m = dims_.embed_dim;
  const Hyper h = hyper(params, states);
  ad::Var gate = ad::elu_prime(pre_activation(h, q)) * h.w2;
  std::vector<ad::Var> columns;
  columns.reserve(dims_.n_agents);
  for (std::size_t k = 0; k < dims_.n_agents; ++k) {
    columns.push_back(ad::row_sum(ad::slice_cols(h.w1, k * m, m) * gate));
  }
  return ad::concat_cols(columns);
}

Tensor Permutation::matrix() const {
  const std::size_t k = order.size();
  Tensor p(k, k);
  for (std::size_t i = 0; i < k; ++i) p(i, order[i]) = 1.0;
  return p;
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] != i) return false;
  }
  return true;
}

Permutation sample_permutation(std::size_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("sample_permutation needs K >= 1");
  Permutation p;
  p.order.resize(k);
  for (std::size_t i = 0; i < k; ++i) p.order[i] = i;
  for (std::size_t i = k - 1; i > 0; --i) std::swap(p.order[i], p.order[rng.below(i + 1)]);
  return p;
}

ad::Var permute_agents(ad::Var q, const Permutation& p) {
  if (q.cols() != p.order.size()) {
    throw std::invalid_argument("permute_agents: values " + shape_string(q.value()) +
                                " vs permutation of size " + std::to_string(p.order.size()));
  }
  Tensor pt = p.matrix();
  Tensor transposed(pt.cols(), pt.rows());
  for (std::size_t i = 0; i < pt.rows(); ++i) {
    for (std::size_t j = 0; j < pt.cols(); ++j) transposed(j, i) = pt(i, j);
  }
  return ad::matmul(q, q.graph()->constant(std::move(transposed)));
}

ad::Var shuffle_mix(const Mixer& mixer, const Mixer::Bound& params, ad::Var q, ad::Var states,
                    const Permutation& p) {
  return mixer.mix(params, permute_agents(q, p), states);
}

Tensor evaluate_mix(const Mixer& mixer, const nn::ParamStore& store, const Tensor& q,
                    const Tensor& states) {
  ad::Graph g;
  auto bound = mixer.bind(g, store, false);
  return mixer.mix(bound, g.constant(q), g.constant(states)).value();
}

Tensor evaluate_credits(const Mixer& mixer, const nn::ParamStore& store, const Tensor& q,
                        const Tensor& states) {
  ad::Graph g;
  auto bound = mixer.bind(g, store, false);
  return mixer.credits(bound, g.constant(q), g.constant(states)).value();
}

}  // namespace cia::mixer
