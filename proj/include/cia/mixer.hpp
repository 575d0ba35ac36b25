// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cia/autodiff.hpp"
#include "cia/params.hpp"
#include "cia/rng.hpp"

namespace cia::mixer {

enum class MixerKind { kVdn, kQmix };

std::string_view to_string(MixerKind kind);
MixerKind parse_mixer_kind(std::string_view text);

struct MixerDims {
  std::size_t n_agents = 0;
  std::size_t state_dim = 0;
  std::size_t embed_dim = 32;
};

// Value-decomposition mixer over rows of chosen-action values.
//
// QMIX uses state-conditioned hypernetworks:
//   W1 = |s Hw1 + c_w1|   (K x M per row)   b1 = s Hb1 + c_b1
//   w2 = |s Hw2 + c_w2|   (M per row)       b2 = relu(s V1 + c1) V2 + c2
//   h  = elu(q W1 + b1),  Q_tot = h . w2 + b2
class Mixer {
 public:
  Mixer(MixerKind kind, MixerDims dims);

  MixerKind kind() const { return kind_; }
  const MixerDims& dims() const { return dims_; }
  std::vector<nn::LayerSpec> layers() const;
  void init(nn::ParamStore& store, Rng& rng) const;

  struct Bound {
    ad::Var hyper_w1_w, hyper_w1_b;
    ad::Var hyper_b1_w, hyper_b1_b;
    ad::Var hyper_w2_w, hyper_w2_b;
    ad::Var hyper_v1_w, hyper_v1_b;
    ad::Var hyper_v2_w, hyper_v2_b;
  };
  Bound bind(ad::Graph& graph, const nn::ParamStore& store, bool trainable) const;

  // q: R x K chosen-action values, states: R x S.  Returns R x 1 Q_tot.
  ad::Var mix(const Bound& params, ad::Var q, ad::Var states) const;

  // dQ_tot/dq in closed form (R x K), built from differentiable ops so its
  // own gradient reaches the hypernetwork parameters and q.
  ad::Var credits(const Bound& params, ad::Var q, ad::Var states) const;

 private:
  struct Hyper {
    ad::Var w1;  // R x (K*M), non-negative
    ad::Var b1;  // R x M
    ad::Var w2;  // R x M, non-negative
    ad::Var b2;  // R x 1
  };
  Hyper hyper(const Bound& params, ad::Var states) const;
  ad::Var pre_activation(const Hyper& h, ad::Var q) const;
  void check(ad::Var q, ad::Var states) const;

  MixerKind kind_;
  MixerDims dims_;
};

struct Permutation {
  std::vector<std::size_t> order;  // (P q)[i] = q[order[i]]
  Tensor matrix() const;           // P with P[i][order[i]] = 1
  bool is_identity() const;
};

// Uniform over all K! permutations (Fisher-Yates).
Permutation sample_permutation(std::size_t k, Rng& rng);

// Applies P to each row of q (R x K): rows become (P q_r)^T = q_r^T P^T.
ad::Var permute_agents(ad::Var q, const Permutation& p);

// mix(P q, s).
ad::Var shuffle_mix(const Mixer& mixer, const Mixer::Bound& params, ad::Var q, ad::Var states,
                    const Permutation& p);

// Convenience evaluations on plain tensors (no gradient).
Tensor evaluate_mix(const Mixer& mixer, const nn::ParamStore& store, const Tensor& q,
                    const Tensor& states);
Tensor evaluate_credits(const Mixer& mixer, const nn::ParamStore& store, const Tensor& q,
                        const Tensor& states);

}  // namespace cia::mixer
