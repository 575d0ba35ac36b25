// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

// Contrastive identity-aware credit learning.
//
// Each agent k owns a learnable identity w^k in R^N. Per episode the temporal
// credits X (K x N, row k = dQ_tot/dQ^k over time, zero-padded) are compared
// with the identities through G = X W^T. The identity-wise loss transposes G
// so that every identity is a query scored against all K credit keys; the
// credit-classification variant skips the transpose and asks every credit row
// to pick its identity.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cia/autodiff.hpp"
#include "cia/episode.hpp"
#include "cia/networks.hpp"
#include "cia/params.hpp"

namespace cia::contrastive {

enum class ContrastKind {
  kIdentityWise,          // InfoNCE over rows of G^T
  kCreditClassification,  // cross-entropy over rows of G
};

// G = X W^T for one episode (X, W: K x N).
ad::Var similarity(ad::Var credits, ad::Var identities);

// Mean cross-entropy with diagonal labels over all episodes and agents.
ad::Var contrastive_loss(std::span<const ad::Var> similarities, ContrastKind kind);
inline ad::Var infonce_loss(std::span<const ad::Var> similarities) {
  return contrastive_loss(similarities, ContrastKind::kIdentityWise);
}
inline ad::Var cc_loss(std::span<const ad::Var> similarities) {
  return contrastive_loss(similarities, ContrastKind::kCreditClassification);
}

// Splits masked step credits ((B*N) x K, row b*N + t) into per-episode K x N
// temporal credit matrices.
std::vector<ad::Var> episode_credit_matrices(ad::Var step_credits, std::size_t episodes,
                                             std::size_t horizon);

// Contrastive loss for a batch: credits from the mixer at the chosen values,
// padding zeroed, one similarity matrix per episode against `identities`.
ad::Var batch_contrastive_loss(ad::Var step_credits, const Tensor& step_mask,
                               std::size_t episodes, std::size_t horizon, ad::Var identities,
                               ContrastKind kind);

// Temporal credits of one episode (K x N) under the given parameters.
Tensor temporal_credits(const rl::Networks& nets, const nn::ParamStore& store,
                        const rl::Episode& episode);

// log(K) - L
double mi_lower_bound(double contrastive_loss, std::size_t n_agents);

// L_TD + alpha * L_CL
ad::Var total_loss(ad::Var td_loss, ad::Var contrastive_loss, double alpha);

}  // namespace cia::contrastive
