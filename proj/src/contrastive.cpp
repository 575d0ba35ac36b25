// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/contrastive.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cia::contrastive {

ad::Var similarity(ad::Var credits, ad::Var identities) {
  if (!credits.value().same_shape(identities.value())) {
    throw std::invalid_argument("similarity: credits " + shape_string(credits.value()) +
                                " vs identities " + shape_string(identities.value()));
  }
  return ad::matmul(credits, ad::transpose(identities));
}

ad::Var contrastive_loss(std::span<const ad::Var> similarities, ContrastKind kind) {
  if (similarities.empty()) throw std::invalid_argument("contrastive loss over an empty batch");
  const std::size_t k = similarities[0].rows();
  std::vector<ad::Var> logits;
  logits.reserve(similarities.size());
  for (ad::Var g : similarities) {
    if (g.rows() != k || g.cols() != k) {
      throw std::invalid_argument("similarity matrices must all be " + std::to_string(k) + "x" +
                                  std::to_string(k) + ", got " + shape_string(g.value()));
    }
    if (!g.value().all_finite()) throw std::domain_error("non-finite similarity entries");
    logits.push_back(kind == ContrastKind::kIdentityWise ? ad::transpose(g) : g);
  }
  ad::Graph& graph = *similarities[0].graph();
  ad::Var log_probs = ad::log_softmax_rows(ad::concat_rows(logits));
  Tensor labels(similarities.size() * k, k);
  for (std::size_t b = 0; b < similarities.size(); ++b) {
    for (std::size_t i = 0; i < k; ++i) labels(b * k + i, i) = 1.0;
  }
  ad::Var picked = ad::sum(log_probs * graph.constant(std::move(labels)));
  return ad::scale(picked, -1.0 / static_cast<double>(similarities.size() * k));
}

std::vector<ad::Var> episode_credit_matrices(ad::Var step_credits, std::size_t episodes,
                                             std::size_t horizon) {
  if (step_credits.rows() != episodes * horizon) {
    throw std::invalid_argument("step credits " + shape_string(step_credits.value()) + " vs " +
                                std::to_string(episodes) + " episodes of " +
                                std::to_string(horizon) + " steps");
  }
  std::vector<ad::Var> out;
  out.reserve(episodes);
  for (std::size_t b = 0; b < episodes; ++b) {
    out.push_back(ad::transpose(ad::slice_rows(step_credits, b * horizon, horizon)));
  }
  return out;
}

ad::Var batch_contrastive_loss(ad::Var step_credits, const Tensor& step_mask,
                               std::size_t episodes, std::size_t horizon, ad::Var identities,
                               ContrastKind kind) {
  if (identities.cols() != horizon || identities.rows() != step_credits.cols()) {
    throw std::invalid_argument("identities " + shape_string(identities.value()) +
                                " do not match " + std::to_string(step_credits.cols()) +
                                " agents x horizon " + std::to_string(horizon));
  }
  ad::Var masked = step_credits * step_credits.graph()->constant(step_mask);
  std::vector<ad::Var> sims;
  for (ad::Var x : episode_credit_matrices(masked, episodes, horizon)) {
    sims.push_back(similarity(x, identities));
  }
  return contrastive_loss(sims, kind);
}

Tensor temporal_credits(const rl::Networks& nets, const nn::ParamStore& store,
                        const rl::Episode& episode) {
  if (episode.length > nets.horizon) {
    throw std::invalid_argument("episode length " + std::to_string(episode.length) +
                                " exceeds horizon " + std::to_string(nets.horizon));
  }
  const rl::Episode* one[] = {&episode};
  const auto batch = rl::EpisodeBatch::from_episodes(one, nets.horizon);
  ad::Graph g;
  auto bound = rl::bind(g, nets, store, false);
  auto q_steps = rl::unroll_agents(g, nets.agent, bound.agent, batch);
  ad::Var q = rl::chosen_values(g, q_steps, batch);
  ad::Var credits = nets.mixer.credits(bound.mixer, q, g.constant(rl::step_states(batch, 0)));
  ad::Var masked = credits * g.constant(rl::step_column(batch, batch.mask));
  return ad::transpose(masked).value();
}

double mi_lower_bound(double contrastive_loss, std::size_t n_agents) {
  return std::log(static_cast<double>(n_agents)) - contrastive_loss;
}

ad::Var total_loss(ad::Var td_loss, ad::Var contrastive_loss, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  return td_loss + ad::scale(contrastive_loss, alpha);
}

}  // namespace cia::contrastive
