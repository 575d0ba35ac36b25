// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cia/env.hpp"
#include "cia/episode.hpp"
#include "cia/networks.hpp"
#include "cia/params.hpp"
#include "cia/tensor.hpp"

namespace cia::diagnostics {

// softmax(x). Rejects non-finite entries.
std::vector<double> credit_distribution(std::span<const double> x);

// sum_k p[k] ln(p[k] / q[k]). Rejects zero entries of q and size mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct Model {
  std::string name;
  rl::Networks nets;
  nn::ParamStore store;
};

// Per-step credit distributions d_t (column t of the result, K x length) of
// one episode replayed through `model`.
Tensor credit_distributions(const Model& model, const rl::Episode& episode);

struct KlMatrix {
  std::vector<std::string> names;
  Tensor lambda;  // M x M, lambda(i, j) = mean KL(d^i || d^j)
  std::size_t pooled_episodes = 0;
  std::size_t pooled_steps = 0;
};

// Average KL over every valid step of the pooled episodes, each model
// replaying the recorded observations and actions through its own networks.
KlMatrix kl_matrix_on(std::span<const Model> models, std::span<const rl::Episode> pooled);

// Each model plays `episodes_per_model` greedy episodes (seeded from `seed`);
// all of them are pooled and scored by kl_matrix_on.
KlMatrix kl_matrix(std::span<const Model> models, env::Environment& env,
                   std::size_t episodes_per_model, std::uint64_t seed);

// Fraction of steps t < length whose credit argmax (ties to the lowest index)
// equals owner[t]. credits: K x N.
double alternation_score(const Tensor& credits, std::span<const int> owner, std::size_t length);

// Pooled over all valid steps of the episodes.
double alternation_score(const Model& model, std::span<const rl::Episode> episodes);

struct CreditRow {
  std::size_t t = 0;
  std::size_t k = 0;
  double credit = 0.0;
  double share = 0.0;  // d_t[k]
  int owner = -1;
};

// N*K rows, t-major.
std::vector<CreditRow> export_credit_timeseries(const rl::Episode& episode, const Model& model);

// Tab-separated tables with a leading '#' comment line.
void write_credit_table(std::ostream& out, const std::string& comment,
                        std::span<const CreditRow> rows, std::size_t episode_index);
void write_kl_table(std::ostream& out, const std::string& comment, const KlMatrix& kl);

}  // namespace cia::diagnostics
