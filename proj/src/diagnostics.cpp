// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cia/contrastive.hpp"
#include "cia/trainer.hpp"

namespace cia::diagnostics {

std::vector<double> credit_distribution(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("credit_distribution of an empty vector");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::domain_error("credit_distribution: non-finite credit");
  }
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<double> d(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += d[i] = std::exp(x[i] - top);
  for (double& v : d) v /= z;
  return d;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(q[i] > 0.0)) throw std::domain_error("kl_divergence: q has a non-positive entry");
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

Tensor credit_distributions(const Model& model, const rl::Episode& episode) {
  const Tensor x = contrastive::temporal_credits(model.nets, model.store, episode);
  const std::size_t k = x.rows();
  Tensor d(k, episode.length);
  std::vector<double> col(k);
  for (std::size_t t = 0; t < episode.length; ++t) {
    for (std::size_t i = 0; i < k; ++i) col[i] = x(i, t);
    const auto dt = credit_distribution(col);
    for (std::size_t i = 0; i < k; ++i) d(i, t) = dt[i];
  }
  return d;
}

namespace {

void check_schemas(std::span<const Model> models) {
  if (models.size() < 2) throw std::invalid_argument("kl_matrix needs at least two models");
  const auto& a = models[0].nets.agent.dims();
  const auto& m = models[0].nets.mixer.dims();
  for (const Model& model : models) {
    const auto& b = model.nets.agent.dims();
    const auto& n = model.nets.mixer.dims();
    if (b.obs_dim != a.obs_dim || b.n_actions != a.n_actions || b.n_agents != a.n_agents ||
        n.state_dim != m.state_dim || model.nets.horizon != models[0].nets.horizon) {
      throw std::invalid_argument("model '" + model.name + "' has a different schema from '" +
                                  models[0].name + "'");
    }
  }
}

}  // namespace

KlMatrix kl_matrix_on(std::span<const Model> models, std::span<const rl::Episode> pooled) {
  check_schemas(models);
  const std::size_t m = models.size();
  KlMatrix out;
  for (const Model& model : models) out.names.push_back(model.name);
  out.lambda = Tensor(m, m);
  out.pooled_episodes = pooled.size();
  std::vector<double> pi, pj;
  for (const rl::Episode& e : pooled) {
    std::vector<Tensor> d;
    d.reserve(m);
    for (const Model& model : models) d.push_back(credit_distributions(model, e));
    const std::size_t k = d[0].rows();
    pi.resize(k);
    pj.resize(k);
    for (std::size_t t = 0; t < e.length; ++t) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t r = 0; r < k; ++r) pi[r] = d[i](r, t);
        for (std::size_t j = 0; j < m; ++j) {
          if (i == j) continue;
          for (std::size_t r = 0; r < k; ++r) pj[r] = d[j](r, t);
          out.lambda(i, j) += kl_divergence(pi, pj);
        }
      }
    }
    out.pooled_steps += e.length;
  }
  if (out.pooled_steps == 0) throw std::invalid_argument("kl_matrix over zero valid steps");
  for (std::size_t i = 0; i < out.lambda.size(); ++i) {
    out.lambda[i] /= static_cast<double>(out.pooled_steps);
  }
  return out;
}

KlMatrix kl_matrix(std::span<const Model> models, env::Environment& env,
                   std::size_t episodes_per_model, std::uint64_t seed) {
  check_schemas(models);
  if (episodes_per_model == 0) throw std::invalid_argument("kl_matrix needs episodes per model");
  std::vector<rl::Episode> pooled;
  for (std::size_t i = 0; i < models.size(); ++i) {
    rl::AgentPolicy policy(models[i].nets, models[i].store, 0.0);
    auto r = rl::evaluate(env, policy, episodes_per_model, derive_seed(seed, i));
    for (auto& e : r.episodes) pooled.push_back(std::move(e));
  }
  return kl_matrix_on(models, pooled);
}

double alternation_score(const Tensor& credits, std::span<const int> owner, std::size_t length) {
  if (length == 0) throw std::invalid_argument("alternation_score over zero steps");
  if (credits.cols() < length || owner.size() < length) {
    throw std::invalid_argument("alternation_score: credits or owners shorter than the episode");
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < length; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < credits.rows(); ++k) {
      if (credits(k, t) > credits(best, t)) best = k;
    }
    if (static_cast<int>(best) == owner[t]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(length);
}

double alternation_score(const Model& model, std::span<const rl::Episode> episodes) {
  double hits = 0.0;
  std::size_t steps = 0;
  for (const rl::Episode& e : episodes) {
    if (e.length == 0) continue;
    const Tensor x = contrastive::temporal_credits(model.nets, model.store, e);
    hits += alternation_score(x, e.turn_holder, e.length) * static_cast<double>(e.length);
    steps += e.length;
  }
  if (steps == 0) throw std::invalid_argument("alternation_score over zero steps");
  return hits / static_cast<double>(steps);
}

std::vector<CreditRow> export_credit_timeseries(const rl::Episode& episode, const Model& model) {
  const Tensor x = contrastive::temporal_credits(model.nets, model.store, episode);
  const std::size_t n = model.nets.horizon;
  std::vector<CreditRow> rows;
  rows.reserve(n * x.rows());
  std::vector<double> col(x.rows());
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < x.rows(); ++k) col[k] = x(k, t);
    const auto d = credit_distribution(col);
    const int owner = t < episode.turn_holder.size() ? episode.turn_holder[t] : -1;
    for (std::size_t k = 0; k < x.rows(); ++k) rows.push_back({t, k, col[k], d[k], owner});
  }
  return rows;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_credit_table(std::ostream& out, const std::string& comment,
                        std::span<const CreditRow> rows, std::size_t episode_index) {
  out << "# " << comment << '\n';
  out << "episode\tt\tagent\tcredit\tshare\towner\n";
  for (const auto& r : rows) {
    out << episode_index << '\t' << r.t << '\t' << r.k << '\t' << num(r.credit) << '\t'
        << num(r.share) << '\t' << r.owner << '\n';
  }
}

void write_kl_table(std::ostream& out, const std::string& comment, const KlMatrix& kl) {
  out << "# " << comment << "; pooled_episodes=" << kl.pooled_episodes
      << " pooled_steps=" << kl.pooled_steps << '\n';
  out << "model";
  for (const auto& n : kl.names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < kl.names.size(); ++i) {
    out << kl.names[i];
    for (std::size_t j = 0; j < kl.names.size(); ++j) out << '\t' << num(kl.lambda(i, j));
    out << '\n';
  }
}

}  // namespace cia::diagnostics
