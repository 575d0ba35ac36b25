// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cia/config.hpp"
#include "cia/env.hpp"
#include "cia/episode.hpp"
#include "cia/mixer.hpp"
#include "cia/networks.hpp"
#include "cia/params.hpp"
#include "cia/rng.hpp"

namespace cia::rl {

// Linear from epsilon_start to epsilon_finish over epsilon_anneal_steps env
// steps, constant afterwards.
double epsilon_schedule(std::size_t env_steps, const TrainConfig& config);

// Agent net + mixer sized for `env` under `config`.
Networks make_networks(const env::Environment& env, const TrainConfig& config);

// Decision rule for one joint action. Called once per environment step.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() = 0;
  virtual std::vector<int> act(const env::Environment& env, Rng& rng) = 0;
};

// Decentralised epsilon-greedy execution: each agent sees only its own
// observation history (through the shared recurrent net) and picks
// independently. Ties go to the lowest action index.
class AgentPolicy final : public Policy {
 public:
  AgentPolicy(const Networks& nets, const nn::ParamStore& store, double epsilon);

  void set_epsilon(double epsilon) { epsilon_ = epsilon; }
  void begin_episode() override;
  std::vector<int> act(const env::Environment& env, Rng& rng) override;

  // Action values from the most recent act() call, K x |U|.
  const Tensor& last_values() const { return values_; }

 private:
  const Networks& nets_;
  const nn::ParamStore& store_;
  double epsilon_;
  Tensor hidden_;
  Tensor values_;
  std::vector<int> last_;
};

// Scripted centralised policy for the Turn game.
class OraclePolicy final : public Policy {
 public:
  void begin_episode() override {}
  std::vector<int> act(const env::Environment& env, Rng& rng) override;
};

// Plays one episode from env.reset(env_seed) until the game ends or the
// episode limit is reached.
Episode rollout(env::Environment& env, Policy& policy, std::uint64_t env_seed, Rng& rng);

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_discounted_return = 0.0;
  std::vector<double> returns;
  std::vector<Episode> episodes;
};

// n episodes seeded from derive_seed(seed, i). Deterministic given seed.
EvalResult evaluate(env::Environment& env, Policy& policy, std::size_t n, std::uint64_t seed,
                    double gamma = 0.99);

struct TdOptions {
  double gamma = 0.99;
  bool double_q = false;
  const mixer::Permutation* permutation = nullptr;  // shuffle both mixer inputs
};

struct TdTerms {
  ad::Var loss;     // scalar
  ad::Var chosen;   // (B*N) x K online chosen-action values
  ad::Var states;   // (B*N) x S constant
  Tensor mask;      // (B*N) x 1
  Tensor targets;   // (B*N) x 1, y_t
};

// Masked mean squared TD error. The target branch is evaluated in its own
// graph from `target` values, so it carries no gradient.
TdTerms td_loss(ad::Graph& graph, const Networks& nets, const BoundNetworks& online,
                const nn::ParamStore& target, const EpisodeBatch& batch, const TdOptions& options);

struct TrainStats {
  std::size_t train_step = 0;  // 1-based count after this step
  double l_td = 0.0;
  std::optional<double> l_cl;
  double l_all = 0.0;
  std::optional<double> mi_lower_bound;
  double grad_norm = 0.0;
  bool target_synced = false;
};

// Owns the online and target parameters and performs gradient steps.
class Learner {
 public:
  Learner(const TrainConfig& config, Networks nets, Rng& init_rng);

  // Samples B episodes and takes one optimiser step; std::nullopt (and no
  // state change) when the buffer holds fewer than B episodes.
  std::optional<TrainStats> train_step(const ReplayBuffer& buffer, Rng& rng);
  // One step on an explicit batch.
  TrainStats train_on(const EpisodeBatch& batch, Rng& rng);

  const Networks& networks() const { return nets_; }
  const nn::ParamStore& online() const { return online_; }
  nn::ParamStore& online() { return online_; }
  const nn::ParamStore& target() const { return target_; }
  nn::ParamStore& target() { return target_; }
  std::size_t train_steps() const { return train_steps_; }
  void set_train_steps(std::size_t n) { train_steps_ = n; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  Networks nets_;
  nn::ParamStore online_;
  nn::ParamStore target_;
  std::size_t train_steps_ = 0;
};

// Append-only CSV metrics stream.
class MetricsWriter {
 public:
  static const char* header();
  // Opens `path`, truncating to `resume_bytes` when resuming (0 = fresh file).
  MetricsWriter(const std::filesystem::path& path, std::optional<std::uintmax_t> resume_bytes);

  void train(const TrainStats& s, std::size_t env_steps, std::size_t episode, double epsilon);
  void episode(std::size_t train_step, std::size_t env_steps, std::size_t episode, double epsilon,
               double ret, double discounted);
  void eval(std::size_t train_step, std::size_t env_steps, std::size_t episode,
            const EvalResult& result, bool final = false);
  std::uintmax_t bytes();

 private:
  std::ofstream out_;
};

struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path config() const { return root / "config.ini"; }
  std::filesystem::path metrics() const { return root / "metrics.csv"; }
  std::filesystem::path latest() const { return root / "checkpoints" / "latest"; }
  std::filesystem::path final_model() const { return root / "final" / "model.params"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
};

struct RunSummary {
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  std::size_t train_steps = 0;
  bool resumed = false;
  EvalResult final_eval;
};

using EnvFactory = std::function<std::unique_ptr<env::Environment>()>;

// Full training run into `paths.root`. If a resumable checkpoint exists there
// and its config matches, training continues from it and produces the same
// files an uninterrupted run would. `stop_after_env_steps` (for tests) ends
// the loop early after a checkpoint, leaving the run resumable.
RunSummary train(const TrainConfig& config, const EnvFactory& make_env, const RunPaths& paths,
                 std::optional<std::size_t> stop_after_env_steps = std::nullopt);

// Model checkpoint: online parameters plus the metadata needed to rebuild
// the networks.
void save_model(const std::filesystem::path& path, const TrainConfig& config,
                const nn::ParamStore& store);
struct LoadedModel {
  TrainConfig config;
  Networks nets;
  nn::ParamStore store;
};
LoadedModel load_model(const std::filesystem::path& path, const env::Environment& env);

// Binary replay-buffer snapshot.
void save_replay(const std::filesystem::path& path, const ReplayBuffer& buffer);
ReplayBuffer load_replay(const std::filesystem::path& path, std::size_t capacity);

std::string code_version();

}  // namespace cia::rl
