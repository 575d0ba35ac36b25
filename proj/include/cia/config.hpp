// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cia/mixer.hpp"

namespace cia::rl {

enum class CiaMode {
  kOff,            // plain value decomposition
  kCia,            // + identity-wise contrastive loss
  kCc,             // + credit-classification loss (ablation)
  kRandomShuffle,  // mixer sees permuted agent values, TD loss only
};

std::string_view to_string(CiaMode mode);
CiaMode parse_cia_mode(std::string_view text);

struct TrainConfig {
  // [train]
  double gamma = 0.99;
  double lr = 5e-4;
  double smoothing = 0.99;
  double optim_eps = 1e-5;
  double grad_norm_clip = 10.0;  // <= 0 disables clipping
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 5000;
  std::size_t target_update_interval = 200;
  double epsilon_start = 1.0;
  double epsilon_finish = 0.05;
  std::size_t epsilon_anneal_steps = 50000;
  std::size_t total_env_steps = 200000;
  std::uint64_t seed = 1;
  bool double_q = false;

  // [model]
  mixer::MixerKind mixer = mixer::MixerKind::kQmix;
  std::size_t hidden_dim = 64;
  std::size_t mixer_embed_dim = 32;

  // [cia]
  CiaMode mode = CiaMode::kCia;
  double alpha = 0.02;

  // [run]
  std::size_t eval_interval = 10000;  // env steps between greedy evaluations
  std::size_t eval_episodes = 20;
  std::size_t checkpoint_interval = 50000;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const TrainConfig& config);

}  // namespace cia::rl

namespace cia::config {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Keys are "section.key", e.g. "train.seed", "cia.alpha".
std::vector<std::string> known_keys();
void apply(rl::TrainConfig& config, const std::string& key, const std::string& value);
std::string get(const rl::TrainConfig& config, const std::string& key);

// Parses "[section]" headers and "key = value" lines; '#' and ';' start comments.
std::map<std::string, std::string> parse_ini(std::string_view text);
std::string to_ini(const rl::TrainConfig& config);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
// Variable name for a key: CIA_<SECTION>_<KEY>, upper-cased.
std::string env_var_name(const std::string& key);

// Defaults <- file (if any) <- environment variables <- explicit overrides.
rl::TrainConfig resolve(const std::optional<std::string>& path, const EnvLookup& env,
                        const std::map<std::string, std::string>& overrides);

}  // namespace cia::config
