// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cia/autodiff.hpp"
#include "cia/rng.hpp"
#include "cia/tensor.hpp"

namespace cia::nn {

// Named learnable tensors plus their RMSprop mean-square accumulators.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return params_.contains(name); }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& mean_square(const std::string& name) const;
  Tensor& mean_square(const std::string& name);

  const std::map<std::string, Tensor>& tensors() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  // Same names with the same shapes.
  bool same_schema(const ParamStore& other) const;

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> mean_square_;
};

// A dense layer `name` maps fan_in -> fan_out. Its tensors are
// `name.weight` (fan_in x fan_out) and `name.bias` (1 x fan_out).
struct LayerSpec {
  std::string name;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
void init_layer(ParamStore& store, const LayerSpec& layer, Rng& rng);
ParamStore init_params(std::span<const LayerSpec> layers, Rng& rng);

// Leaf for `name`: a gradient-carrying parameter when trainable, otherwise a
// constant (target networks, evaluation).
ad::Var bind(ad::Graph& graph, const ParamStore& store, const std::string& name, bool trainable);

struct RmsPropConfig {
  double lr = 5e-4;
  double smoothing = 0.99;
  double eps = 1e-5;
};

// ms <- a*ms + (1-a)*g^2 ; p <- p - lr*g/(sqrt(ms)+eps). Parameters without a
// gradient entry are treated as having a zero gradient.
void rmsprop_step(ParamStore& store, const ad::Gradients& grads, const RmsPropConfig& config);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ad::Gradients& grads, double max_norm);

// Deep-copies parameter values online -> target. Schemas must match.
void sync_target(const ParamStore& online, ParamStore& target);

// Self-describing text checkpoint: metadata lines plus named tensors whose
// values are written as hexadecimal floats, so reading restores every bit.
struct ParamFile {
  std::map<std::string, std::string> meta;
  std::map<std::string, Tensor> tensors;
};

void write_param_file(const std::string& path, const ParamFile& file);
ParamFile read_param_file(const std::string& path);

// Copies parameters (and, with `with_accumulators`, "ms:"-prefixed RMSprop
// state) between a store and a file.
void export_store(const ParamStore& store, ParamFile& file, const std::string& prefix,
                  bool with_accumulators);
ParamStore import_store(const ParamFile& file, const std::string& prefix, bool with_accumulators);

}  // namespace cia::nn
