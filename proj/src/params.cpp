// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cia::nn {
namespace {

constexpr const char* kMagic = "cia-params 1";
constexpr const char* kAccumulatorPrefix = "ms:";

std::uint64_t fnv1a(std::uint64_t hash, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t checksum(const ParamFile& file) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : file.meta) {
    h = fnv1a(h, key.data(), key.size());
    h = fnv1a(h, value.data(), value.size());
  }
  for (const auto& [name, t] : file.tensors) {
    h = fnv1a(h, name.data(), name.size());
    h = fnv1a(h, t.data().data(), t.size() * sizeof(double));
  }
  return h;
}

[[noreturn]] void corrupt(const std::string& path, const std::string& what) {
  throw std::runtime_error("corrupt checkpoint '" + path + "': " + what);
}

bool has_space(const std::string& s) { return s.find_first_of(" \t\r\n") != std::string::npos; }

}  // namespace

void ParamStore::add(const std::string& name, Tensor value) {
  if (params_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  mean_square_.emplace(name, Tensor(value.rows(), value.cols()));
  params_.emplace(name, std::move(value));
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::mean_square(const std::string& name) const {
  auto it = mean_square_.find(name);
  if (it == mean_square_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::mean_square(const std::string& name) {
  auto it = mean_square_.find(name);
  if (it == mean_square_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

bool ParamStore::same_schema(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || !a->second.same_shape(b->second)) return false;
  }
  return true;
}

void init_layer(ParamStore& store, const LayerSpec& layer, Rng& rng) {
  if (layer.fan_in == 0 || layer.fan_out == 0) {
    throw std::invalid_argument("layer '" + layer.name + "' has a zero dimension");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
  Tensor weight(layer.fan_in, layer.fan_out);
  for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = rng.uniform(-bound, bound);
  store.add(layer.name + ".weight", std::move(weight));
  store.add(layer.name + ".bias", Tensor(1, layer.fan_out));
}

ParamStore init_params(std::span<const LayerSpec> layers, Rng& rng) {
  ParamStore store;
  for (const auto& layer : layers) init_layer(store, layer, rng);
  return store;
}

ad::Var bind(ad::Graph& graph, const ParamStore& store, const std::string& name, bool trainable) {
  return trainable ? graph.parameter(name, store.at(name)) : graph.constant(store.at(name));
}

void rmsprop_step(ParamStore& store, const ad::Gradients& grads, const RmsPropConfig& config) {
  for (const auto& [name, grad] : grads) {
    if (!store.contains(name)) {
      throw std::invalid_argument("gradient for unknown parameter '" + name + "'");
    }
  }
  for (const auto& [name, value] : store.tensors()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;  // zero gradient: ms decays, p unchanged
    const Tensor& g = it->second;
    Tensor& p = store.at(name);
    Tensor& ms = store.mean_square(name);
    if (!g.same_shape(p)) {
      throw std::invalid_argument("gradient shape " + shape_string(g) + " does not match '" +
                                  name + "' " + shape_string(p));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      ms[i] = config.smoothing * ms[i] + (1.0 - config.smoothing) * g[i] * g[i];
      p[i] -= config.lr * g[i] / (std::sqrt(ms[i]) + config.eps);
    }
  }
  // Parameters absent from `grads` still see their accumulator decay, as with
  // an explicit zero gradient.
  for (const auto& [name, value] : store.tensors()) {
    if (grads.contains(name)) continue;
    Tensor& ms = store.mean_square(name);
    for (std::size_t i = 0; i < ms.size(); ++i) ms[i] *= config.smoothing;
  }
}

double clip_grad_norm(ad::Gradients& grads, double max_norm) {
  double total = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.data()) total += v * v;
  }
  const double norm = std::sqrt(total);
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) {
    for (auto& [name, g] : grads) {
      for (double& v : g.data()) v *= coef;
    }
  }
  return norm;
}

void sync_target(const ParamStore& online, ParamStore& target) {
  if (!online.same_schema(target)) {
    throw std::invalid_argument("sync_target: online and target schemas differ");
  }
  for (const auto& [name, value] : online.tensors()) target.at(name) = value;
}

void write_param_file(const std::string& path, const ParamFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kMagic << '\n';
  for (const auto& [key, value] : file.meta) {
    if (key.empty() || has_space(key) || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("invalid checkpoint metadata key '" + key + "'");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  char buf[64];
  for (const auto& [name, t] : file.tensors) {
    if (name.empty() || has_space(name)) {
      throw std::invalid_argument("invalid tensor name '" + name + "'");
    }
    out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t c = 0; c < t.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%a", t(r, c));
        out << (c == 0 ? "" : " ") << buf;
      }
      out << '\n';
    }
  }
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum(file)));
  out << "end " << buf << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ParamFile read_param_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) corrupt(path, "bad header");
  ParamFile file;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.rfind("meta ", 0) == 0) {
      const auto space = line.find(' ', 5);
      if (space == std::string::npos) corrupt(path, "malformed meta line");
      file.meta[line.substr(5, space - 5)] = line.substr(space + 1);
    } else if (line.rfind("tensor ", 0) == 0) {
      std::istringstream header(line.substr(7));
      std::string name;
      std::size_t rows = 0;
      std::size_t cols = 0;
      if (!(header >> name >> rows >> cols)) corrupt(path, "malformed tensor header");
      Tensor t(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) corrupt(path, "truncated tensor '" + name + "'");
        const char* cursor = line.c_str();
        for (std::size_t c = 0; c < cols; ++c) {
          char* next = nullptr;
          t(r, c) = std::strtod(cursor, &next);
          if (next == cursor) corrupt(path, "bad value in tensor '" + name + "'");
          cursor = next;
        }
      }
      if (!file.tensors.emplace(name, std::move(t)).second) {
        corrupt(path, "duplicate tensor '" + name + "'");
      }
    } else if (line.rfind("end ", 0) == 0) {
      const std::uint64_t stored = std::strtoull(line.c_str() + 4, nullptr, 16);
      if (stored != checksum(file)) corrupt(path, "checksum mismatch");
      ended = true;
      break;
    } else {
      corrupt(path, "unexpected line");
    }
  }
  if (!ended) corrupt(path, "missing end marker");
  return file;
}

void export_store(const ParamStore& store, ParamFile& file, const std::string& prefix,
                  bool with_accumulators) {
  for (const auto& [name, value] : store.tensors()) {
    file.tensors[prefix + name] = value;
    if (with_accumulators) {
      file.tensors[kAccumulatorPrefix + prefix + name] = store.mean_square(name);
    }
  }
}

ParamStore import_store(const ParamFile& file, const std::string& prefix, bool with_accumulators) {
  ParamStore store;
  for (const auto& [name, value] : file.tensors) {
    if (name.rfind(prefix, 0) != 0 || name.rfind(kAccumulatorPrefix, 0) == 0) continue;
    const std::string local = name.substr(prefix.size());
    store.add(local, value);
    if (with_accumulators) {
      auto it = file.tensors.find(kAccumulatorPrefix + name);
      if (it == file.tensors.end() || !it->second.same_shape(value)) {
        throw std::runtime_error("checkpoint lacks optimizer state for '" + name + "'");
      }
      store.mean_square(local) = it->second;
    }
  }
  return store;
}

}  // namespace cia::nn
