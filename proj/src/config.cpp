// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cia::rl {

std::string_view to_string(CiaMode mode) {
  switch (mode) {
    case CiaMode::kOff: return "off";
    case CiaMode::kCia: return "cia";
    case CiaMode::kCc: return "cc";
    case CiaMode::kRandomShuffle: return "rs";
  }
  return "off";
}

CiaMode parse_cia_mode(std::string_view text) {
  if (text == "off") return CiaMode::kOff;
  if (text == "cia") return CiaMode::kCia;
  if (text == "cc") return CiaMode::kCc;
  if (text == "rs" || text == "random-shuffle") return CiaMode::kRandomShuffle;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected off, cia, cc or rs)");
}

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) fail("train.gamma must lie in [0, 1)");
  if (!(c.lr > 0.0)) fail("train.lr must be positive");
  if (!(c.smoothing >= 0.0 && c.smoothing < 1.0)) fail("train.smoothing must lie in [0, 1)");
  if (!(c.optim_eps > 0.0)) fail("train.optim_eps must be positive");
  if (c.batch_size == 0) fail("train.batch_size must be positive");
  if (c.buffer_capacity < c.batch_size) fail("train.buffer_capacity must be >= train.batch_size");
  if (c.target_update_interval == 0) fail("train.target_update_interval must be positive");
  if (!(c.epsilon_finish >= 0.0 && c.epsilon_finish <= c.epsilon_start && c.epsilon_start <= 1.0)) {
    fail("epsilon schedule needs 0 <= epsilon_finish <= epsilon_start <= 1");
  }
  if (c.hidden_dim == 0 || c.mixer_embed_dim == 0) fail("model widths must be positive");
  if (!(c.alpha >= 0.0)) fail("cia.alpha must be non-negative");
  if (c.eval_episodes == 0) fail("run.eval_episodes must be positive");
}

}  // namespace cia::rl

namespace cia::config {
namespace {

struct Field {
  const char* key;
  std::function<void(rl::TrainConfig&, const std::string&)> set;
  std::function<std::string(const rl::TrainConfig&)> get;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key, "invalid number '" + text + "' for key " + key);
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key, "invalid non-negative integer '" + text + "' for key " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "invalid boolean '" + text + "' for key " + key);
}

template <class T>
Field real_field(const char* key, T rl::TrainConfig::*member) {
  return {key, [key, member](rl::TrainConfig& c, const std::string& v) { c.*member = parse_double(key, v); },
          [member](const rl::TrainConfig& c) { return format_double(c.*member); }};
}

template <class T>
Field uint_field(const char* key, T rl::TrainConfig::*member) {
  return {key,
          [key, member](rl::TrainConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_uint(key, v));
          },
          [member](const rl::TrainConfig& c) { return std::to_string(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = rl::TrainConfig;
    std::vector<Field> f = {
        real_field("train.gamma", &C::gamma),
        real_field("train.lr", &C::lr),
        real_field("train.smoothing", &C::smoothing),
        real_field("train.optim_eps", &C::optim_eps),
        real_field("train.grad_norm_clip", &C::grad_norm_clip),
        uint_field("train.batch_size", &C::batch_size),
        uint_field("train.buffer_capacity", &C::buffer_capacity),
        uint_field("train.target_update_interval", &C::target_update_interval),
        real_field("train.epsilon_start", &C::epsilon_start),
        real_field("train.epsilon_finish", &C::epsilon_finish),
        uint_field("train.epsilon_anneal_steps", &C::epsilon_anneal_steps),
        uint_field("train.total_env_steps", &C::total_env_steps),
        uint_field("train.seed", &C::seed),
        {"train.double_q",
         [](C& c, const std::string& v) { c.double_q = parse_bool("train.double_q", v); },
         [](const C& c) { return std::string(c.double_q ? "true" : "false"); }},
        {"model.mixer",
         [](C& c, const std::string& v) {
           try {
             c.mixer = mixer::parse_mixer_kind(v);
           } catch (const std::invalid_argument& e) {
             throw ConfigError("model.mixer", e.what());
           }
         },
         [](const C& c) { return std::string(mixer::to_string(c.mixer)); }},
        uint_field("model.hidden_dim", &C::hidden_dim),
        uint_field("model.mixer_embed_dim", &C::mixer_embed_dim),
        {"cia.mode",
         [](C& c, const std::string& v) {
           try {
             c.mode = rl::parse_cia_mode(v);
           } catch (const std::invalid_argument& e) {
             throw ConfigError("cia.mode", e.what());
           }
         },
         [](const C& c) { return std::string(rl::to_string(c.mode)); }},
        real_field("cia.alpha", &C::alpha),
        uint_field("run.eval_interval", &C::eval_interval),
        uint_field("run.eval_episodes", &C::eval_episodes),
        uint_field("run.checkpoint_interval", &C::checkpoint_interval),
    };
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError(key, "unknown config key '" + key + "'");
}

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

void apply(rl::TrainConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, value);
}

std::string get(const rl::TrainConfig& config, const std::string& key) {
  return field(key).get(config);
}

std::map<std::string, std::string> parse_ini(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("", "malformed section header on line " + std::to_string(line_no));
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "expected 'key = value' on line " + std::to_string(line_no));
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    out[full] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

std::string to_ini(const rl::TrainConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return out.str();
}

std::string env_var_name(const std::string& key) {
  std::string name = "CIA_" + key;
  for (char& ch : name) {
    ch = ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return name;
}

rl::TrainConfig resolve(const std::optional<std::string>& path, const EnvLookup& env,
                        const std::map<std::string, std::string>& overrides) {
  rl::TrainConfig config;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("", "cannot read config file '" + *path + "'");
    std::stringstream text;
    text << in.rdbuf();
    for (const auto& [key, value] : parse_ini(text.str())) apply(config, key, value);
  }
  if (env) {
    for (const auto& f : fields()) {
      if (auto v = env(env_var_name(f.key))) f.set(config, *v);
    }
  }
  for (const auto& [key, value] : overrides) apply(config, key, value);
  try {
    rl::validate(config);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg);
  }
  return config;
}

}  // namespace cia::config
