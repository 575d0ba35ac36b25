// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cia/contrastive.hpp"

#ifndef CIA_CODE_VERSION
#define CIA_CODE_VERSION "unknown"
#endif

namespace cia::rl {

namespace fs = std::filesystem;

double epsilon_schedule(std::size_t env_steps, const TrainConfig& config) {
  if (config.epsilon_anneal_steps == 0 || env_steps >= config.epsilon_anneal_steps) {
    return config.epsilon_finish;
  }
  const double frac = static_cast<double>(env_steps) / static_cast<double>(config.epsilon_anneal_steps);
  return config.epsilon_start + frac * (config.epsilon_finish - config.epsilon_start);
}

Networks make_networks(const env::Environment& env, const TrainConfig& config) {
  nn::AgentNetDims agent{env.obs_dim(), env.n_actions(), env.n_agents(), config.hidden_dim};
  mixer::MixerDims mix{env.n_agents(), env.state_dim(), config.mixer_embed_dim};
  return Networks{nn::AgentNet(agent), mixer::Mixer(config.mixer, mix), env.episode_limit()};
}

// ---------------------------------------------------------------------------
// Execution

AgentPolicy::AgentPolicy(const Networks& nets, const nn::ParamStore& store, double epsilon)
    : nets_(nets), store_(store), epsilon_(epsilon) {
  begin_episode();
}

void AgentPolicy::begin_episode() {
  const auto& d = nets_.agent.dims();
  hidden_ = Tensor(d.n_agents, d.hidden);
  last_.assign(d.n_agents, -1);
}

std::vector<int> AgentPolicy::act(const env::Environment& env, Rng& rng) {
  const auto& d = nets_.agent.dims();
  std::vector<double> obs;
  obs.reserve(d.n_agents * d.obs_dim);
  for (std::size_t k = 0; k < d.n_agents; ++k) {
    const auto o = env.observation(k);
    obs.insert(obs.end(), o.begin(), o.end());
  }
  std::vector<double> inputs;
  inputs.reserve(d.n_agents * d.input_dim());
  nets_.agent.append_inputs(obs, last_, inputs);

  ad::Graph g;
  const auto bound = nets_.agent.bind(g, store_, false);
  const auto out = nets_.agent.forward(
      bound, g.constant(Tensor(d.n_agents, d.input_dim(), std::move(inputs))), g.constant(hidden_));
  hidden_ = out.hidden.value();
  values_ = out.q.value();

  std::vector<int> actions(d.n_agents);
  for (std::size_t k = 0; k < d.n_agents; ++k) {
    if (rng.bernoulli(epsilon_)) {
      actions[k] = static_cast<int>(rng.below(d.n_actions));
    } else {
      std::size_t best = 0;
      for (std::size_t a = 1; a < d.n_actions; ++a) {
        if (values_(k, a) > values_(k, best)) best = a;
      }
      actions[k] = static_cast<int>(best);
    }
  }
  last_ = actions;
  return actions;
}

std::vector<int> OraclePolicy::act(const env::Environment& env, Rng&) {
  const auto* game = dynamic_cast<const env::TurnGame*>(&env);
  if (game == nullptr) throw std::invalid_argument("the oracle policy only plays the Turn game");
  const auto a = env::oracle_policy(game->turn_state());
  return {a.begin(), a.end()};
}

Episode rollout(env::Environment& env, Policy& policy, std::uint64_t env_seed, Rng& rng) {
  policy.begin_episode();
  env.reset(env_seed);
  Episode e;
  e.n_agents = env.n_agents();
  e.obs_dim = env.obs_dim();
  e.state_dim = env.state_dim();
  const std::size_t limit = env.episode_limit();
  e.obs.reserve((limit + 1) * e.n_agents * e.obs_dim);
  e.states.reserve((limit + 1) * e.state_dim);

  auto record_view = [&](std::span<const std::vector<double>> per_agent,
                         std::span<const double> state) {
    for (const auto& o : per_agent) e.obs.insert(e.obs.end(), o.begin(), o.end());
    e.states.insert(e.states.end(), state.begin(), state.end());
    e.turn_holder.push_back(env.turn_holder());
  };
  {
    std::vector<std::vector<double>> obs;
    for (std::size_t k = 0; k < e.n_agents; ++k) obs.push_back(env.observation(k));
    record_view(obs, env.state());
  }
  while (e.length < limit) {
    const auto actions = policy.act(env, rng);
    const auto result = env.step(actions);
    e.actions.insert(e.actions.end(), actions.begin(), actions.end());
    e.rewards.push_back(result.reward);
    ++e.length;
    record_view(result.observations, result.state);
    if (result.done) {
      e.terminated = true;
      break;
    }
  }
  return e;
}

EvalResult evaluate(env::Environment& env, Policy& policy, std::size_t n, std::uint64_t seed,
                    double gamma) {
  if (n == 0) throw std::invalid_argument("evaluation needs at least one episode");
  EvalResult r;
  double sum = 0.0;
  double disc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 2 * i + 1));
    Episode e = rollout(env, policy, derive_seed(seed, 2 * i), rng);
    r.returns.push_back(e.total_reward());
    sum += r.returns.back();
    disc += e.discounted_return(gamma);
    r.episodes.push_back(std::move(e));
  }
  r.mean_return = sum / static_cast<double>(n);
  r.mean_discounted_return = disc / static_cast<double>(n);
  double var = 0.0;
  for (double x : r.returns) var += (x - r.mean_return) * (x - r.mean_return);
  r.std_return = std::sqrt(var / static_cast<double>(n));
  return r;
}

// ---------------------------------------------------------------------------
// Learning

TdTerms td_loss(ad::Graph& graph, const Networks& nets, const BoundNetworks& online,
                const nn::ParamStore& target, const EpisodeBatch& batch, const TdOptions& options) {
  if (batch.horizon != nets.horizon) {
    throw std::invalid_argument("batch horizon " + std::to_string(batch.horizon) +
                                " differs from network horizon " + std::to_string(nets.horizon));
  }
  TdTerms terms;
  terms.mask = step_column(batch, batch.mask);
  double valid = 0.0;
  for (double m : batch.mask) valid += m;
  if (valid == 0.0) throw std::invalid_argument("td_loss: batch has no valid steps");

  const auto q_steps = unroll_agents(graph, nets.agent, online.agent, batch);
  terms.chosen = chosen_values(graph, q_steps, batch);
  terms.states = graph.constant(step_states(batch, 0));
  ad::Var q_in = options.permutation ? mixer::permute_agents(terms.chosen, *options.permutation)
                                     : terms.chosen;
  ad::Var q_tot = nets.mixer.mix(online.mixer, q_in, terms.states);

  Tensor next_tot;
  {
    ad::Graph tg;
    const auto tb = bind(tg, nets, target, false);
    const auto tq = unroll_agents(tg, nets.agent, tb.agent, batch);
    const Tensor next = options.double_q ? greedy_values(tq, q_steps, batch, 1)
                                         : greedy_values(tq, {}, batch, 1);
    ad::Var next_in = tg.constant(next);
    if (options.permutation) next_in = mixer::permute_agents(next_in, *options.permutation);
    next_tot = nets.mixer.mix(tb.mixer, next_in, tg.constant(step_states(batch, 1))).value();
  }
  terms.targets = Tensor(batch.steps(), 1);
  for (std::size_t i = 0; i < batch.steps(); ++i) {
    terms.targets[i] =
        batch.rewards[i] + options.gamma * (1.0 - batch.terminated[i]) * next_tot[i];
  }
  ad::Var err = ad::square(q_tot - graph.constant(terms.targets)) * graph.constant(terms.mask);
  terms.loss = ad::scale(ad::sum(err), 1.0 / valid);
  return terms;
}

Learner::Learner(const TrainConfig& config, Networks nets, Rng& init_rng)
    : config_(config), nets_(std::move(nets)) {
  validate(config_);
  online_ = nets_.init(init_rng);
  target_ = online_;
}

std::optional<TrainStats> Learner::train_step(const ReplayBuffer& buffer, Rng& rng) {
  if (!buffer.can_sample(config_.batch_size)) return std::nullopt;
  const auto sample = buffer.sample(config_.batch_size, rng);
  return train_on(EpisodeBatch::from_episodes(sample, nets_.horizon), rng);
}

TrainStats Learner::train_on(const EpisodeBatch& batch, Rng& rng) {
  ad::Graph g;
  const auto bound = bind(g, nets_, online_, true);
  ad::Var identities = nn::bind(g, online_, kIdentityParam, true);

  std::optional<mixer::Permutation> perm;
  if (config_.mode == CiaMode::kRandomShuffle) perm = mixer::sample_permutation(nets_.n_agents(), rng);
  TdOptions opt{config_.gamma, config_.double_q, perm ? &*perm : nullptr};
  TdTerms td = td_loss(g, nets_, bound, target_, batch, opt);

  TrainStats s;
  s.l_td = td.loss.value().item();
  ad::Var total = td.loss;
  if (config_.mode == CiaMode::kCia || config_.mode == CiaMode::kCc) {
    const auto kind = config_.mode == CiaMode::kCia ? contrastive::ContrastKind::kIdentityWise
                                                    : contrastive::ContrastKind::kCreditClassification;
    ad::Var credits = nets_.mixer.credits(bound.mixer, td.chosen, td.states);
    ad::Var cl = contrastive::batch_contrastive_loss(credits, td.mask, batch.batch, batch.horizon,
                                                     identities, kind);
    total = contrastive::total_loss(td.loss, cl, config_.alpha);
    s.l_cl = cl.value().item();
    s.mi_lower_bound = contrastive::mi_lower_bound(*s.l_cl, nets_.n_agents());
  }
  s.l_all = total.value().item();

  auto grads = g.backward(total);
  s.grad_norm = config_.grad_norm_clip > 0.0 ? nn::clip_grad_norm(grads, config_.grad_norm_clip)
                                             : nn::clip_grad_norm(grads, HUGE_VAL);
  nn::rmsprop_step(online_, grads, {config_.lr, config_.smoothing, config_.optim_eps});
  ++train_steps_;
  if (train_steps_ % config_.target_update_interval == 0) {
    nn::sync_target(online_, target_);
    s.target_synced = true;
  }
  s.train_step = train_steps_;
  return s;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

const char* MetricsWriter::header() {
  return "kind,train_step,env_steps,episode,epsilon,l_td,l_cl,l_all,mi_lower_bound,grad_norm,"
         "return,discounted_return,eval_return_mean,eval_return_std";
}

MetricsWriter::MetricsWriter(const fs::path& path, std::optional<std::uintmax_t> resume_bytes) {
  if (resume_bytes) {
    if (!fs::exists(path) || fs::file_size(path) < *resume_bytes) {
      throw std::runtime_error("metrics file " + path.string() + " is shorter than its checkpoint");
    }
    fs::resize_file(path, *resume_bytes);
    out_.open(path, std::ios::binary | std::ios::app);
  } else {
    out_.open(path, std::ios::binary | std::ios::trunc);
    out_ << header() << '\n';
  }
  if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
}

void MetricsWriter::train(const TrainStats& s, std::size_t env_steps, std::size_t episode,
                          double epsilon) {
  out_ << "train," << s.train_step << ',' << env_steps << ',' << episode << ',' << num(epsilon)
       << ',' << num(s.l_td) << ',' << opt_num(s.l_cl) << ',' << num(s.l_all) << ','
       << opt_num(s.mi_lower_bound) << ',' << num(s.grad_norm) << ",,,,\n";
}

void MetricsWriter::episode(std::size_t train_step, std::size_t env_steps, std::size_t episode,
                            double epsilon, double ret, double discounted) {
  out_ << "episode," << train_step << ',' << env_steps << ',' << episode << ',' << num(epsilon)
       << ",,,,,," << num(ret) << ',' << num(discounted) << ",,\n";
}

void MetricsWriter::eval(std::size_t train_step, std::size_t env_steps, std::size_t episode,
                         const EvalResult& r, bool final) {
  out_ << (final ? "final," : "eval,") << train_step << ',' << env_steps << ',' << episode << ",0,,,,,,,"
       << num(r.mean_discounted_return) << ',' << num(r.mean_return) << ',' << num(r.std_return)
       << '\n';
}

std::uintmax_t MetricsWriter::bytes() {
  out_.flush();
  return static_cast<std::uintmax_t>(out_.tellp());
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string code_version() { return CIA_CODE_VERSION; }

void save_model(const fs::path& path, const TrainConfig& config, const nn::ParamStore& store) {
  nn::ParamFile file;
  file.meta["format"] = "cia-model";
  file.meta["code_version"] = code_version();
  for (const auto& key : config::known_keys()) file.meta["config." + key] = config::get(config, key);
  nn::export_store(store, file, "", false);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  nn::write_param_file(path.string(), file);
}

LoadedModel load_model(const fs::path& path, const env::Environment& env) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  const auto file = nn::read_param_file(path.string());
  auto fmt = file.meta.find("format");
  if (fmt == file.meta.end() || fmt->second != "cia-model") {
    throw std::runtime_error("not a model checkpoint: " + path.string());
  }
  TrainConfig config;
  for (const auto& [key, value] : file.meta) {
    if (key.rfind("config.", 0) == 0) config::apply(config, key.substr(7), value);
  }
  Networks nets = make_networks(env, config);
  nn::ParamStore store = nn::import_store(file, "", false);
  Rng probe(0);
  if (!store.same_schema(nets.init(probe))) {
    throw std::runtime_error("checkpoint " + path.string() +
                             " does not match the environment's network schema");
  }
  return {config, std::move(nets), std::move(store)};
}

namespace {

constexpr char kReplayMagic[8] = {'C', 'I', 'A', 'R', 'P', 'L', 'Y', '1'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated replay snapshot");
  return v;
}
template <class T>
std::vector<T> get_vec(std::istream& in, std::uint64_t expected) {
  const auto n = get<std::uint64_t>(in);
  if (n != expected) throw std::runtime_error("corrupt replay snapshot");
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("truncated replay snapshot");
  return v;
}

}  // namespace

void save_replay(const fs::path& path, const ReplayBuffer& buffer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kReplayMagic, sizeof(kReplayMagic));
  put<std::uint64_t>(out, buffer.capacity());
  put<std::uint64_t>(out, buffer.head());
  put<std::uint64_t>(out, buffer.slots().size());
  for (const Episode& e : buffer.slots()) {
    put<std::uint64_t>(out, e.n_agents);
    put<std::uint64_t>(out, e.obs_dim);
    put<std::uint64_t>(out, e.state_dim);
    put<std::uint64_t>(out, e.length);
    put<std::uint8_t>(out, e.terminated ? 1 : 0);
    put_vec(out, e.obs);
    put_vec(out, e.states);
    put_vec(out, e.actions);
    put_vec(out, e.rewards);
    put_vec(out, e.turn_holder);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ReplayBuffer load_replay(const fs::path& path, std::size_t capacity) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof(kReplayMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kReplayMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a replay snapshot: " + path.string());
  }
  if (get<std::uint64_t>(in) != capacity) throw std::runtime_error("replay capacity mismatch");
  const auto head = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  std::vector<Episode> slots(count);
  for (Episode& e : slots) {
    e.n_agents = get<std::uint64_t>(in);
    e.obs_dim = get<std::uint64_t>(in);
    e.state_dim = get<std::uint64_t>(in);
    e.length = get<std::uint64_t>(in);
    e.terminated = get<std::uint8_t>(in) != 0;
    e.obs = get_vec<double>(in, (e.length + 1) * e.n_agents * e.obs_dim);
    e.states = get_vec<double>(in, (e.length + 1) * e.state_dim);
    e.actions = get_vec<int>(in, e.length * e.n_agents);
    e.rewards = get_vec<double>(in, e.length);
    e.turn_holder = get_vec<int>(in, e.length + 1);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("corrupt replay snapshot");
  ReplayBuffer buffer(capacity);
  buffer.restore(std::move(slots), head);
  return buffer;
}

// ---------------------------------------------------------------------------
// Run loop

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kExploreStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr std::uint64_t kEpisodeStreamBase = 1'000'000;

struct LoopState {
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  std::size_t next_eval = 0;
  std::size_t next_checkpoint = 0;
};

std::size_t meta_size(const nn::ParamFile& f, const std::string& key) {
  auto it = f.meta.find(key);
  if (it == f.meta.end()) throw std::runtime_error("checkpoint lacks '" + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_state(const RunPaths& paths, const Learner& learner, const ReplayBuffer& buffer,
                const Rng& explore, const Rng& train_rng, const LoopState& loop,
                std::uintmax_t metrics_bytes) {
  const fs::path tmp = paths.latest().string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  nn::ParamFile f;
  f.meta["format"] = "cia-run-state";
  f.meta["code_version"] = code_version();
  f.meta["env_steps"] = std::to_string(loop.env_steps);
  f.meta["episodes"] = std::to_string(loop.episodes);
  f.meta["next_eval"] = std::to_string(loop.next_eval);
  f.meta["next_checkpoint"] = std::to_string(loop.next_checkpoint);
  f.meta["train_steps"] = std::to_string(learner.train_steps());
  f.meta["metrics_bytes"] = std::to_string(metrics_bytes);
  f.meta["explore_rng"] = explore.serialize();
  f.meta["train_rng"] = train_rng.serialize();
  nn::export_store(learner.online(), f, "online:", true);
  nn::export_store(learner.target(), f, "target:", false);
  nn::write_param_file((tmp / "trainer.params").string(), f);
  save_replay(tmp / "replay.bin", buffer);
  fs::remove_all(paths.latest());
  fs::rename(tmp, paths.latest());
}

nlohmann::json manifest_json(const TrainConfig& config, const RunSummary& s) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& key : config::known_keys()) cfg[key] = config::get(config, key);
  return {
      {"code_version", code_version()},
      {"seed", config.seed},
      {"config", cfg},
      {"config_path", "config.ini"},
      {"metrics_path", "metrics.csv"},
      {"checkpoints", {{"latest", "checkpoints/latest"}, {"final", "final/model.params"}}},
      {"env_steps", s.env_steps},
      {"episodes", s.episodes},
      {"train_steps", s.train_steps},
      {"final_eval",
       {{"episodes", s.final_eval.returns.size()},
        {"mean_return", s.final_eval.mean_return},
        {"std_return", s.final_eval.std_return}}},
  };
}

}  // namespace

RunSummary train(const TrainConfig& config, const EnvFactory& make_env, const RunPaths& paths,
                 std::optional<std::size_t> stop_after_env_steps) {
  validate(config);
  auto env = make_env();
  fs::create_directories(paths.root / "checkpoints");

  Rng init_rng(derive_seed(config.seed, kInitStream));
  Learner learner(config, make_networks(*env, config), init_rng);
  ReplayBuffer buffer(config.buffer_capacity);
  Rng explore(derive_seed(config.seed, kExploreStream));
  Rng train_rng(derive_seed(config.seed, kTrainStream));
  LoopState loop;
  loop.next_eval = config.eval_interval;
  loop.next_checkpoint = config.checkpoint_interval;

  RunSummary summary;
  std::optional<std::uintmax_t> resume_bytes;
  const std::string ini = config::to_ini(config);
  const fs::path state_file = paths.latest() / "trainer.params";
  if (fs::exists(state_file)) {
    if (!fs::exists(paths.config()) || read_text(paths.config()) != ini) {
      throw std::runtime_error("run directory " + paths.root.string() +
                               " holds a checkpoint from a different config");
    }
    const auto f = nn::read_param_file(state_file.string());
    learner.online() = nn::import_store(f, "online:", true);
    learner.target() = nn::import_store(f, "target:", false);
    learner.set_train_steps(meta_size(f, "train_steps"));
    loop.env_steps = meta_size(f, "env_steps");
    loop.episodes = meta_size(f, "episodes");
    loop.next_eval = meta_size(f, "next_eval");
    loop.next_checkpoint = meta_size(f, "next_checkpoint");
    explore.deserialize(f.meta.at("explore_rng"));
    train_rng.deserialize(f.meta.at("train_rng"));
    resume_bytes = meta_size(f, "metrics_bytes");
    buffer = load_replay(paths.latest() / "replay.bin", config.buffer_capacity);
    summary.resumed = true;
  } else {
    write_text(paths.config(), ini);
  }

  MetricsWriter metrics(paths.metrics(), resume_bytes);
  AgentPolicy policy(learner.networks(), learner.online(), 1.0);
  AgentPolicy greedy(learner.networks(), learner.online(), 0.0);
  const std::uint64_t eval_seed = derive_seed(config.seed, kEvalStream);

  while (loop.env_steps < config.total_env_steps) {
    const double eps = epsilon_schedule(loop.env_steps, config);
    policy.set_epsilon(eps);
    Episode ep = rollout(*env, policy, derive_seed(config.seed, kEpisodeStreamBase + loop.episodes),
                         explore);
    loop.env_steps += ep.length;
    ++loop.episodes;
    metrics.episode(learner.train_steps(), loop.env_steps, loop.episodes, eps, ep.total_reward(),
                    ep.discounted_return(config.gamma));
    buffer.push(std::move(ep));
    if (auto s = learner.train_step(buffer, train_rng)) {
      metrics.train(*s, loop.env_steps, loop.episodes, eps);
    }
    if (config.eval_interval > 0 && loop.env_steps >= loop.next_eval) {
      metrics.eval(learner.train_steps(), loop.env_steps, loop.episodes,
                   evaluate(*env, greedy, config.eval_episodes, eval_seed, config.gamma));
      while (loop.next_eval <= loop.env_steps) loop.next_eval += config.eval_interval;
    }
    const bool stop = stop_after_env_steps && loop.env_steps >= *stop_after_env_steps &&
                      loop.env_steps < config.total_env_steps;
    if ((config.checkpoint_interval > 0 && loop.env_steps >= loop.next_checkpoint) || stop) {
      if (config.checkpoint_interval > 0) {
        while (loop.next_checkpoint <= loop.env_steps) loop.next_checkpoint += config.checkpoint_interval;
      }
      save_state(paths, learner, buffer, explore, train_rng, loop, metrics.bytes());
    }
    if (stop) {
      summary.env_steps = loop.env_steps;
      summary.episodes = loop.episodes;
      summary.train_steps = learner.train_steps();
      return summary;
    }
  }

  summary.env_steps = loop.env_steps;
  summary.episodes = loop.episodes;
  summary.train_steps = learner.train_steps();
  summary.final_eval = evaluate(*env, greedy, config.eval_episodes, eval_seed, config.gamma);
  metrics.eval(learner.train_steps(), loop.env_steps, loop.episodes, summary.final_eval, true);
  metrics.bytes();
  save_model(paths.final_model(), config, learner.online());
  write_text(paths.manifest(), manifest_json(config, summary).dump(2) + "\n");
  return summary;
}

}  // namespace cia::rl
