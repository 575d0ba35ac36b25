// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Exits nonzero on internal errors, and on any failed criterion with
// --strict. Trained runs live under --work and are reused (or resumed) when
// present.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cia/contrastive.hpp"
#include "cia/diagnostics.hpp"
#include "cia/mixer.hpp"
#include "cia/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using cia::Rng;
using cia::Tensor;

constexpr double kGradTolerance = 1e-5;
constexpr double kGradSeconds = 10.0;
constexpr double kCreditTolerance = 1e-5;
constexpr double kAnchorTolerance = 1e-12;
constexpr double kOracleFraction = 0.7;
constexpr double kAlternationCia = 0.7;
constexpr double kAlternationOffLo = 0.35;
constexpr double kAlternationOffHi = 0.65;
constexpr std::size_t kOracleEpisodes = 1000;
constexpr std::size_t kReturnEpisodes = 100;
constexpr std::size_t kAlternationEpisodes = 20;
constexpr std::size_t kKlEpisodes = 10;
constexpr std::uint64_t kAnalysisSeed = 2026;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
  verdicts.push_back({id, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

void randomize_biases(cia::nn::ParamStore& store, Rng& rng) {
  for (const auto& [name, t] : store.tensors()) {
    if (name.ends_with(".bias")) store.at(name) = random_tensor(t.rows(), t.cols(), rng);
  }
}

// Max relative discrepancy between backward() and central differences over
// every entry of every parameter in `store`.
double store_grad_error(const cia::nn::ParamStore& store,
                        const std::function<cia::ad::Var(cia::ad::Graph&, const cia::nn::ParamStore&, bool)>& loss) {
  constexpr double h = 1e-6;
  cia::ad::Gradients analytic;
  {
    cia::ad::Graph g;
    analytic = g.backward(loss(g, store, true));
  }
  auto value = [&](const cia::nn::ParamStore& s) {
    cia::ad::Graph g;
    return loss(g, s, false).value().item();
  };
  double worst = 0.0;
  cia::nn::ParamStore probe = store;
  for (const auto& [name, t] : store.tensors()) {
    const Tensor& a = analytic.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      probe.at(name)[i] = t[i] + h;
      const double up = value(probe);
      probe.at(name)[i] = t[i] - h;
      const double down = value(probe);
      probe.at(name)[i] = t[i];
      const double n = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(a[i] - n) / std::max({1.0, std::abs(a[i]), std::abs(n)}));
    }
  }
  return worst;
}

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  double agent_err = 0.0, mixer_err = 0.0, nce_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(10000 + i);
    const cia::nn::AgentNet net({5, 3, 2, 4});
    cia::nn::ParamStore store;
    net.init(store, rng);
    randomize_biases(store, rng);
    const Tensor in0 = random_tensor(2, 10, rng), in1 = random_tensor(2, 10, rng);
    const Tensor w = random_tensor(2, 3, rng);
    agent_err = std::max(agent_err, store_grad_error(store, [&](cia::ad::Graph& g, const cia::nn::ParamStore& s, bool train) {
      const auto b = net.bind(g, s, train);
      const auto o0 = net.forward(b, g.constant(in0), g.constant(Tensor(2, 4)));
      const auto o1 = net.forward(b, g.constant(in1), o0.hidden);
      return cia::ad::sum(cia::ad::square(o1.q) * g.constant(w) + o0.q);
    }));
  }
  for (int i = 0; i < 100; ++i) {
    Rng rng(20000 + i);
    const cia::mixer::Mixer mixer(cia::mixer::MixerKind::kQmix, {3, 4, 5});
    cia::nn::ParamStore store;
    mixer.init(store, rng);
    randomize_biases(store, rng);
    const Tensor q = random_tensor(3, 3, rng, -2, 2), s = random_tensor(3, 4, rng);
    const Tensor w = random_tensor(3, 1, rng);
    mixer_err = std::max(mixer_err, store_grad_error(store, [&](cia::ad::Graph& g, const cia::nn::ParamStore& p, bool train) {
      const auto b = mixer.bind(g, p, train);
      return cia::ad::sum(cia::ad::square(mixer.mix(b, g.constant(q), g.constant(s))) * g.constant(w));
    }));
    cia::ad::ScalarFunction wrt_q = [&](cia::ad::Graph& g, cia::ad::Var x) {
      return cia::ad::sum(cia::ad::square(mixer.mix(mixer.bind(g, store, false), x, g.constant(s))) * g.constant(w));
    };
    mixer_err = std::max(mixer_err, cia::ad::grad_check(wrt_q, q, 1e-6));
  }
  for (int i = 0; i < 100; ++i) {
    Rng rng(30000 + i);
    const std::size_t k = 2 + rng.below(3), n = 3 + rng.below(4), b = 1 + rng.below(3);
    const Tensor credits = random_tensor(b * n, k, rng);
    const Tensor mask(b * n, 1, 1.0);
    const Tensor w = random_tensor(k, n, rng);
    cia::ad::ScalarFunction f = [&](cia::ad::Graph& g, cia::ad::Var x) {
      return cia::contrastive::batch_contrastive_loss(x, mask, b, n, g.constant(w),
                                                      cia::contrastive::ContrastKind::kIdentityWise);
    };
    cia::ad::ScalarFunction fw = [&](cia::ad::Graph& g, cia::ad::Var x) {
      return cia::contrastive::batch_contrastive_loss(g.constant(credits), mask, b, n, x,
                                                      cia::contrastive::ContrastKind::kIdentityWise);
    };
    nce_err = std::max({nce_err, cia::ad::grad_check(f, credits, 1e-6), cia::ad::grad_check(fw, w, 1e-6)});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = agent_err < kGradTolerance && mixer_err < kGradTolerance && nce_err < kGradTolerance &&
                    secs < kGradSeconds;
  report(1, pass, "max rel err agent=" + fmt(agent_err) + " qmix=" + fmt(mixer_err) + " infonce=" +
                      fmt(nce_err) + " (< 1e-5), " + fmt(secs, 3) + " s (< 10 s)");
}

void criteria_2_3() {
  constexpr double h = 1e-6;
  double worst = 0.0;
  double min_credit = HUGE_VAL;
  for (int probe = 0; probe < 1000; ++probe) {
    Rng rng(40000 + probe);
    const std::size_t k = 2 + rng.below(4), s_dim = 3 + rng.below(6), m = 2 + rng.below(8);
    const cia::mixer::Mixer mixer(cia::mixer::MixerKind::kQmix, {k, s_dim, m});
    cia::nn::ParamStore store;
    mixer.init(store, rng);
    randomize_biases(store, rng);
    const Tensor q = random_tensor(1, k, rng, -3, 3), s = random_tensor(1, s_dim, rng);
    const Tensor c = cia::mixer::evaluate_credits(mixer, store, q, s);
    for (std::size_t i = 0; i < k; ++i) {
      Tensor up = q, down = q;
      up(0, i) += h;
      down(0, i) -= h;
      const double fd = (cia::mixer::evaluate_mix(mixer, store, up, s).item() -
                         cia::mixer::evaluate_mix(mixer, store, down, s).item()) / (2 * h);
      worst = std::max(worst, std::abs(fd - c(0, i)));
      min_credit = std::min(min_credit, c(0, i));
    }
  }
  bool vdn_ones = true;
  bool vdn_invariant = true;
  std::size_t perms = 0;
  const cia::nn::ParamStore none;
  for (std::size_t k = 2; k <= 5; ++k) {
    const cia::mixer::Mixer vdn(cia::mixer::MixerKind::kVdn, {k, 3, 32});
    Rng rng(k);
    const Tensor q = random_tensor(32, k, rng, -100, 100), s(32, 3);
    const Tensor credits = cia::mixer::evaluate_credits(vdn, none, q, s);
    for (double v : credits.data()) vdn_ones = vdn_ones && v == 1.0;
    const Tensor base = cia::mixer::evaluate_mix(vdn, none, q, s);
    cia::mixer::Permutation p;
    p.order.resize(k);
    std::iota(p.order.begin(), p.order.end(), 0);
    do {
      cia::ad::Graph g;
      const auto b = vdn.bind(g, none, false);
      const Tensor out = cia::mixer::shuffle_mix(vdn, b, g.constant(q), g.constant(s), p).value();
      vdn_invariant = vdn_invariant && cia::bit_equal(out, base);
      ++perms;
    } while (std::next_permutation(p.order.begin(), p.order.end()));
  }
  report(2, worst < kCreditTolerance && vdn_ones,
         "max |analytic - fd| = " + fmt(worst) + " over 1000 probes (< 1e-5); VDN credits all ones: " +
             (vdn_ones ? "yes" : "no"));
  report(3, min_credit >= 0.0 && vdn_invariant,
         "min QMIX credit = " + fmt(min_credit) + " (>= 0); VDN exact over " + std::to_string(perms) +
             " permutations (K=2..5): " + (vdn_invariant ? "yes" : "no"));
}

double infonce_of(const Tensor& g_value) {
  cia::ad::Graph g;
  const cia::ad::Var sims[] = {g.constant(g_value)};
  return cia::contrastive::infonce_loss(sims).value().item();
}

void criterion_4() {
  double worst = 0.0;
  for (std::size_t k : {2u, 3u, 8u}) {
    worst = std::max(worst, std::abs(infonce_of(Tensor(k, k)) - std::log(static_cast<double>(k))));
  }
  Tensor diag(2, 2);
  diag(0, 0) = diag(1, 1) = 10.0;
  const double diag_err = std::abs(infonce_of(diag) - std::log1p(std::exp(-10.0)));
  bool bounded = true;
  Rng rng(50000);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + rng.below(7);
    const double l = infonce_of(random_tensor(k, k, rng, -30, 30));
    bounded = bounded && cia::contrastive::mi_lower_bound(l, k) <= std::log(static_cast<double>(k));
  }
  report(4, worst < kAnchorTolerance && diag_err < kAnchorTolerance && bounded,
         "|L(0)-ln K| = " + fmt(worst) + ", |L(10I)-ln(1+e^-10)| = " + fmt(diag_err) +
             " (< 1e-12); bound <= ln K on 10000 draws: " + (bounded ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// Trained runs

cia::rl::TrainConfig run_config(cia::rl::CiaMode mode, std::uint64_t seed) {
  cia::rl::TrainConfig c;
  c.mode = mode;
  c.seed = seed;
  return c;
}

std::string run_name(cia::rl::CiaMode mode, std::uint64_t seed) {
  return std::string(cia::rl::to_string(mode)) + "_s" + std::to_string(seed);
}

fs::path ensure_run(const fs::path& work, const std::string& name, const cia::rl::TrainConfig& c) {
  const cia::rl::RunPaths paths{work / name};
  const auto make_env = [] { return std::make_unique<cia::env::TurnGame>(); };
  const auto start = std::chrono::steady_clock::now();
  std::cerr << "[acceptance] run " << name << " ..." << std::flush;
  try {
    cia::rl::train(c, make_env, paths);
  } catch (const std::runtime_error&) {
    fs::remove_all(paths.root);
    cia::rl::train(c, make_env, paths);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << " " << fmt(secs, 4) << " s" << std::endl;
  return paths.final_model();
}

cia::diagnostics::Model load(const fs::path& model, const std::string& name) {
  cia::env::TurnGame env;
  auto m = cia::rl::load_model(model, env);
  return {name, std::move(m.nets), std::move(m.store)};
}

double greedy_return(const cia::diagnostics::Model& m) {
  cia::env::TurnGame env;
  cia::rl::AgentPolicy policy(m.nets, m.store, 0.0);
  return cia::rl::evaluate(env, policy, kReturnEpisodes, kAnalysisSeed).mean_return;
}

double alternation(const cia::diagnostics::Model& m) {
  cia::env::TurnGame env;
  cia::rl::AgentPolicy policy(m.nets, m.store, 0.0);
  const auto r = cia::rl::evaluate(env, policy, kAlternationEpisodes, kAnalysisSeed);
  return cia::diagnostics::alternation_score(m, r.episodes);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void trained_criteria(const fs::path& work) {
  using cia::rl::CiaMode;
  cia::env::TurnGame env;
  cia::rl::OraclePolicy oracle;
  const double r_star = cia::rl::evaluate(env, oracle, kOracleEpisodes, 0).mean_return;

  std::map<std::string, cia::diagnostics::Model> models;
  for (std::uint64_t seed : kSeeds) {
    for (CiaMode mode : {CiaMode::kOff, CiaMode::kCia, CiaMode::kRandomShuffle}) {
      const auto name = run_name(mode, seed);
      models.emplace(name, load(ensure_run(work, name, run_config(mode, seed)), name));
    }
  }

  // 5
  bool beats_off = true;
  int near_oracle = 0;
  std::string detail = "R*=" + fmt(r_star, 6) + ";";
  for (std::uint64_t seed : kSeeds) {
    const double off = greedy_return(models.at(run_name(CiaMode::kOff, seed)));
    const double cia_r = greedy_return(models.at(run_name(CiaMode::kCia, seed)));
    beats_off = beats_off && cia_r > off;
    if (cia_r >= kOracleFraction * r_star) ++near_oracle;
    detail += " seed " + std::to_string(seed) + ": cia=" + fmt(cia_r, 5) + " off=" + fmt(off, 5) + ";";
  }
  report(5, beats_off && near_oracle >= 2,
         detail + " cia>off on every seed: " + (beats_off ? "yes" : "no") + "; seeds with cia >= 0.7 R*: " +
             std::to_string(near_oracle) + " (>= 2)");

  // 6
  double alt_cia = 0.0, alt_off = 0.0;
  for (std::uint64_t seed : kSeeds) {
    alt_cia += alternation(models.at(run_name(CiaMode::kCia, seed))) / kSeeds.size();
    alt_off += alternation(models.at(run_name(CiaMode::kOff, seed))) / kSeeds.size();
  }
  report(6, alt_cia >= kAlternationCia && alt_off >= kAlternationOffLo && alt_off <= kAlternationOffHi,
         "alternation cia=" + fmt(alt_cia) + " (>= 0.7), off=" + fmt(alt_off) + " (in [0.35, 0.65])");

  // 7
  int triples = 0;
  bool diagonal_zero = true;
  std::string lambdas;
  for (std::uint64_t seed : kSeeds) {
    const std::vector<cia::diagnostics::Model> trio = {models.at(run_name(CiaMode::kOff, seed)),
                                                       models.at(run_name(CiaMode::kRandomShuffle, seed)),
                                                       models.at(run_name(CiaMode::kCia, seed))};
    const auto kl = cia::diagnostics::kl_matrix(trio, env, kKlEpisodes, kAnalysisSeed);
    for (std::size_t i = 0; i < 3; ++i) diagonal_zero = diagonal_zero && kl.lambda(i, i) == 0.0;
    const double off_rs = kl.lambda(0, 1), cia_rs = kl.lambda(2, 1), cia_off = kl.lambda(2, 0);
    if (off_rs < cia_rs && off_rs < cia_off) ++triples;
    lambdas += " seed " + std::to_string(seed) + ": (off,rs)=" + fmt(off_rs) + " (cia,rs)=" + fmt(cia_rs) +
               " (cia,off)=" + fmt(cia_off) + ";";
  }
  report(7, triples >= 2 && diagonal_zero,
         lambdas.substr(1) + " triples satisfied: " + std::to_string(triples) + " (>= 2); diagonal 0: " +
             (diagonal_zero ? "yes" : "no"));

  // 8
  const auto cc_model = ensure_run(work, run_name(CiaMode::kCc, kSeeds[0]), run_config(CiaMode::kCc, kSeeds[0]));
  const bool cc_done = fs::exists(cc_model) && fs::exists(work / run_name(CiaMode::kCc, kSeeds[0]) / "manifest.json");
  const Tensor asym = Tensor::from_rows({{2.0, 0.0}, {1.0, 0.5}});
  cia::ad::Graph g;
  const cia::ad::Var sims[] = {g.constant(asym)};
  const double nce = cia::contrastive::infonce_loss(sims).value().item();
  const double cc = cia::contrastive::cc_loss(sims).value().item();
  report(8, cc_done && nce != cc,
         std::string("cc run completed: ") + (cc_done ? "yes" : "no") + "; infonce=" + fmt(nce, 8) +
             " cc=" + fmt(cc, 8) + " on asymmetric G");

  // 9
  const auto first = work / run_name(CiaMode::kCia, kSeeds[0]);
  const auto again = work / "determinism_rerun";
  fs::remove_all(again);
  ensure_run(work, "determinism_rerun", run_config(CiaMode::kCia, kSeeds[0]));
  const bool same_metrics = slurp(first / "metrics.csv") == slurp(again / "metrics.csv");
  const bool same_model = slurp(first / "final" / "model.params") == slurp(again / "final" / "model.params");
  report(9, same_metrics && same_model,
         std::string("metrics identical: ") + (same_metrics ? "yes" : "no") + "; final checkpoint identical: " +
             (same_model ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work = "acceptance_runs";
  bool fast_only = false;
  bool strict = false;
  app.add_option("--work", work, "directory for trained runs");
  app.add_flag("--fast-only", fast_only, "skip criteria that need trained runs");
  app.add_flag("--strict", strict, "exit nonzero when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  criterion_1();
  criteria_2_3();
  criterion_4();
  if (!fast_only) trained_criteria(work);

  const auto failed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.pass; });
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << " (" << verdicts.size()
            << " criteria checked)" << std::endl;
  return strict && failed > 0 ? 1 : 0;
}
