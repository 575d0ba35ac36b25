// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: train, eval, analyze, export-credits.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cia/config.hpp"
#include "cia/diagnostics.hpp"
#include "cia/env.hpp"
#include "cia/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  std::string category;
  std::string key;
  std::string message;
};

int report(const Failure& f) {
  json line = {{"error", f.category}, {"message", f.message}};
  if (!f.key.empty()) line["key"] = f.key;
  std::cerr << line.dump() << '\n';
  return f.category == "usage" ? 2 : 1;
}

std::unique_ptr<cia::env::Environment> make_turn() { return std::make_unique<cia::env::TurnGame>(); }

std::optional<std::string> getenv_lookup(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

json eval_json(const cia::rl::EvalResult& r, const std::string& policy, std::uint64_t seed) {
  return {{"policy", policy},
          {"episodes", r.returns.size()},
          {"seed", seed},
          {"mean_return", r.mean_return},
          {"std_return", r.std_return},
          {"mean_discounted_return", r.mean_discounted_return},
          {"returns", r.returns}};
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

cia::diagnostics::Model load_named(const std::string& path, const std::string& name,
                                   const cia::env::Environment& env) {
  auto m = cia::rl::load_model(path, env);
  return {name, std::move(m.nets), std::move(m.store)};
}

std::string default_name(const std::string& path) {
  fs::path p(path);
  // runs/<name>/final/model.params -> <name>
  if (p.filename() == "model.params" && p.parent_path().filename() == "final") {
    return p.parent_path().parent_path().filename().string();
  }
  return p.stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Value decomposition with contrastive identity-aware credits"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a learner on the Turn game");
  std::optional<std::string> config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> alpha;
  std::optional<std::string> mixer_kind;
  std::optional<std::size_t> steps;
  std::vector<std::string> sets;
  train->add_option("--config", config_path, "INI config file");
  train->add_option("--out", out_dir, "run directory")->required();
  train->add_option("--seed", seed);
  train->add_option("--mode", mode, "off, cia, cc or rs");
  train->add_option("--alpha", alpha);
  train->add_option("--mixer", mixer_kind, "vdn or qmix");
  train->add_option("--steps", steps, "total environment steps");
  train->add_option("--set", sets, "section.key=value override");

  // eval
  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint or the oracle");
  std::string eval_checkpoint;
  bool oracle = false;
  std::size_t eval_episodes = 100;
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  eval->add_option("--checkpoint", eval_checkpoint);
  eval->add_flag("--oracle", oracle, "play the scripted oracle instead");
  eval->add_option("--episodes", eval_episodes);
  eval->add_option("--seed", eval_seed);
  eval->add_option("--out", eval_out, "also write the summary to this file");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "credit KL matrix and temporal credit tables");
  std::vector<std::string> checkpoints;
  std::vector<std::string> names;
  std::size_t per_model = 10;
  std::uint64_t analyze_seed = 0;
  std::string analyze_out;
  bool credits_only = false;
  analyze->add_option("--checkpoints", checkpoints)->required();
  analyze->add_option("--names", names, "model labels, one per checkpoint");
  analyze->add_option("--episodes", per_model, "greedy episodes per model");
  analyze->add_option("--seed", analyze_seed);
  analyze->add_option("--out", analyze_out)->required();
  analyze->add_flag("--credits-only", credits_only, "skip the KL matrix");

  // export-credits
  auto* exportc = app.add_subcommand("export-credits", "temporal credits of greedy episodes");
  std::string export_checkpoint;
  std::size_t export_episodes = 1;
  std::uint64_t export_seed = 0;
  std::string export_out;
  exportc->add_option("--checkpoint", export_checkpoint)->required();
  exportc->add_option("--episodes", export_episodes);
  exportc->add_option("--seed", export_seed);
  exportc->add_option("--out", export_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report({"usage", "", e.what()});
  }

  try {
    if (*train) {
      std::map<std::string, std::string> overrides;
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value: " + s);
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
      }
      if (seed) overrides["train.seed"] = std::to_string(*seed);
      if (mode) overrides["cia.mode"] = *mode;
      if (alpha) overrides["cia.alpha"] = cia::config::get([&] {
        cia::rl::TrainConfig c;
        c.alpha = *alpha;
        return c;
      }(), "cia.alpha");
      if (mixer_kind) overrides["model.mixer"] = *mixer_kind;
      if (steps) overrides["train.total_env_steps"] = std::to_string(*steps);
      const auto config = cia::config::resolve(config_path, getenv_lookup, overrides);
      cia::rl::RunPaths paths{out_dir};
      const auto summary = cia::rl::train(config, make_turn, paths);
      json line = {{"command", "train"},
                   {"out", out_dir},
                   {"resumed", summary.resumed},
                   {"env_steps", summary.env_steps},
                   {"train_steps", summary.train_steps},
                   {"final_mean_return", summary.final_eval.mean_return}};
      std::cout << line.dump() << '\n';
    } else if (*eval) {
      cia::env::TurnGame env;
      json summary;
      if (oracle) {
        cia::rl::OraclePolicy policy;
        summary = eval_json(cia::rl::evaluate(env, policy, eval_episodes, eval_seed), "oracle",
                            eval_seed);
      } else {
        if (eval_checkpoint.empty()) throw CLI::ValidationError("--checkpoint", "required without --oracle");
        const auto model = cia::rl::load_model(eval_checkpoint, env);
        cia::rl::AgentPolicy policy(model.nets, model.store, 0.0);
        summary = eval_json(cia::rl::evaluate(env, policy, eval_episodes, eval_seed, model.config.gamma),
                            "greedy", eval_seed);
        summary["checkpoint"] = eval_checkpoint;
      }
      if (!eval_out.empty()) write_file(eval_out, summary.dump(2) + "\n");
      summary.erase("returns");
      std::cout << summary.dump() << '\n';
    } else if (*analyze) {
      if (!names.empty() && names.size() != checkpoints.size()) {
        throw CLI::ValidationError("--names", "needs one name per checkpoint");
      }
      cia::env::TurnGame env;
      std::vector<cia::diagnostics::Model> models;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        models.push_back(load_named(checkpoints[i], names.empty() ? default_name(checkpoints[i]) : names[i], env));
      }
      std::string header = "seed=" + std::to_string(analyze_seed) + " episodes_per_model=" +
                           std::to_string(per_model) + " models=";
      for (std::size_t i = 0; i < models.size(); ++i) {
        header += (i ? "," : "") + models[i].name + ":" + checkpoints[i];
      }
      json line = {{"command", "analyze"}, {"out", analyze_out}};
      if (!credits_only) {
        const auto kl = cia::diagnostics::kl_matrix(models, env, per_model, analyze_seed);
        std::ostringstream table;
        cia::diagnostics::write_kl_table(table, header, kl);
        write_file(fs::path(analyze_out) / "kl_matrix.tsv", table.str());
        line["kl_matrix"] = (fs::path(analyze_out) / "kl_matrix.tsv").string();
        line["pooled_episodes"] = kl.pooled_episodes;
      }
      for (std::size_t i = 0; i < models.size(); ++i) {
        cia::rl::AgentPolicy policy(models[i].nets, models[i].store, 0.0);
        const auto r = cia::rl::evaluate(env, policy, per_model, cia::derive_seed(analyze_seed, i));
        std::ostringstream table;
        for (std::size_t e = 0; e < r.episodes.size(); ++e) {
          const auto rows = cia::diagnostics::export_credit_timeseries(r.episodes[e], models[i]);
          cia::diagnostics::write_credit_table(table, header + " model=" + models[i].name, rows, e);
        }
        const auto path = fs::path(analyze_out) / ("credits_" + std::to_string(i) + "_" + models[i].name + ".tsv");
        write_file(path, table.str());
        line["alternation_" + models[i].name] = cia::diagnostics::alternation_score(models[i], r.episodes);
      }
      std::cout << line.dump() << '\n';
    } else if (*exportc) {
      cia::env::TurnGame env;
      const auto model = load_named(export_checkpoint, default_name(export_checkpoint), env);
      cia::rl::AgentPolicy policy(model.nets, model.store, 0.0);
      const auto r = cia::rl::evaluate(env, policy, export_episodes, export_seed);
      std::ostringstream table;
      const std::string header = "checkpoint=" + export_checkpoint + " seed=" + std::to_string(export_seed);
      for (std::size_t e = 0; e < r.episodes.size(); ++e) {
        const auto rows = cia::diagnostics::export_credit_timeseries(r.episodes[e], model);
        cia::diagnostics::write_credit_table(table, header, rows, e);
      }
      write_file(export_out, table.str());
      std::cout << json{{"command", "export-credits"}, {"out", export_out}}.dump() << '\n';
    }
  } catch (const cia::config::ConfigError& e) {
    return report({"config", e.key(), e.what()});
  } catch (const CLI::Error& e) {
    return report({"usage", "", e.what()});
  } catch (const std::exception& e) {
    return report({"runtime", "", e.what()});
  }
  return 0;
}
