// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cia/rng.hpp"

namespace cia::env {

struct StepResult {
  std::vector<std::vector<double>> observations;  // one per agent
  std::vector<double> state;
  double reward = 0.0;  // shared by all agents
  bool done = false;
  int eats = 0;       // successful eats this step
  int penalties = 0;  // -1 events this step
};

// Cooperative, partially observed multi-agent environment with a shared reward.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t n_agents() const = 0;
  virtual std::size_t n_actions() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t episode_limit() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const int> actions) = 0;
  virtual std::vector<double> observation(std::size_t agent) const = 0;
  virtual std::vector<double> state() const = 0;

  // Agent whose turn it is, or -1 for games without turns.
  virtual int turn_holder() const { return -1; }
};

// ---------------------------------------------------------------------------
// Turn: two agents on a 5x5 map take turns eating apples of their own colour.
// The agent whose round it is ("free") moves; the other is fenced in and
// pays -1 for every movement attempt. Eating the apple pays +10 and hands the
// round to the other agent.

inline constexpr int kGridSize = 5;
inline constexpr int kTurnAgents = 2;
inline constexpr int kTurnActions = 6;
inline constexpr int kTurnEpisodeLimit = 100;
inline constexpr int kObsChannels = 6;
inline constexpr int kObsWindow = 3;
inline constexpr std::size_t kTurnObsDim = kObsWindow * kObsWindow * kObsChannels;
inline constexpr std::size_t kTurnStateDim = 3 * kGridSize * kGridSize + 2;
inline constexpr double kEatReward = 10.0;
inline constexpr double kPenalty = -1.0;

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4, kEat = 5 };

// Observation channels, per window cell.
enum Channel : int {
  kSelf = 0,
  kOther = 1,
  kOwnApple = 2,
  kOtherApple = 3,
  kOutOfBounds = 4,
  kFence = 5,
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

using JointAction = std::array<int, kTurnAgents>;

struct TurnState {
  std::array<Cell, kTurnAgents> agents{};
  int owner = 0;  // agent holding the round (0 = agent 1)
  Cell apple{};   // the apple's colour is always `owner`
  int t = 0;

  bool is_trapped(int agent) const { return agent != owner; }
  friend bool operator==(const TurnState&, const TurnState&) = default;
};

struct TransitionOutcome {
  double reward = 0.0;
  int eats = 0;
  int penalties = 0;
  bool done = false;
};

bool in_bounds(Cell c);

// Agents at opposite corners, agent 1 holds the first round, first apple
// uniform over unoccupied cells.
TurnState turn_initial_state(Rng& rng);
// Applies one joint action in place. Throws on out-of-range actions or t >= 100.
TransitionOutcome turn_transition(TurnState& state, const JointAction& actions, Rng& rng);

// 3x3 window centred on `agent`, cell-major (row-major cells, 6 channels each).
std::vector<double> encode_observation(const TurnState& state, int agent);
// agent-1 grid ++ agent-2 grid ++ apple grid ++ [owner, t/100].
std::vector<double> encode_state(const TurnState& state);
TurnState decode_state(std::span<const double> features);

// Centralised scripted policy: the free agent follows a shortest path to the
// apple (around the fenced agent) and eats; the fenced agent stays.
JointAction oracle_policy(const TurnState& state);

class TurnGame final : public Environment {
 public:
  TurnGame() = default;

  std::size_t n_agents() const override { return kTurnAgents; }
  std::size_t n_actions() const override { return kTurnActions; }
  std::size_t obs_dim() const override { return kTurnObsDim; }
  std::size_t state_dim() const override { return kTurnStateDim; }
  std::size_t episode_limit() const override { return kTurnEpisodeLimit; }

  void reset(std::uint64_t seed) override;
  StepResult step(std::span<const int> actions) override;
  std::vector<double> observation(std::size_t agent) const override;
  std::vector<double> state() const override { return encode_state(state_); }
  int turn_holder() const override { return state_.owner; }

  const TurnState& turn_state() const { return state_; }

 private:
  TurnState state_{};
  Rng rng_{0};
};

// One line of an episode log: the state before the step, the joint action and
// its outcome.
struct StepRecord {
  int t = 0;
  std::array<Cell, kTurnAgents> positions{};
  int owner = 0;
  Cell apple{};
  JointAction actions{};
  double reward = 0.0;
  bool done = false;
};

StepRecord make_record(const TurnState& before, const JointAction& actions,
                       const TransitionOutcome& outcome);
// JSON lines, one record per step.
void write_episode_log(std::ostream& out, std::span<const StepRecord> records);
std::vector<StepRecord> read_episode_log(std::istream& in);

}  // namespace cia::env
