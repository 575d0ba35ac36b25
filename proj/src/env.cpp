// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/env.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace cia::env {
namespace {

constexpr std::array<Cell, 4> kMoves = {{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

int cell_index(Cell c) { return c.row * kGridSize + c.col; }

Cell moved(Cell c, int action) {
  return {c.row + kMoves[static_cast<std::size_t>(action)].row,
          c.col + kMoves[static_cast<std::size_t>(action)].col};
}

bool is_move(int action) { return action >= kUp && action <= kRight; }

Cell spawn_apple(const TurnState& s, Rng& rng) {
  std::vector<Cell> free;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      Cell cell{r, c};
      if (cell != s.agents[0] && cell != s.agents[1]) free.push_back(cell);
    }
  }
  return free[rng.below(free.size())];
}

nlohmann::json cell_json(Cell c) { return nlohmann::json::array({c.row, c.col}); }
Cell json_cell(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

bool in_bounds(Cell c) { return c.row >= 0 && c.row < kGridSize && c.col >= 0 && c.col < kGridSize; }

TurnState turn_initial_state(Rng& rng) {
  TurnState s;
  s.agents = {Cell{0, 0}, Cell{kGridSize - 1, kGridSize - 1}};
  s.owner = 0;
  s.t = 0;
  s.apple = spawn_apple(s, rng);
  return s;
}

TransitionOutcome turn_transition(TurnState& s, const JointAction& actions, Rng& rng) {
  if (s.t >= kTurnEpisodeLimit) throw std::logic_error("step() after the episode ended");
  for (int a : actions) {
    if (a < 0 || a >= kTurnActions) {
      throw std::out_of_range("action " + std::to_string(a) + " outside [0, " +
                              std::to_string(kTurnActions) + ")");
    }
  }
  TransitionOutcome out;
  const int free_agent = s.owner;
  const int trapped = 1 - s.owner;

  if (is_move(actions[static_cast<std::size_t>(trapped)])) {
    out.reward += kPenalty;
    ++out.penalties;
  }

  const int act = actions[static_cast<std::size_t>(free_agent)];
  Cell& pos = s.agents[static_cast<std::size_t>(free_agent)];
  if (is_move(act)) {
    const Cell target = moved(pos, act);
    if (!in_bounds(target)) {
      out.reward += kPenalty;
      ++out.penalties;
    } else if (target != s.agents[static_cast<std::size_t>(trapped)]) {
      pos = target;
    }
  } else if (act == kEat && pos == s.apple) {
    out.reward += kEatReward;
    ++out.eats;
    s.owner = trapped;
    s.apple = spawn_apple(s, rng);
  }

  ++s.t;
  out.done = s.t >= kTurnEpisodeLimit;
  return out;
}

std::vector<double> encode_observation(const TurnState& s, int agent) {
  std::vector<double> obs(kTurnObsDim, 0.0);
  const Cell self = s.agents[static_cast<std::size_t>(agent)];
  const Cell other = s.agents[static_cast<std::size_t>(1 - agent)];
  const bool trapped = s.is_trapped(agent);
  const int apple_channel = s.owner == agent ? kOwnApple : kOtherApple;
  std::size_t cell = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc, ++cell) {
      double* ch = obs.data() + cell * kObsChannels;
      const Cell c{self.row + dr, self.col + dc};
      if (trapped) ch[kFence] = 1.0;
      if (!in_bounds(c)) {
        ch[kOutOfBounds] = 1.0;
        continue;
      }
      if (c == self) ch[kSelf] = 1.0;
      if (c == other) ch[kOther] = 1.0;
      if (c == s.apple) ch[apple_channel] = 1.0;
    }
  }
  return obs;
}

std::vector<double> encode_state(const TurnState& s) {
  constexpr int kCells = kGridSize * kGridSize;
  std::vector<double> f(kTurnStateDim, 0.0);
  f[static_cast<std::size_t>(cell_index(s.agents[0]))] = 1.0;
  f[static_cast<std::size_t>(kCells + cell_index(s.agents[1]))] = 1.0;
  f[static_cast<std::size_t>(2 * kCells + cell_index(s.apple))] = 1.0;
  f[3 * kCells] = static_cast<double>(s.owner);
  f[3 * kCells + 1] = static_cast<double>(s.t) / kTurnEpisodeLimit;
  return f;
}

TurnState decode_state(std::span<const double> f) {
  constexpr int kCells = kGridSize * kGridSize;
  if (f.size() != kTurnStateDim) {
    throw std::invalid_argument("state vector of length " + std::to_string(f.size()) +
                                ", expected " + std::to_string(kTurnStateDim));
  }
  auto find_cell = [&](int plane) {
    for (int i = 0; i < kCells; ++i) {
      if (f[static_cast<std::size_t>(plane * kCells + i)] == 1.0) return Cell{i / kGridSize, i % kGridSize};
    }
    throw std::invalid_argument("state plane " + std::to_string(plane) + " has no marked cell");
  };
  TurnState s;
  s.agents = {find_cell(0), find_cell(1)};
  s.apple = find_cell(2);
  s.owner = static_cast<int>(f[3 * kCells]);
  s.t = static_cast<int>(std::lround(f[3 * kCells + 1] * kTurnEpisodeLimit));
  return s;
}

JointAction oracle_policy(const TurnState& s) {
  JointAction joint{kStay, kStay};
  const int free_agent = s.owner;
  const Cell blocked = s.agents[static_cast<std::size_t>(1 - free_agent)];
  const Cell start = s.agents[static_cast<std::size_t>(free_agent)];
  if (start == s.apple) {
    joint[static_cast<std::size_t>(free_agent)] = kEat;
    return joint;
  }
  // Breadth-first distances to the apple, treating the fenced agent as a wall.
  std::array<int, kGridSize * kGridSize> dist;
  dist.fill(-1);
  std::queue<Cell> frontier;
  dist[static_cast<std::size_t>(cell_index(s.apple))] = 0;
  frontier.push(s.apple);
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    for (int a = kUp; a <= kRight; ++a) {
      const Cell n = moved(c, a);
      if (!in_bounds(n) || n == blocked || dist[static_cast<std::size_t>(cell_index(n))] >= 0) continue;
      dist[static_cast<std::size_t>(cell_index(n))] = dist[static_cast<std::size_t>(cell_index(c))] + 1;
      frontier.push(n);
    }
  }
  const int here = dist[static_cast<std::size_t>(cell_index(start))];
  for (int a = kUp; a <= kRight; ++a) {
    const Cell n = moved(start, a);
    if (in_bounds(n) && n != blocked && dist[static_cast<std::size_t>(cell_index(n))] == here - 1) {
      joint[static_cast<std::size_t>(free_agent)] = a;
      break;
    }
  }
  return joint;
}

void TurnGame::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  state_ = turn_initial_state(rng_);
}

StepResult TurnGame::step(std::span<const int> actions) {
  if (actions.size() != kTurnAgents) {
    throw std::invalid_argument("Turn expects " + std::to_string(kTurnAgents) + " actions, got " +
                                std::to_string(actions.size()));
  }
  const TransitionOutcome outcome = turn_transition(state_, {actions[0], actions[1]}, rng_);
  StepResult r;
  r.observations = {encode_observation(state_, 0), encode_observation(state_, 1)};
  r.state = encode_state(state_);
  r.reward = outcome.reward;
  r.done = outcome.done;
  r.eats = outcome.eats;
  r.penalties = outcome.penalties;
  return r;
}

std::vector<double> TurnGame::observation(std::size_t agent) const {
  if (agent >= kTurnAgents) throw std::out_of_range("agent index " + std::to_string(agent));
  return encode_observation(state_, static_cast<int>(agent));
}

StepRecord make_record(const TurnState& before, const JointAction& actions,
                       const TransitionOutcome& outcome) {
  StepRecord r;
  r.t = before.t;
  r.positions = before.agents;
  r.owner = before.owner;
  r.apple = before.apple;
  r.actions = actions;
  r.reward = outcome.reward;
  r.done = outcome.done;
  return r;
}

void write_episode_log(std::ostream& out, std::span<const StepRecord> records) {
  for (const auto& r : records) {
    nlohmann::json j;
    j["t"] = r.t;
    j["positions"] = {cell_json(r.positions[0]), cell_json(r.positions[1])};
    j["owner"] = r.owner;
    j["apple"] = cell_json(r.apple);
    j["actions"] = {r.actions[0], r.actions[1]};
    j["reward"] = r.reward;
    j["done"] = r.done;
    out << j.dump() << '\n';
  }
}

std::vector<StepRecord> read_episode_log(std::istream& in) {
  std::vector<StepRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    StepRecord r;
    r.t = j.at("t").get<int>();
    r.positions = {json_cell(j.at("positions").at(0)), json_cell(j.at("positions").at(1))};
    r.owner = j.at("owner").get<int>();
    r.apple = json_cell(j.at("apple"));
    r.actions = {j.at("actions").at(0).get<int>(), j.at("actions").at(1).get<int>()};
    r.reward = j.at("reward").get<double>();
    r.done = j.at("done").get<bool>();
    records.push_back(r);
  }
  return records;
}

}  // namespace cia::env
