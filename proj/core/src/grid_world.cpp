#include "semcomm/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include <json.hpp>

#include "semcomm/error.hpp"

namespace semcomm {
namespace {

constexpr int kObstacleRetries = 100;
constexpr double kDynamicDensityLow = 0.05;
constexpr double kDynamicDensityHigh = 0.20;
constexpr double kMaxDensity = 0.3;

constexpr std::uint64_t kObstacleStream = 0;
constexpr std::uint64_t kPlacementStream = 1;
constexpr std::uint64_t kPreyStream = 2;

ObstacleGrid regular_lattice(double density, int width, int height) {
  ObstacleGrid grid(width, height);
  const int target = static_cast<int>(std::lround(density * width * height));
  if (target == 0) return grid;

  // Sparsest square lattice over interior cells with enough sites.
  std::vector<Cell> sites;
  for (int spacing = std::max(width, height); spacing >= 1; --spacing) {
    sites.clear();
    for (int r = 1; r < height - 1; ++r) {
      if (r % spacing != 0) continue;
      for (int c = 1; c < width - 1; ++c) {
        if (c % spacing == 0) sites.push_back({r, c});
      }
    }
    if (static_cast<int>(sites.size()) >= target) break;
  }
  if (static_cast<int>(sites.size()) < target) {
    throw Error(ErrorCode::connectivity_failed, "density too high for a border-free lattice");
  }
  // Spread the selected sites evenly over the lattice.
  const auto n = static_cast<long long>(sites.size());
  for (long long i = 0; i < target; ++i) grid.set(sites[static_cast<std::size_t>(i * n / target)], true);
  if (!grid.free_cells_connected()) {
    throw Error(ErrorCode::connectivity_failed, "regular lattice disconnects free cells");
  }
  return grid;
}

ObstacleGrid random_density(int width, int height, Rng& rng) {
  for (int attempt = 0; attempt < kObstacleRetries; ++attempt) {
    const double density = rng.uniform(kDynamicDensityLow, kDynamicDensityHigh);
    ObstacleGrid grid(width, height);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) grid.set({r, c}, rng.bernoulli(density));
    }
    if (grid.count() < width * height && grid.free_cells_connected()) return grid;
  }
  throw Error(ErrorCode::connectivity_failed,
              "no connected obstacle layout after " + std::to_string(kObstacleRetries) + " attempts");
}

}  // namespace

Cell apply_action(Cell cell, Action action) {
  switch (action) {
    case Action::up: return {cell.row - 1, cell.col};
    case Action::down: return {cell.row + 1, cell.col};
    case Action::left: return {cell.row, cell.col - 1};
    case Action::right: return {cell.row, cell.col + 1};
    case Action::stay: return cell;
  }
  return cell;
}

std::string to_string(ObstacleMode mode) {
  return mode == ObstacleMode::fixed_regular ? "fixed_regular" : "dynamic_density";
}

std::string to_string(PreyPolicy policy) {
  return policy == PreyPolicy::random_walk ? "random_walk" : "stationary";
}

std::vector<std::string> GridConfig::violations() const {
  std::vector<std::string> out;
  if (width < 1 || height < 1) out.push_back("grid dimensions must be >= 1");
  if (n_agents < 1) out.push_back("n_agents must be >= 1");
  if (n_preys < 1) out.push_back("n_preys must be >= 1");
  if (fov < 1 || fov % 2 == 0) out.push_back("fov must be odd");
  if (fov > std::min(width, height)) out.push_back("fov must not exceed min(width, height)");
  if (!(obstacle_density >= 0.0 && obstacle_density <= kMaxDensity)) {
    out.push_back("obstacle_density must lie in [0, 0.3]");
  }
  if (max_steps < 1) out.push_back("max_steps must be >= 1");
  if (!std::isfinite(capture_bonus) || !std::isfinite(step_cost)) {
    out.push_back("reward constants must be finite");
  }
  return out;
}

void GridConfig::validate() const {
  const auto problems = violations();
  if (problems.empty()) return;
  std::string message;
  for (const auto& p : problems) message += (message.empty() ? "" : "; ") + p;
  throw Error(ErrorCode::validation_error, message);
}

int ObstacleGrid::count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

bool ObstacleGrid::free_cells_connected() const {
  const int total_free = width_ * height_ - count();
  if (total_free == 0) return true;
  std::vector<std::uint8_t> seen(cells_.size(), 0);
  std::deque<Cell> frontier;
  for (int r = 0; r < height_ && frontier.empty(); ++r) {
    for (int c = 0; c < width_; ++c) {
      if (!blocked({r, c})) {
        frontier.push_back({r, c});
        seen[static_cast<std::size_t>(r * width_ + c)] = 1;
        break;
      }
    }
  }
  int reached = 0;
  while (!frontier.empty()) {
    const Cell cell = frontier.front();
    frontier.pop_front();
    ++reached;
    for (const Action a : {Action::up, Action::down, Action::left, Action::right}) {
      const Cell next = apply_action(cell, a);
      if (!free(next)) continue;
      auto& mark = seen[static_cast<std::size_t>(next.row * width_ + next.col)];
      if (mark) continue;
      mark = 1;
      frontier.push_back(next);
    }
  }
  return reached == total_free;
}

ObstacleGrid generate_obstacles(ObstacleMode mode, double density, int width, int height,
                                std::uint64_t seed) {
  if (!(density >= 0.0 && density <= kMaxDensity)) {
    throw Error(ErrorCode::precondition, "obstacle density must lie in [0, 0.3]");
  }
  if (mode == ObstacleMode::fixed_regular) return regular_lattice(density, width, height);
  Rng rng(seed);
  return random_density(width, height, rng);
}

int GridState::active_preys() const {
  return static_cast<int>(std::count_if(prey_pos.begin(), prey_pos.end(),
                                        [](const auto& p) { return p.has_value(); }));
}

void AgentObservation::flatten_into(Eigen::Ref<Eigen::VectorXd> out) const {
  const auto n = static_cast<Eigen::Index>(planes.size());
  for (Eigen::Index i = 0; i < n; ++i) out[i] = planes[static_cast<std::size_t>(i)];
  out[n] = self_pos[0];
  out[n + 1] = self_pos[1];
}

Eigen::VectorXd AgentObservation::flatten() const {
  Eigen::VectorXd out(flat_dim());
  flatten_into(out);
  return out;
}

AgentObservation observe(const GridState& state, int fov, int agent_id) {
  if (agent_id < 0 || agent_id >= static_cast<int>(state.agent_pos.size())) {
    throw Error(ErrorCode::precondition, "agent_id out of range");
  }
  const ObstacleGrid& grid = state.obstacles;
  const Cell self = state.agent_pos[static_cast<std::size_t>(agent_id)];
  const int half = fov / 2;

  AgentObservation obs;
  obs.fov = fov;
  obs.planes.assign(static_cast<std::size_t>(AgentObservation::kPlanes * fov * fov), 0);
  auto mark = [&](int plane, Cell cell) {
    const int r = cell.row - self.row + half;
    const int c = cell.col - self.col + half;
    if (r < 0 || r >= fov || c < 0 || c >= fov) return;
    obs.planes[static_cast<std::size_t>((plane * fov + r) * fov + c)] = 1;
  };

  for (int r = 0; r < fov; ++r) {
    for (int c = 0; c < fov; ++c) {
      const Cell cell{self.row - half + r, self.col - half + c};
      if (!grid.in_bounds(cell)) {
        obs.planes[static_cast<std::size_t>((AgentObservation::kOutOfBounds * fov + r) * fov + c)] = 1;
      } else if (grid.blocked(cell)) {
        obs.planes[static_cast<std::size_t>((AgentObservation::kObstacles * fov + r) * fov + c)] = 1;
      }
    }
  }
  for (const Cell& a : state.agent_pos) mark(AgentObservation::kAgents, a);
  for (const auto& p : state.prey_pos) {
    if (p) mark(AgentObservation::kPreys, *p);
  }
  obs.self_pos = {grid.height() > 1 ? static_cast<double>(self.row) / (grid.height() - 1) : 0.0,
                  grid.width() > 1 ? static_cast<double>(self.col) / (grid.width() - 1) : 0.0};
  return obs;
}

std::vector<std::uint8_t> occupancy_planes(const GridState& state) {
  const int w = state.obstacles.width();
  const int h = state.obstacles.height();
  const auto plane = static_cast<std::size_t>(w * h);
  std::vector<std::uint8_t> out(3 * plane, 0);
  for (const Cell& a : state.agent_pos) out[static_cast<std::size_t>(a.row * w + a.col)] = 1;
  for (const auto& p : state.prey_pos) {
    if (p) out[plane + static_cast<std::size_t>(p->row * w + p->col)] = 1;
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (state.obstacles.blocked({r, c})) out[2 * plane + static_cast<std::size_t>(r * w + c)] = 1;
    }
  }
  return out;
}

GridState init_episode(const GridConfig& config, std::uint64_t seed) {
  return init_episode(config, seed, config.obstacle_mode);
}

GridState init_episode(const GridConfig& config, std::uint64_t seed, ObstacleMode mode) {
  config.validate();
  GridState state;
  state.obstacles = generate_obstacles(mode, config.obstacle_density, config.width, config.height,
                                       mix_seed(seed, kObstacleStream));
  std::vector<Cell> free_cells;
  for (int r = 0; r < config.height; ++r) {
    for (int c = 0; c < config.width; ++c) {
      if (!state.obstacles.blocked({r, c})) free_cells.push_back({r, c});
    }
  }
  const auto needed = static_cast<std::size_t>(config.n_agents + config.n_preys);
  if (free_cells.size() < needed) {
    throw Error(ErrorCode::placement_failed, std::to_string(free_cells.size()) +
                                                 " free cells for " + std::to_string(needed) +
                                                 " agents and preys");
  }
  // Partial Fisher-Yates: the first `needed` cells are a uniform sample.
  Rng rng(mix_seed(seed, kPlacementStream));
  for (std::size_t i = 0; i < needed; ++i) {
    const std::size_t j = i + rng.index(free_cells.size() - i);
    std::swap(free_cells[i], free_cells[j]);
  }
  state.agent_pos.assign(free_cells.begin(), free_cells.begin() + config.n_agents);
  for (int i = 0; i < config.n_preys; ++i) {
    state.prey_pos.emplace_back(free_cells[static_cast<std::size_t>(config.n_agents + i)]);
  }
  return state;
}

GridWorld::GridWorld(GridConfig config) : config_(std::move(config)) { config_.validate(); }

const GridState& GridWorld::reset(std::uint64_t seed) { return reset(seed, config_.obstacle_mode); }

const GridState& GridWorld::reset(std::uint64_t seed, ObstacleMode mode) {
  state_ = init_episode(config_, seed, mode);
  rng_ = Rng(mix_seed(seed, kPreyStream));
  started_ = true;
  return state_;
}

const GridState& GridWorld::reset_from(GridState state, std::uint64_t seed) {
  const auto& g = state.obstacles;
  bool fits = g.width() == config_.width && g.height() == config_.height &&
              static_cast<int>(state.agent_pos.size()) == config_.n_agents &&
              static_cast<int>(state.prey_pos.size()) == config_.n_preys && state.step >= 0;
  int captured = 0;
  for (std::size_t i = 0; fits && i < state.agent_pos.size(); ++i) {
    fits = g.free(state.agent_pos[i]);
    for (std::size_t j = 0; fits && j < i; ++j) fits = state.agent_pos[i] != state.agent_pos[j];
  }
  for (const auto& p : state.prey_pos) {
    if (!p) {
      ++captured;
    } else if (fits) {
      fits = g.free(*p);
    }
  }
  if (!fits || captured != state.captured_count) {
    throw Error(ErrorCode::precondition, "explicit state does not fit the grid config");
  }
  state_ = std::move(state);
  rng_ = Rng(mix_seed(seed, kPreyStream));
  started_ = true;
  return state_;
}

bool GridWorld::done() const {
  return state_.captured_count == config_.n_preys || state_.step >= config_.max_steps;
}

AgentObservation GridWorld::observe(int agent_id) const {
  return semcomm::observe(state_, config_.fov, agent_id);
}

StepResult GridWorld::step(std::span<const Action> joint_actions) {
  if (!started_) throw Error(ErrorCode::precondition, "step before reset");
  if (done()) throw Error(ErrorCode::precondition, "step on a finished episode");
  if (joint_actions.size() != state_.agent_pos.size()) {
    throw Error(ErrorCode::bad_action_count, "expected " + std::to_string(state_.agent_pos.size()) +
                                                 " actions, got " +
                                                 std::to_string(joint_actions.size()));
  }
  const ObstacleGrid& grid = state_.obstacles;
  const std::size_t n = state_.agent_pos.size();
  StepResult result;
  int blocked_moves = 0;
  int conflicts = 0;

  std::vector<Cell> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = apply_action(state_.agent_pos[i], joint_actions[i]);
    if (!grid.free(target[i])) {
      target[i] = state_.agent_pos[i];
      if (joint_actions[i] != Action::stay) ++blocked_moves;
    }
  }
  // Revert contested moves until no two agents share a target.
  // Each pass marks every contested mover before reverting any of them.
  std::vector<std::uint8_t> revert(n);
  for (bool changed = true; changed;) {
    changed = false;
    std::fill(revert.begin(), revert.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (target[i] == state_.agent_pos[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && target[j] == target[i]) {
          revert[i] = 1;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!revert[i]) continue;
      target[i] = state_.agent_pos[i];
      ++conflicts;
      changed = true;
    }
  }
  result.next_state = state_;
  GridState& next = result.next_state;
  next.agent_pos = target;

  if (config_.prey_policy == PreyPolicy::random_walk) {
    std::array<Cell, kNumActions> legal{};
    for (auto& prey : next.prey_pos) {
      if (!prey) continue;
      int count = 0;
      for (int a = 0; a < kNumActions; ++a) {
        const Cell candidate = apply_action(*prey, static_cast<Action>(a));
        if (grid.free(candidate)) legal[static_cast<std::size_t>(count++)] = candidate;
      }
      prey = legal[rng_.index(static_cast<std::size_t>(count))];
    }
  }

  result.per_agent_captures.assign(n, 0);
  int new_captures = 0;
  for (auto& prey : next.prey_pos) {
    if (!prey) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (next.agent_pos[i] == *prey) {
        ++result.per_agent_captures[i];
        ++new_captures;
        prey.reset();
        break;
      }
    }
  }
  next.captured_count += new_captures;
  next.step += 1;

  result.reward = config_.capture_bonus * new_captures - config_.step_cost;
  result.done = next.captured_count == config_.n_preys || next.step >= config_.max_steps;
  result.info = {{"new_captures", new_captures},
                 {"blocked_moves", blocked_moves},
                 {"move_conflicts", conflicts}};
  state_ = result.next_state;
  return result;
}

std::optional<int> shortest_path_length(const ObstacleGrid& grid, Cell from, Cell to) {
  if (!grid.free(from) || !grid.free(to)) return std::nullopt;
  std::vector<int> dist(static_cast<std::size_t>(grid.width() * grid.height()), -1);
  std::deque<Cell> frontier{from};
  dist[static_cast<std::size_t>(from.row * grid.width() + from.col)] = 0;
  while (!frontier.empty()) {
    const Cell cell = frontier.front();
    frontier.pop_front();
    const int d = dist[static_cast<std::size_t>(cell.row * grid.width() + cell.col)];
    if (cell == to) return d;
    for (const Action a : {Action::up, Action::down, Action::left, Action::right}) {
      const Cell next = apply_action(cell, a);
      if (!grid.free(next)) continue;
      auto& slot = dist[static_cast<std::size_t>(next.row * grid.width() + next.col)];
      if (slot >= 0) continue;
      slot = d + 1;
      frontier.push_back(next);
    }
  }
  return std::nullopt;
}

void write_trajectory_record(std::ostream& out, const GridState& state,
                             std::span<const Action> actions, double reward, bool done) {
  nlohmann::json record;
  record["step"] = state.step;
  auto& agents = record["agents"] = nlohmann::json::array();
  for (const Cell& a : state.agent_pos) agents.push_back({a.row, a.col});
  auto& preys = record["preys"] = nlohmann::json::array();
  for (const auto& p : state.prey_pos) {
    if (p) {
      preys.push_back({p->row, p->col});
    } else {
      preys.push_back(nullptr);
    }
  }
  auto& acts = record["actions"] = nlohmann::json::array();
  for (const Action a : actions) acts.push_back(static_cast<int>(a));
  record["reward"] = reward;
  record["done"] = done;
  out << record.dump() << '\n';
}

}  // namespace semcomm
