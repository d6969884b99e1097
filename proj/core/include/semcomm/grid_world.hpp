#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semcomm/rng.hpp"

namespace semcomm {

struct Cell {
  int row = 0;
  int col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : std::uint8_t { up = 0, down = 1, left = 2, right = 3, stay = 4 };
inline constexpr int kNumActions = 5;

Cell apply_action(Cell cell, Action action);

enum class ObstacleMode { fixed_regular, dynamic_density };
enum class PreyPolicy { random_walk, stationary };

std::string to_string(ObstacleMode mode);
std::string to_string(PreyPolicy policy);

struct GridConfig {
  int width = 20;
  int height = 20;
  int n_agents = 4;
  int n_preys = 4;
  int fov = 7;
  ObstacleMode obstacle_mode = ObstacleMode::fixed_regular;
  double obstacle_density = 0.10;
  int max_steps = 200;
  double capture_bonus = 10.0;
  double step_cost = 0.1;
  PreyPolicy prey_policy = PreyPolicy::random_walk;
  std::uint64_t seed = 0;

  /// Violated invariants, one message each; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws VALIDATION_ERROR listing every violation.
  void validate() const;
};

/// Row-major occupancy grid; true marks an obstacle.
class ObstacleGrid {
 public:
  ObstacleGrid() = default;
  ObstacleGrid(int width, int height) : width_(width), height_(height), cells_(width * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }
  bool blocked(Cell c) const { return cells_[static_cast<std::size_t>(c.row * width_ + c.col)] != 0; }
  /// In bounds and not an obstacle.
  bool free(Cell c) const { return in_bounds(c) && !blocked(c); }
  void set(Cell c, bool value) { cells_[static_cast<std::size_t>(c.row * width_ + c.col)] = value ? 1 : 0; }
  int count() const;
  /// True when every free cell is reachable from every other via 4-neighbour moves.
  bool free_cells_connected() const;

  friend bool operator==(const ObstacleGrid&, const ObstacleGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Obstacle layouts. fixed_regular places exactly round(density * W * H)
/// obstacles on a regular lattice that keeps the border free; dynamic_density
/// draws a density from U[0.05, 0.20] and sets cells independently,
/// regenerating (up to 100 attempts) until free cells are 4-connected.
ObstacleGrid generate_obstacles(ObstacleMode mode, double density, int width, int height,
                                std::uint64_t seed);

struct GridState {
  std::vector<Cell> agent_pos;
  std::vector<std::optional<Cell>> prey_pos;  // nullopt once captured
  ObstacleGrid obstacles;
  int step = 0;
  int captured_count = 0;

  int active_preys() const;
  friend bool operator==(const GridState&, const GridState&) = default;
};

/// Local view of one agent. Planes are stored plane-major, each fov x fov
/// row-major, in the order agents, preys, obstacles, out-of-bounds.
struct AgentObservation {
  enum Plane : int { kAgents = 0, kPreys = 1, kObstacles = 2, kOutOfBounds = 3 };
  static constexpr int kPlanes = 4;

  int fov = 0;
  std::vector<std::uint8_t> planes;
  std::array<double, 2> self_pos{};  // (row, col) scaled to [0, 1]

  std::uint8_t at(Plane plane, int r, int c) const {
    return planes[static_cast<std::size_t>((plane * fov + r) * fov + c)];
  }
  static int flat_dim(int fov) { return kPlanes * fov * fov + 2; }
  int flat_dim() const { return flat_dim(fov); }
  /// Planes followed by self_pos.
  void flatten_into(Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd flatten() const;
};

AgentObservation observe(const GridState& state, int fov, int agent_id);

/// Full occupancy planes (agents, active preys, obstacles), each H x W.
std::vector<std::uint8_t> occupancy_planes(const GridState& state);

struct StepResult {
  GridState next_state;
  double reward = 0.0;
  std::vector<int> per_agent_captures;
  bool done = false;
  std::map<std::string, int> info;
};

/// One predator-prey episode with an instance-owned generator.
///
/// Agents move simultaneously. Moves off the grid or into obstacles stay put;
/// agents whose targets collide (or who would land on an agent that stays)
/// stay as well, resolved to a fixed point so the outcome does not depend on
/// agent order. Preys then random-walk over their legal moves (stay
/// included), in index order. A prey is captured when it shares a cell with
/// an agent after both phases.
class GridWorld {
 public:
  explicit GridWorld(GridConfig config);

  /// Fresh episode: obstacles per config, agents and preys on distinct
  /// free cells. Deterministic in (config, seed).
  const GridState& reset(std::uint64_t seed);
  /// Reset with an explicit obstacle mode (evaluation uses dynamic density).
  const GridState& reset(std::uint64_t seed, ObstacleMode mode);
  /// Starts from an explicit state (scenarios, tests); `seed` drives the preys.
  /// Throws PRECONDITION when the state does not fit the config.
  const GridState& reset_from(GridState state, std::uint64_t seed);

  StepResult step(std::span<const Action> joint_actions);

  const GridState& state() const { return state_; }
  const GridConfig& config() const { return config_; }
  bool done() const;

  AgentObservation observe(int agent_id) const;

 private:
  GridConfig config_;
  GridState state_;
  Rng rng_;
  bool started_ = false;
};

/// Standalone episode initialization matching GridWorld::reset.
GridState init_episode(const GridConfig& config, std::uint64_t seed);
GridState init_episode(const GridConfig& config, std::uint64_t seed, ObstacleMode mode);

/// Length of a shortest 4-neighbour path over free cells, or nullopt.
std::optional<int> shortest_path_length(const ObstacleGrid& grid, Cell from, Cell to);

/// Line-delimited JSON trajectory record.
void write_trajectory_record(std::ostream& out, const GridState& state,
                             std::span<const Action> actions, double reward, bool done);

}  // namespace semcomm
