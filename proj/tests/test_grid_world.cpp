#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semcomm/error.hpp"
#include "semcomm/grid_world.hpp"

using namespace semcomm;

namespace {

GridConfig small_config(int side = 5) {
  GridConfig g;
  g.width = side;
  g.height = side;
  g.n_agents = 1;
  g.n_preys = 1;
  g.fov = 3;
  g.obstacle_density = 0.0;
  return g;
}

GridState make_state(const GridConfig& g, std::vector<Cell> agents, std::vector<Cell> preys) {
  GridState s;
  s.obstacles = ObstacleGrid(g.width, g.height);
  s.agent_pos = std::move(agents);
  for (const Cell& p : preys) s.prey_pos.emplace_back(p);
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

}  // namespace

TEST(InitEpisode, ZeroDensityPlacesDistinctCells) {
  GridConfig g;
  g.obstacle_density = 0.0;
  const GridState s = init_episode(g, 11);
  EXPECT_EQ(s.obstacles.count(), 0);
  std::set<Cell> cells(s.agent_pos.begin(), s.agent_pos.end());
  for (const auto& p : s.prey_pos) cells.insert(*p);
  EXPECT_EQ(cells.size(), 8u);
  EXPECT_EQ(s.step, 0);
  EXPECT_EQ(s.captured_count, 0);
}

TEST(InitEpisode, DeterministicInSeed) {
  const GridConfig g;
  EXPECT_EQ(init_episode(g, 7), init_episode(g, 7));
  EXPECT_FALSE(init_episode(g, 7) == init_episode(g, 8));
}

TEST(InitEpisode, PigeonholePlacementFails) {
  GridConfig g;
  g.width = 2;
  g.height = 2;
  g.fov = 1;
  g.obstacle_density = 0.0;
  EXPECT_EQ(code_of([&] { init_episode(g, 1); }), ErrorCode::placement_failed);
}

TEST(InitEpisode, AgentsAndPreysOnFreeCells) {
  const GridConfig g;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GridState s = init_episode(g, seed, ObstacleMode::dynamic_density);
    for (const Cell& a : s.agent_pos) EXPECT_TRUE(s.obstacles.free(a));
    for (const auto& p : s.prey_pos) EXPECT_TRUE(s.obstacles.free(*p));
  }
}

TEST(Obstacles, ZeroDensityIsEmpty) {
  EXPECT_EQ(generate_obstacles(ObstacleMode::fixed_regular, 0.0, 20, 20, 3).count(), 0);
}

TEST(Obstacles, FixedRegularLattice) {
  // Interior lattice with spacing 3 has 6 x 6 = 36 sites (< 40); spacing 2 has
  // 9 x 9 = 81, so 40 obstacles sit on even interior coordinates.
  const ObstacleGrid grid = generate_obstacles(ObstacleMode::fixed_regular, 0.10, 20, 20, 1);
  EXPECT_EQ(grid.count(), 40);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) {
      if (!grid.blocked({r, c})) continue;
      EXPECT_EQ(r % 2, 0);
      EXPECT_EQ(c % 2, 0);
      EXPECT_TRUE(r > 0 && r < 19 && c > 0 && c < 19);
    }
  }
  EXPECT_TRUE(grid.free_cells_connected());
  // Seed independent.
  EXPECT_EQ(grid, generate_obstacles(ObstacleMode::fixed_regular, 0.10, 20, 20, 99));
}

TEST(Obstacles, DynamicDensityDeterministicAndConnected) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = generate_obstacles(ObstacleMode::dynamic_density, 0.1, 20, 20, seed);
    EXPECT_EQ(a, generate_obstacles(ObstacleMode::dynamic_density, 0.1, 20, 20, seed));
    EXPECT_TRUE(a.free_cells_connected());
    EXPECT_LE(a.count(), 400 * 0.3);
  }
}

TEST(Obstacles, DynamicDensityMeanInDeclaredRange) {
  double total = 0.0;
  const int n = 400;
  for (int seed = 0; seed < n; ++seed) {
    total += generate_obstacles(ObstacleMode::dynamic_density, 0.1, 20, 20, static_cast<std::uint64_t>(seed)).count();
  }
  // U[0.05, 0.20] has mean 0.125; retries only remove dense, disconnected layouts.
  const double mean_density = total / n / 400.0;
  EXPECT_GT(mean_density, 0.10);
  EXPECT_LT(mean_density, 0.135);
}

TEST(Obstacles, RejectsBadDensity) {
  EXPECT_THROW(generate_obstacles(ObstacleMode::fixed_regular, -0.1, 20, 20, 0), Error);
  EXPECT_THROW(generate_obstacles(ObstacleMode::fixed_regular, 0.5, 20, 20, 0), Error);
}

TEST(Observe, PreyOffsetInWindow) {
  GridConfig g;
  g.n_agents = 1;
  g.n_preys = 1;
  const GridState s = make_state(g, {{10, 10}}, {{12, 12}});
  const AgentObservation o = observe(s, 7, 0);
  EXPECT_EQ(o.at(AgentObservation::kPreys, 3 + 2, 3 + 2), 1);
  int preys = 0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) preys += o.at(AgentObservation::kPreys, r, c);
  EXPECT_EQ(preys, 1);
}

TEST(Observe, CornerOutOfBounds) {
  GridConfig g;
  g.n_agents = 1;
  g.n_preys = 1;
  const GridState s = make_state(g, {{0, 0}}, {{15, 15}});
  const AgentObservation o = observe(s, 7, 0);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      EXPECT_EQ(o.at(AgentObservation::kOutOfBounds, r, c), (r < 3 || c < 3) ? 1 : 0) << r << "," << c;
    }
  }
}

TEST(Observe, LoneAgentAtCenter) {
  GridConfig g;
  g.n_agents = 1;
  g.n_preys = 1;
  GridState s = make_state(g, {{8, 9}}, {{0, 0}});
  s.prey_pos[0].reset();
  s.captured_count = 1;
  const AgentObservation o = observe(s, 7, 0);
  int agents = 0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) agents += o.at(AgentObservation::kAgents, r, c);
  EXPECT_EQ(agents, 1);
  EXPECT_EQ(o.at(AgentObservation::kAgents, 3, 3), 1);
  EXPECT_EQ(o.flat_dim(), 198);
  const Eigen::VectorXd flat = o.flatten();
  ASSERT_EQ(flat.size(), 198);
  EXPECT_DOUBLE_EQ(flat[196], 8.0 / 19.0);
  EXPECT_DOUBLE_EQ(flat[197], 9.0 / 19.0);
}

TEST(Step, CaptureWithStationaryPrey) {
  GridConfig g = small_config();
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  env.reset_from(make_state(g, {{2, 1}}, {{2, 2}}), 1);
  const Action a = Action::right;
  const StepResult r = env.step(std::span<const Action>(&a, 1));
  EXPECT_EQ(r.next_state.captured_count, 1);
  EXPECT_FALSE(r.next_state.prey_pos[0].has_value());
  EXPECT_DOUBLE_EQ(r.reward, g.capture_bonus - g.step_cost);
  EXPECT_EQ(r.per_agent_captures[0], 1);
  EXPECT_TRUE(r.done);
}

TEST(Step, BoxedRandomWalkPreyCapturedExactlyWhenItStays) {
  // Prey at (0, 2) boxed by the top edge and obstacles at (1, 2) and (0, 3):
  // its legal moves are stay and left (into the agent's old cell). The agent
  // steps right onto the prey's cell, so capture happens iff the prey stays.
  GridConfig g = small_config();
  int captured = 0;
  int escaped = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    GridState s = make_state(g, {{0, 1}}, {{0, 2}});
    s.obstacles.set({1, 2}, true);
    s.obstacles.set({0, 3}, true);
    GridWorld env(g);
    env.reset_from(s, seed);
    const Action a = Action::right;
    const StepResult r = env.step(std::span<const Action>(&a, 1));
    if (r.next_state.captured_count == 1) {
      ++captured;
      EXPECT_DOUBLE_EQ(r.reward, g.capture_bonus - g.step_cost);
    } else {
      ++escaped;
      ASSERT_TRUE(r.next_state.prey_pos[0].has_value());
      EXPECT_EQ(*r.next_state.prey_pos[0], (Cell{0, 1}));
      EXPECT_DOUBLE_EQ(r.reward, -g.step_cost);
    }
  }
  EXPECT_EQ(captured + escaped, 400);
  EXPECT_NEAR(captured / 400.0, 0.5, 0.1);
}

TEST(Step, BoundaryBlocksMove) {
  GridConfig g = small_config();
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  env.reset_from(make_state(g, {{0, 3}}, {{4, 4}}), 1);
  const Action a = Action::up;
  const StepResult r = env.step(std::span<const Action>(&a, 1));
  EXPECT_EQ(r.next_state.agent_pos[0], (Cell{0, 3}));
  EXPECT_EQ(r.info.at("blocked_moves"), 1);
}

TEST(Step, ObstacleBlocksMove) {
  GridConfig g = small_config();
  g.prey_policy = PreyPolicy::stationary;
  GridState s = make_state(g, {{2, 2}}, {{4, 4}});
  s.obstacles.set({2, 3}, true);
  GridWorld env(g);
  env.reset_from(s, 1);
  const Action a = Action::right;
  EXPECT_EQ(env.step(std::span<const Action>(&a, 1)).next_state.agent_pos[0], (Cell{2, 2}));
}

TEST(Step, FinishedEpisodeIsPrecondition) {
  GridConfig g = small_config();
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  env.reset_from(make_state(g, {{2, 1}}, {{2, 2}}), 1);
  const Action a = Action::right;
  env.step(std::span<const Action>(&a, 1));
  ASSERT_TRUE(env.done());
  EXPECT_EQ(code_of([&] { env.step(std::span<const Action>(&a, 1)); }), ErrorCode::precondition);
}

TEST(Step, WrongActionCount) {
  GridWorld env(small_config());
  env.reset(1);
  const std::vector<Action> two{Action::stay, Action::stay};
  EXPECT_EQ(code_of([&] { env.step(two); }), ErrorCode::bad_action_count);
}

TEST(Step, ContestedTargetsStay) {
  GridConfig g = small_config();
  g.n_agents = 3;
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  // Agents 0 and 1 both target (2, 2); agent 2 tries to enter agent 0's cell,
  // which stays occupied after the revert.
  env.reset_from(make_state(g, {{2, 1}, {2, 3}, {2, 0}}, {{4, 4}}), 1);
  const std::vector<Action> actions{Action::right, Action::left, Action::right};
  const StepResult r = env.step(actions);
  EXPECT_EQ(r.next_state.agent_pos[0], (Cell{2, 1}));
  EXPECT_EQ(r.next_state.agent_pos[1], (Cell{2, 3}));
  EXPECT_EQ(r.next_state.agent_pos[2], (Cell{2, 0}));
}

TEST(Step, SwapsAndFollowingAreAllowed) {
  GridConfig g = small_config();
  g.n_agents = 3;
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  env.reset_from(make_state(g, {{1, 1}, {1, 2}, {3, 0}}, {{4, 4}}), 1);
  // 0 and 1 swap; 2 moves into a free cell.
  const std::vector<Action> actions{Action::right, Action::left, Action::right};
  const StepResult r = env.step(actions);
  EXPECT_EQ(r.next_state.agent_pos[0], (Cell{1, 2}));
  EXPECT_EQ(r.next_state.agent_pos[1], (Cell{1, 1}));
  EXPECT_EQ(r.next_state.agent_pos[2], (Cell{3, 1}));
}

TEST(Step, EpisodeEndsAtMaxSteps) {
  GridConfig g = small_config();
  g.max_steps = 3;
  g.prey_policy = PreyPolicy::stationary;
  GridWorld env(g);
  env.reset_from(make_state(g, {{0, 0}}, {{4, 4}}), 1);
  const Action a = Action::stay;
  for (int i = 0; i < 3; ++i) {
    const StepResult r = env.step(std::span<const Action>(&a, 1));
    EXPECT_EQ(r.done, i == 2);
    EXPECT_DOUBLE_EQ(r.reward, -g.step_cost);
  }
}

TEST(Step, RandomWalkPreysStayOnFreeCells) {
  GridConfig g;
  GridWorld env(g);
  env.reset(5, ObstacleMode::dynamic_density);
  const std::vector<Action> stay(4, Action::stay);
  while (!env.done()) {
    const StepResult r = env.step(stay);
    for (const auto& p : r.next_state.prey_pos) {
      if (p) EXPECT_TRUE(r.next_state.obstacles.free(*p));
    }
  }
}

TEST(Step, DeterministicRollout) {
  GridConfig g;
  auto rollout = [&] {
    GridWorld env(g);
    env.reset(21);
    std::vector<GridState> states;
    const std::vector<Action> acts{Action::up, Action::left, Action::down, Action::right};
    while (!env.done()) states.push_back(env.step(acts).next_state);
    return states;
  };
  EXPECT_EQ(rollout(), rollout());
}

TEST(ResetFrom, RejectsInconsistentState) {
  GridConfig g = small_config();
  GridWorld env(g);
  EXPECT_THROW(env.reset_from(make_state(g, {{0, 0}, {1, 1}}, {{2, 2}}), 1), Error);
  GridState s = make_state(g, {{0, 0}}, {{2, 2}});
  s.obstacles.set({0, 0}, true);
  EXPECT_THROW(env.reset_from(s, 1), Error);
}

TEST(ShortestPath, AroundWall) {
  ObstacleGrid grid(5, 5);
  for (int r = 0; r < 4; ++r) grid.set({r, 2}, true);
  EXPECT_EQ(shortest_path_length(grid, {0, 0}, {0, 4}), 12);
  EXPECT_EQ(shortest_path_length(grid, {0, 0}, {0, 0}), 0);
  grid.set({4, 2}, true);
  EXPECT_FALSE(shortest_path_length(grid, {0, 0}, {0, 4}).has_value());
}

TEST(Trajectory, JsonRecord) {
  GridConfig g = small_config();
  GridState s = make_state(g, {{1, 2}}, {{3, 4}});
  std::ostringstream out;
  const Action a = Action::left;
  write_trajectory_record(out, s, std::span<const Action>(&a, 1), -0.1, false);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["agents"][0][0], 1);
  EXPECT_EQ(j["preys"][0][1], 4);
  EXPECT_EQ(j["actions"][0], 2);
  EXPECT_EQ(j["done"], false);
}

TEST(GridConfig, Violations) {
  GridConfig g;
  g.fov = 6;
  EXPECT_FALSE(g.violations().empty());
  EXPECT_THROW(g.validate(), Error);
  EXPECT_TRUE(GridConfig{}.violations().empty());
}

TEST(Step, MoveResolutionIndependentOfAgentOrder) {
  GridConfig g = small_config(6);
  g.n_agents = 4;
  g.fov = 3;
  g.prey_policy = PreyPolicy::stationary;
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    // Random distinct cells and actions; compare against a reversed labelling.
    std::vector<Cell> cells;
    while (cells.size() < 5) {
      const Cell c{static_cast<int>(rng.index(6)), static_cast<int>(rng.index(6))};
      if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
    }
    std::vector<Cell> agents(cells.begin(), cells.begin() + 4);
    std::vector<Action> actions;
    for (int i = 0; i < 4; ++i) actions.push_back(static_cast<Action>(rng.index(kNumActions)));

    GridWorld a(g);
    a.reset_from(make_state(g, agents, {cells[4]}), 1);
    const auto ra = a.step(actions).next_state.agent_pos;

    std::vector<Cell> rev_agents(agents.rbegin(), agents.rend());
    std::vector<Action> rev_actions(actions.rbegin(), actions.rend());
    GridWorld b(g);
    b.reset_from(make_state(g, rev_agents, {cells[4]}), 1);
    auto rb = b.step(rev_actions).next_state.agent_pos;
    std::reverse(rb.begin(), rb.end());
    ASSERT_EQ(ra, rb) << "trial " << trial;
    std::set<Cell> distinct(ra.begin(), ra.end());
    ASSERT_EQ(distinct.size(), 4u);
  }
}
