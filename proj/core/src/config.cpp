#include "semcomm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "semcomm/error.hpp"

namespace semcomm {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

struct BadValue {
  std::string expected;
};

long long parse_integer(const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"an integer"};
  return out;
}

int parse_int(const std::string& v) {
  const long long x = parse_integer(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw BadValue{"an integer in int range"};
  }
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"a non-negative integer"};
  return out;
}

double parse_double(const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  in >> out;
  if (in.fail() || !in.eof()) throw BadValue{"a number"};
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw BadValue{"a comma-separated list without empty items"};
    out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split_list(v)) out.push_back(parse_int(item));
  return out;
}

template <typename E>
E parse_enum(const std::string& v, std::initializer_list<std::pair<const char*, E>> choices) {
  std::string expected = "one of";
  for (const auto& [name, value] : choices) {
    if (v == name) return value;
    expected += std::string(" ") + name;
  }
  throw BadValue{expected};
}

std::string format_double(double x) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17) << x;
  return out.str();
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.width", [](auto& c, const auto& v) { c.grid.width = parse_int(v); }},
      {"grid.height", [](auto& c, const auto& v) { c.grid.height = parse_int(v); }},
      {"grid.n_agents", [](auto& c, const auto& v) { c.grid.n_agents = parse_int(v); }},
      {"grid.n_preys", [](auto& c, const auto& v) { c.grid.n_preys = parse_int(v); }},
      {"grid.fov", [](auto& c, const auto& v) { c.grid.fov = parse_int(v); }},
      {"grid.obstacle_mode",
       [](auto& c, const auto& v) {
         c.grid.obstacle_mode = parse_enum<ObstacleMode>(
             v, {{"fixed_regular", ObstacleMode::fixed_regular},
                 {"dynamic_density", ObstacleMode::dynamic_density}});
       }},
      {"grid.obstacle_density", [](auto& c, const auto& v) { c.grid.obstacle_density = parse_double(v); }},
      {"grid.max_steps", [](auto& c, const auto& v) { c.grid.max_steps = parse_int(v); }},
      {"grid.capture_bonus", [](auto& c, const auto& v) { c.grid.capture_bonus = parse_double(v); }},
      {"grid.step_cost", [](auto& c, const auto& v) { c.grid.step_cost = parse_double(v); }},
      {"grid.prey_policy",
       [](auto& c, const auto& v) {
         c.grid.prey_policy = parse_enum<PreyPolicy>(
             v, {{"random_walk", PreyPolicy::random_walk}, {"stationary", PreyPolicy::stationary}});
       }},
      {"wireless.n_subchannels", [](auto& c, const auto& v) { c.wireless.n_subchannels = parse_int(v); }},
      {"wireless.bandwidth_hz", [](auto& c, const auto& v) { c.wireless.link.bandwidth_hz = parse_double(v); }},
      {"wireless.tx_power_w", [](auto& c, const auto& v) { c.wireless.link.tx_power_w = parse_double(v); }},
      {"wireless.noise_power_w", [](auto& c, const auto& v) { c.wireless.link.noise_power_w = parse_double(v); }},
      {"wireless.step_duration_s", [](auto& c, const auto& v) { c.wireless.step_duration_s = parse_double(v); }},
      {"wireless.deadline_s", [](auto& c, const auto& v) { c.wireless.deadline_s = parse_double(v); }},
      {"wireless.bits_per_element", [](auto& c, const auto& v) { c.wireless.bits_per_element = parse_int(v); }},
      {"codec.feature_dim", [](auto& c, const auto& v) { c.codec.feature_dim = parse_int(v); }},
      {"codec.encoder_hidden", [](auto& c, const auto& v) { c.codec.encoder_hidden = parse_int(v); }},
      {"codec.l2_penalty", [](auto& c, const auto& v) { c.codec.l2_penalty = parse_double(v); }},
      {"learner.gamma", [](auto& c, const auto& v) { c.learner.gamma = parse_double(v); }},
      {"learner.buffer_capacity",
       [](auto& c, const auto& v) { c.learner.buffer_capacity = static_cast<std::size_t>(parse_u64(v)); }},
      {"learner.batch_size", [](auto& c, const auto& v) { c.learner.batch_size = parse_int(v); }},
      {"learner.optimizer",
       [](auto& c, const auto& v) {
         c.learner.optimizer = parse_enum<nn::OptimizerKind>(
             v, {{"adam", nn::OptimizerKind::adam}, {"sgd", nn::OptimizerKind::sgd}});
       }},
      {"learner.learning_rate", [](auto& c, const auto& v) { c.learner.learning_rate = parse_double(v); }},
      {"learner.epsilon_start", [](auto& c, const auto& v) { c.learner.epsilon_start = parse_double(v); }},
      {"learner.epsilon_end", [](auto& c, const auto& v) { c.learner.epsilon_end = parse_double(v); }},
      {"learner.epsilon_anneal_fraction",
       [](auto& c, const auto& v) { c.learner.epsilon_anneal_fraction = parse_double(v); }},
      {"learner.target_sync_period", [](auto& c, const auto& v) { c.learner.target_sync_period = parse_int(v); }},
      {"learner.train_interval", [](auto& c, const auto& v) { c.learner.train_interval = parse_int(v); }},
      {"learner.grad_clip", [](auto& c, const auto& v) { c.learner.grad_clip = parse_double(v); }},
      {"learner.lambda_time", [](auto& c, const auto& v) { c.learner.lambda_time = parse_double(v); }},
      {"learner.lambda_aoi", [](auto& c, const auto& v) { c.learner.lambda_aoi = parse_double(v); }},
      {"learner.agent_hidden", [](auto& c, const auto& v) { c.learner.agent_hidden = parse_int_list(v); }},
      {"learner.ap_hidden", [](auto& c, const auto& v) { c.learner.ap_hidden = parse_int_list(v); }},
      {"learner.hyper_hidden", [](auto& c, const auto& v) { c.learner.hyper_hidden = parse_int(v); }},
      {"learner.mixing_embed", [](auto& c, const auto& v) { c.learner.mixing_embed = parse_int(v); }},
      {"experiment.scheduler_mode",
       [](auto& c, const auto& v) {
         c.scheduler_mode = parse_enum<SchedulerMode>(v, {{"learned", SchedulerMode::learned},
                                                          {"random", SchedulerMode::random},
                                                          {"max_rate", SchedulerMode::max_rate}});
       }},
      {"experiment.n_train_episodes", [](auto& c, const auto& v) { c.n_train_episodes = parse_int(v); }},
      {"experiment.n_eval_episodes", [](auto& c, const auto& v) { c.n_eval_episodes = parse_int(v); }},
      {"experiment.eval_obstacle_mode",
       [](auto& c, const auto& v) {
         c.eval_obstacle_mode = parse_enum<ObstacleMode>(
             v, {{"fixed_regular", ObstacleMode::fixed_regular},
                 {"dynamic_density", ObstacleMode::dynamic_density}});
       }},
      {"experiment.seeds",
       [](auto& c, const auto& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) c.seeds.push_back(parse_u64(item));
       }},
      {"experiment.output_dir", [](auto& c, const auto& v) { c.output_dir = v; }},
      {"experiment.checkpoint_interval", [](auto& c, const auto& v) { c.checkpoint_interval = parse_int(v); }},
  };
  return table;
}

}  // namespace

std::string to_string(SchedulerMode mode) {
  switch (mode) {
    case SchedulerMode::learned: return "learned";
    case SchedulerMode::random: return "random";
    case SchedulerMode::max_rate: return "max_rate";
  }
  return "unknown";
}

ExperimentConfig::ExperimentConfig() { wireless.step_duration_s = wireless.deadline_s = 3e-4; }

std::vector<std::string> ExperimentConfig::violations() const {
  std::vector<std::string> out = grid.violations();
  if (grid.n_agents < 2) out.push_back("grid.n_agents must be >= 2 for channel scheduling");
  if (wireless.n_subchannels != 2) out.push_back("wireless.n_subchannels must be 2");
  if (!(wireless.link.bandwidth_hz > 0.0)) out.push_back("wireless.bandwidth_hz must be positive");
  if (!(wireless.link.noise_power_w > 0.0)) out.push_back("wireless.noise_power_w must be positive");
  if (!(wireless.link.tx_power_w >= 0.0)) out.push_back("wireless.tx_power_w must be >= 0");
  if (!(wireless.step_duration_s >= 0.0)) out.push_back("wireless.step_duration_s must be >= 0");
  if (!(wireless.deadline_s > 0.0)) out.push_back("wireless.deadline_s must be positive");
  if (wireless.bits_per_element < 1) out.push_back("wireless.bits_per_element must be >= 1");
  for (auto& v : codec.violations(observation_dim())) out.push_back(std::move(v));

  const auto& l = learner;
  if (!(l.gamma >= 0.0 && l.gamma < 1.0)) out.push_back("learner.gamma must lie in [0, 1)");
  if (l.batch_size < 1) out.push_back("learner.batch_size must be >= 1");
  if (l.buffer_capacity < static_cast<std::size_t>(std::max(l.batch_size, 1))) {
    out.push_back("learner.buffer_capacity must be >= batch_size");
  }
  if (!(l.learning_rate > 0.0)) out.push_back("learner.learning_rate must be positive");
  auto probability = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(std::string(name) + " must lie in [0, 1]");
  };
  probability(l.epsilon_start, "learner.epsilon_start");
  probability(l.epsilon_end, "learner.epsilon_end");
  probability(l.epsilon_anneal_fraction, "learner.epsilon_anneal_fraction");
  if (l.target_sync_period < 1) out.push_back("learner.target_sync_period must be >= 1");
  if (l.train_interval < 1) out.push_back("learner.train_interval must be >= 1");
  if (!(l.grad_clip >= 0.0)) out.push_back("learner.grad_clip must be >= 0");
  if (!(l.lambda_time >= 0.0) || !(l.lambda_aoi >= 0.0)) out.push_back("reward weights must be >= 0");
  auto widths = [&](const std::vector<int>& xs, const char* name) {
    for (const int x : xs) {
      if (x < 1) out.push_back(std::string(name) + " widths must be >= 1");
    }
  };
  widths(l.agent_hidden, "learner.agent_hidden");
  widths(l.ap_hidden, "learner.ap_hidden");
  if (l.hyper_hidden < 1 || l.mixing_embed < 1) out.push_back("mixing network widths must be >= 1");

  if (n_train_episodes < 0) out.push_back("experiment.n_train_episodes must be >= 0");
  if (n_eval_episodes < 0) out.push_back("experiment.n_eval_episodes must be >= 0");
  if (seeds.empty()) out.push_back("experiment.seeds must not be empty");
  if (checkpoint_interval < 0) out.push_back("experiment.checkpoint_interval must be >= 0");
  return out;
}

void ExperimentConfig::validate() const {
  const auto problems = violations();
  if (problems.empty()) return;
  std::string message;
  for (const auto& p : problems) message += (message.empty() ? "" : "; ") + p;
  throw Error(ErrorCode::validation_error, message);
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::parse_error,
                  "line " + std::to_string(line_number) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
      throw Error(ErrorCode::parse_error,
                  "line " + std::to_string(line_number) + ": unknown key \"" + key + "\"");
    }
    try {
      it->second(config, value);
    } catch (const BadValue& bad) {
      throw Error(ErrorCode::parse_error, "line " + std::to_string(line_number) + ": field \"" + key +
                                              "\" expects " + bad.expected + ", got \"" + value + "\"");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto line = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
  line("grid.width", std::to_string(c.grid.width));
  line("grid.height", std::to_string(c.grid.height));
  line("grid.n_agents", std::to_string(c.grid.n_agents));
  line("grid.n_preys", std::to_string(c.grid.n_preys));
  line("grid.fov", std::to_string(c.grid.fov));
  line("grid.obstacle_mode", to_string(c.grid.obstacle_mode));
  line("grid.obstacle_density", format_double(c.grid.obstacle_density));
  line("grid.max_steps", std::to_string(c.grid.max_steps));
  line("grid.capture_bonus", format_double(c.grid.capture_bonus));
  line("grid.step_cost", format_double(c.grid.step_cost));
  line("grid.prey_policy", to_string(c.grid.prey_policy));
  line("wireless.n_subchannels", std::to_string(c.wireless.n_subchannels));
  line("wireless.bandwidth_hz", format_double(c.wireless.link.bandwidth_hz));
  line("wireless.tx_power_w", format_double(c.wireless.link.tx_power_w));
  line("wireless.noise_power_w", format_double(c.wireless.link.noise_power_w));
  line("wireless.step_duration_s", format_double(c.wireless.step_duration_s));
  line("wireless.deadline_s", format_double(c.wireless.deadline_s));
  line("wireless.bits_per_element", std::to_string(c.wireless.bits_per_element));
  line("codec.feature_dim", std::to_string(c.codec.feature_dim));
  line("codec.encoder_hidden", std::to_string(c.codec.encoder_hidden));
  line("codec.l2_penalty", format_double(c.codec.l2_penalty));
  line("learner.gamma", format_double(c.learner.gamma));
  line("learner.buffer_capacity", std::to_string(c.learner.buffer_capacity));
  line("learner.batch_size", std::to_string(c.learner.batch_size));
  line("learner.optimizer", c.learner.optimizer == nn::OptimizerKind::adam ? "adam" : "sgd");
  line("learner.learning_rate", format_double(c.learner.learning_rate));
  line("learner.epsilon_start", format_double(c.learner.epsilon_start));
  line("learner.epsilon_end", format_double(c.learner.epsilon_end));
  line("learner.epsilon_anneal_fraction", format_double(c.learner.epsilon_anneal_fraction));
  line("learner.target_sync_period", std::to_string(c.learner.target_sync_period));
  line("learner.train_interval", std::to_string(c.learner.train_interval));
  line("learner.grad_clip", format_double(c.learner.grad_clip));
  line("learner.lambda_time", format_double(c.learner.lambda_time));
  line("learner.lambda_aoi", format_double(c.learner.lambda_aoi));
  line("learner.agent_hidden", join(c.learner.agent_hidden));
  line("learner.ap_hidden", join(c.learner.ap_hidden));
  line("learner.hyper_hidden", std::to_string(c.learner.hyper_hidden));
  line("learner.mixing_embed", std::to_string(c.learner.mixing_embed));
  line("experiment.scheduler_mode", to_string(c.scheduler_mode));
  line("experiment.n_train_episodes", std::to_string(c.n_train_episodes));
  line("experiment.n_eval_episodes", std::to_string(c.n_eval_episodes));
  line("experiment.eval_obstacle_mode", to_string(c.eval_obstacle_mode));
  line("experiment.seeds", join(c.seeds));
  line("experiment.output_dir", c.output_dir);
  line("experiment.checkpoint_interval", std::to_string(c.checkpoint_interval));
  return out.str();
}

}  // namespace semcomm
