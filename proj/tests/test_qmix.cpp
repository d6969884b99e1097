#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "semcomm/error.hpp"
#include "semcomm/qmix.hpp"

using namespace semcomm;
using namespace semcomm::learn;

namespace {

QmixDims tiny_dims(int n_agents = 3) {
  QmixDims d;
  d.n_agents = n_agents;
  d.observation_dim = 7;
  d.feature_dim = 3;
  d.n_actions = 4;
  d.state_dim = 6;
  return d;
}

QmixShape tiny_shape() {
  QmixShape s;
  s.encoder_hidden = 5;
  s.agent_hidden = {6, 5};
  s.hyper_hidden = 4;
  s.mixing_embed = 3;
  return s;
}

Eigen::MatrixXd uniform(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
  return m;
}

QmixBatch random_batch(const QmixDims& d, int b, Rng& rng, double done_probability = 0.3) {
  QmixBatch batch;
  batch.n_agents = d.n_agents;
  const Eigen::Index cols = static_cast<Eigen::Index>(b) * d.n_agents;
  batch.observations = uniform(d.observation_dim, cols, rng);
  batch.received = uniform(d.received_dim(), cols, rng);
  batch.next_observations = uniform(d.observation_dim, cols, rng);
  batch.next_received = uniform(d.received_dim(), cols, rng);
  batch.states = uniform(d.state_dim, b, rng);
  batch.next_states = uniform(d.state_dim, b, rng);
  batch.rewards = uniform(b, 1, rng).col(0);
  for (Eigen::Index i = 0; i < cols; ++i) batch.actions.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(d.n_actions))));
  for (int s = 0; s < b; ++s) batch.done.push_back(rng.bernoulli(done_probability) ? 1 : 0);
  return batch;
}

// Reference mixer written out from the definition.
double reference_mix(const QmixNetworks& nets, const Eigen::VectorXd& q, const Eigen::VectorXd& state) {
  const Eigen::VectorXd h = nn::predict(nets.hyper_trunk, state).col(0);
  const Eigen::VectorXd w1 = nn::predict(nets.hyper_w1, h).col(0);
  const Eigen::VectorXd b1 = nn::predict(nets.hyper_b1, h).col(0);
  const Eigen::VectorXd w2 = nn::predict(nets.hyper_w2, h).col(0);
  const double b2 = nn::predict(nets.hyper_b2, h)(0, 0);
  const int embed = static_cast<int>(b1.size());
  double total = b2;
  for (int k = 0; k < embed; ++k) {
    double pre = b1[k];
    for (int i = 0; i < q.size(); ++i) pre += w1[i * embed + k] * q[i];
    total += w2[k] * (pre > 0 ? pre : std::expm1(pre));
  }
  return total;
}

}  // namespace

TEST(QmixMix, MatchesReferenceFormula) {
  Rng rng(1);
  const QmixDims d = tiny_dims();
  for (int t = 0; t < 50; ++t) {
    const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
    const Eigen::VectorXd q = uniform(d.n_agents, 1, rng, 5.0).col(0);
    const Eigen::VectorXd s = uniform(d.state_dim, 1, rng).col(0);
    EXPECT_NEAR(qmix_mix(q, s, nets), reference_mix(nets, q, s), 1e-12);
  }
}

TEST(QmixMix, OnlyB2NonZero) {
  Rng rng(2);
  const QmixDims d = tiny_dims();
  QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
  for (auto* g : {&nets.hyper_w1, &nets.hyper_b1, &nets.hyper_w2, &nets.hyper_b2}) g->values.setZero();
  nets.hyper_b2.values[nets.hyper_b2.size() - 1] = 3.7;
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd q = uniform(d.n_agents, 1, rng, 10.0).col(0);
    EXPECT_DOUBLE_EQ(qmix_mix(q, uniform(d.state_dim, 1, rng).col(0), nets), 3.7);
  }
}

TEST(QmixMix, IncreasingAnyAgentValueNeverDecreasesTotal) {
  Rng rng(3);
  const QmixDims d = tiny_dims(4);
  for (int t = 0; t < 1000; ++t) {
    const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
    const Eigen::VectorXd s = uniform(d.state_dim, 1, rng, 2.0).col(0);
    const Eigen::VectorXd q = uniform(d.n_agents, 1, rng, 10.0).col(0);
    const double base = qmix_mix(q, s, nets);
    for (int i = 0; i < d.n_agents; ++i) {
      Eigen::VectorXd up = q;
      up[i] += rng.uniform(1e-6, 5.0);
      ASSERT_GE(qmix_mix(up, s, nets), base);
    }
  }
}

TEST(QmixMix, ShapeErrors) {
  Rng rng(4);
  const QmixDims d = tiny_dims();
  const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
  EXPECT_THROW(qmix_mix(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(d.state_dim), nets), Error);
  EXPECT_THROW(qmix_mix(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), nets), Error);
}

TEST(AgentInputs, LayoutWithOneHotIds) {
  Eigen::MatrixXd f(2, 6);
  f.setConstant(1.0);
  Eigen::MatrixXd r(3, 6);
  r.setConstant(2.0);
  const Eigen::MatrixXd in = agent_inputs(f, r, 3);
  ASSERT_EQ(in.rows(), 2 + 3 + 3);
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < 3; ++i) EXPECT_EQ(in(5 + i, c), i == c % 3 ? 1.0 : 0.0);
    EXPECT_EQ(in(0, c), 1.0);
    EXPECT_EQ(in(4, c), 2.0);
  }
  EXPECT_EQ(tiny_dims().agent_input_dim(), 3 + 8 + 3);
  EXPECT_EQ(QmixDims{}.agent_input_dim(), 16 + 51 + 4);
}

TEST(QmixTargets, TerminalBatchEqualsRewards) {
  Rng rng(5);
  const QmixDims d = tiny_dims();
  const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
  const QmixBatch batch = random_batch(d, 8, rng, 1.0);
  EXPECT_EQ(qmix_targets(nets, batch, 0.99), batch.rewards);
}

TEST(QmixTargets, NonTerminalUsesGreedyMix) {
  Rng rng(6);
  const QmixDims d = tiny_dims();
  const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
  const QmixBatch batch = random_batch(d, 5, rng, 0.0);
  const Eigen::VectorXd y = qmix_targets(nets, batch, 0.9);
  const Eigen::MatrixXd next_q = agent_q_values(nets, batch.next_observations, batch.next_received);
  for (int s = 0; s < 5; ++s) {
    Eigen::VectorXd greedy(d.n_agents);
    for (int i = 0; i < d.n_agents; ++i) greedy[i] = next_q.col(s * d.n_agents + i).maxCoeff();
    EXPECT_NEAR(y[s], batch.rewards[s] + 0.9 * reference_mix(nets, greedy, batch.next_states.col(s)), 1e-12);
  }
}

TEST(QmixLoss, GradientsMatchFiniteDifferencesPerGroup) {
  Rng rng(7);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const QmixDims d = tiny_dims(2 + trial % 3);
    QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
    const QmixBatch batch = random_batch(d, 4, rng);
    const Eigen::VectorXd targets = uniform(4, 1, rng, 2.0).col(0);
    const double l2 = 0.01;
    const QmixLoss loss = qmix_loss_gradient(nets, targets, batch, l2);
    EXPECT_GE(loss.td_loss, 0.0);
    EXPECT_GE(loss.total_loss, loss.td_loss);
    auto groups = nets.groups();
    for (std::size_t k = 0; k < groups.size(); ++k) {
      Eigen::VectorXd numeric(groups[k]->size());
      for (Eigen::Index i = 0; i < numeric.size(); ++i) {
        const double orig = groups[k]->values[i];
        groups[k]->values[i] = orig + h;
        const double up = qmix_loss_gradient(nets, targets, batch, l2).total_loss;
        groups[k]->values[i] = orig - h;
        const double down = qmix_loss_gradient(nets, targets, batch, l2).total_loss;
        groups[k]->values[i] = orig;
        numeric[i] = (up - down) / (2 * h);
      }
      const Eigen::VectorXd& analytic = loss.gradients[k];
      const double denom = analytic.norm() + numeric.norm();
      ASSERT_LT(denom == 0.0 ? 0.0 : (analytic - numeric).norm() / denom, 1e-4)
          << "trial " << trial << " group " << k;
    }
  }
}

TEST(QmixUpdate, LossStaysFiniteOverManyUpdates) {
  Rng rng(8);
  const QmixDims d = tiny_dims();
  QmixNetworks online = make_qmix_networks(d, tiny_shape(), rng);
  QmixNetworks target = online;
  std::array<nn::OptimizerState, QmixNetworks::kGroups> states;
  UpdateConfig cfg;
  cfg.optimizer.learning_rate = 1e-3;
  const TargetSync sync{SyncMode::hard, 50, 0.0};
  for (int u = 1; u <= 10000; ++u) {
    QmixBatch batch = random_batch(d, 4, rng);
    batch.rewards *= 5.0;
    const double loss = qmix_update(online, target, batch, 1e-3, states, cfg);
    ASSERT_TRUE(std::isfinite(loss)) << "update " << u;
    ASSERT_GE(loss, 0.0);
    target_sync(online, target, sync, u);
  }
  for (const auto* g : online.groups()) EXPECT_TRUE(g->values.allFinite());
}

TEST(QmixUpdate, TargetSyncCopiesEveryGroup) {
  Rng rng(9);
  const QmixDims d = tiny_dims();
  const QmixNetworks online = make_qmix_networks(d, tiny_shape(), rng);
  QmixNetworks target = make_qmix_networks(d, tiny_shape(), rng);
  const QmixNetworks original = target;
  target_sync(online, target, TargetSync{SyncMode::hard, 10, 0.0}, 9);
  EXPECT_EQ(target, original);
  target_sync(online, target, TargetSync{SyncMode::hard, 10, 0.0}, 10);
  EXPECT_EQ(target, online);
  target = original;
  target_sync(online, target, TargetSync{SyncMode::soft, 1, 0.0}, 1);
  EXPECT_EQ(target, original);
}

TEST(QmixLoss, BadBatchShape) {
  Rng rng(10);
  const QmixDims d = tiny_dims();
  const QmixNetworks nets = make_qmix_networks(d, tiny_shape(), rng);
  QmixBatch batch = random_batch(d, 3, rng);
  batch.actions.pop_back();
  EXPECT_THROW(qmix_loss_gradient(nets, Eigen::VectorXd::Zero(3), batch, 0.0), Error);
  QmixBatch bad_action = random_batch(d, 3, rng);
  bad_action.actions[0] = d.n_actions;
  EXPECT_THROW(qmix_loss_gradient(nets, Eigen::VectorXd::Zero(3), bad_action, 0.0), Error);
}
