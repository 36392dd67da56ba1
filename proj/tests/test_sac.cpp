#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "ar3n/sac.hpp"
#include "gradcheck.hpp"

using namespace ar3n;

namespace {

// Net whose output is its last-layer bias regardless of input.
Mlp constant_net(std::vector<int> widths, std::vector<double> bias) {
  Mlp net(std::move(widths));
  auto p = net.mutable_params();
  const int last = net.layer_count() - 1;
  for (std::size_t i = 0; i < bias.size(); ++i) p[net.bias_offset(last) + i] = bias[i];
  return net;
}

double log_std_mean(const Mlp& actor, const Matrix& states, const SacConfig& cfg) {
  double s = 0.0;
  for (int r = 0; r < states.rows; ++r) s += policy_head(actor.forward(states.row(r)), cfg).log_std;
  return s / states.rows;
}

}  // namespace

TEST_CASE("sampled actions stay in [0,1]") {
  SacConfig cfg;
  Rng rng(1);
  Mlp actor = Mlp::random({25, 32, 32, 32, 2}, rng);
  std::vector<double> obs(25, 0.2);
  for (int i = 0; i < 100000; ++i) {
    const ActionSample a = sample_action(actor, obs, cfg, rng);
    CHECK(a.action >= 0.0);
    CHECK(a.action <= 1.0);
    CHECK(std::isfinite(a.log_prob));
  }
}

TEST_CASE("vanishing std gives the squashed mean") {
  PolicyHead h{0.7, -20.0, false};
  for (double noise : {-3.0, 0.0, 2.5})
    CHECK(std::abs(squashed_gaussian(h, noise).action - squash(0.7)) < 1e-8);
}

TEST_CASE("squashed density integrates to one on [0,1]") {
  for (auto [mu, ls] : {std::pair{0.3, -0.2}, std::pair{-1.0, -1.5}, std::pair{0.0, 0.0}}) {
    const PolicyHead h{mu, ls, false};
    const int n = 10000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(squashed_log_density(h, (i + 0.5) / n)) / n;
    CAPTURE(mu);
    CHECK(std::abs(sum - 1.0) < 1e-3);
  }
}

TEST_CASE("sample log probability equals the density at the sampled action") {
  const PolicyHead h{0.2, -0.5, false};
  for (double noise : {-1.3, -0.2, 0.0, 0.9, 1.7}) {
    const ActionSample s = squashed_gaussian(h, noise);
    CHECK(s.log_prob == doctest::Approx(squashed_log_density(h, s.action)).epsilon(1e-9));
  }
}

TEST_CASE("log probability stays finite for saturated samples") {
  const PolicyHead h{0.0, 2.0, false};
  const ActionSample s = squashed_gaussian(h, 8.0);  // z = 8 e^2
  CHECK(std::isfinite(s.log_prob));
  // log(1 - tanh^2 z) ~ log 4 - 2z for large z
  const double z = s.z;
  const double expected = -32.0 - 2.0 - 0.5 * std::log(2 * std::numbers::pi) -
                          (std::log(4.0) - 2 * z) + std::log(2.0);
  CHECK(s.log_prob == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("log_std is clamped and flagged") {
  const SacConfig cfg;
  const double hi[] = {0.0, 5.0};
  CHECK(policy_head(hi, cfg).log_std == 2.0);
  CHECK(policy_head(hi, cfg).clamped);
  const double lo[] = {0.0, -30.0};
  CHECK(policy_head(lo, cfg).log_std == -20.0);
  const double mid[] = {0.0, 0.5};
  CHECK_FALSE(policy_head(mid, cfg).clamped);
}

TEST_CASE("zeroed actor gives the midpoint gain") {
  const Mlp actor({25, 32, 2});
  CHECK(deterministic_action(actor, std::vector<double>(25, 0.3)) == 0.5);
}

TEST_CASE("replay buffer is a ring with the oldest entry first") {
  ReplayBuffer buf(3, 1);
  for (int i = 0; i < 5; ++i) {
    const double s[] = {static_cast<double>(i)};
    buf.push(s, 0.1 * i, -i, s, i == 4);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.at(0).s(0, 0) == 2.0);
  CHECK(buf.at(1).s(0, 0) == 3.0);
  CHECK(buf.at(2).s(0, 0) == 4.0);
  CHECK(buf.at(2).done[0] == 1.0);
  CHECK(buf.at(0).a[0] == doctest::Approx(0.2));
  CHECK_THROWS_AS(buf.at(3), Error);
}

TEST_CASE("replay sampling draws without replacement") {
  ReplayBuffer buf(50, 1);
  for (int i = 0; i < 20; ++i) {
    const double s[] = {static_cast<double>(i)};
    buf.push(s, 0.0, 0.0, s, false);
  }
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const Batch b = buf.sample(20, rng);
    std::set<double> seen(b.s.data.begin(), b.s.data.end());
    CHECK(seen.size() == 20);
  }
  CHECK_THROWS_AS(buf.sample(21, rng), Error);
  const double wrong[] = {1.0, 2.0};
  CHECK_THROWS_AS(buf.push(wrong, 0, 0, wrong, false), Error);
}

TEST_CASE("soft update blends toward the online nets") {
  const SacConfig cfg;
  Rng rng(4);
  CriticPair c = make_critics(3, cfg, rng);
  Rng rng2(5);
  c.q1 = Mlp::random(c.q1.widths(), rng2);
  const std::vector<double> t0(c.q1_target.params().begin(), c.q1_target.params().end());
  const std::vector<double> o(c.q1.params().begin(), c.q1.params().end());

  CriticPair keep = c;
  soft_update(keep, 0.0);
  CHECK(std::equal(t0.begin(), t0.end(), keep.q1_target.params().begin()));

  CriticPair copy = c;
  soft_update(copy, 1.0);
  CHECK(std::equal(o.begin(), o.end(), copy.q1_target.params().begin()));

  soft_update(c, 0.5);
  soft_update(c, 0.5);
  for (std::size_t i = 0; i < o.size(); ++i)
    CHECK(c.q1_target.params()[i] == doctest::Approx(0.75 * o[i] + 0.25 * t0[i]));
}

TEST_CASE("terminal transitions target the reward alone") {
  SacConfig cfg;
  Rng rng(6);
  const Mlp actor = Mlp::random({4, 8, 2}, rng);
  const CriticPair critics = make_critics(4, cfg, rng);
  Batch b{gradcheck::random_matrix(3, 4, rng), {0.1, 0.5, 0.9}, {-0.3, -0.1, -0.7},
          gradcheck::random_matrix(3, 4, rng), {1.0, 1.0, 1.0}};
  const double noise[] = {0.3, -0.4, 1.1};
  const auto y = critic_targets(actor, critics, b, noise, cfg);
  CHECK(y[0] == -0.3);
  CHECK(y[1] == -0.1);
  CHECK(y[2] == -0.7);
}

TEST_CASE("single-transition target by hand") {
  SacConfig cfg;
  const Mlp actor = constant_net({2, 4, 2}, {0.3, -1.0});
  CriticPair critics;
  critics.q1_target = constant_net({3, 4, 1}, {0.7});
  critics.q2_target = constant_net({3, 4, 1}, {0.4});
  Batch b{Matrix(1, 2, 0.2), {0.6}, {-0.25}, Matrix(1, 2, 0.1), {0.0}};
  const double noise[] = {0.5};
  const double y = critic_targets(actor, critics, b, noise, cfg)[0];

  const double z = 0.3 + std::exp(-1.0) * 0.5;
  const double th = std::tanh(z);
  const double logp = -0.125 + 1.0 - 0.5 * std::log(2 * std::numbers::pi) -
                      std::log(1 - th * th) + std::log(2.0);
  const double expected = -0.25 + 0.5 * (0.4 - 0.5 * logp);
  CHECK(std::abs(y - expected) < 1e-8);

  critics.single = true;
  const double y1 = critic_targets(actor, critics, b, noise, cfg)[0];
  CHECK(std::abs(y1 - (-0.25 + 0.5 * (0.7 - 0.5 * logp))) < 1e-8);
}

TEST_CASE("clipped double-Q target never exceeds either target critic") {
  SacConfig cfg;
  Rng rng(7);
  const Mlp actor = Mlp::random({3, 8, 2}, rng);
  CriticPair c = make_critics(3, cfg, rng);
  Rng r2(8);
  c.q2_target = Mlp::random(c.q2_target.widths(), r2);
  Batch b{gradcheck::random_matrix(16, 3, rng), std::vector<double>(16, 0.5),
          std::vector<double>(16, 0.0), gradcheck::random_matrix(16, 3, rng),
          std::vector<double>(16, 0.0)};
  std::vector<double> noise(16, 0.0);
  const auto y = critic_targets(actor, c, b, noise, cfg);
  for (int i = 0; i < 16; ++i) {
    const auto raw = actor.forward(b.s2.row(i));
    const ActionSample s = squashed_gaussian(policy_head(raw, cfg), 0.0);
    std::vector<double> x(b.s2.row(i).begin(), b.s2.row(i).end());
    x.push_back(s.action);
    const double bonus = -cfg.chi * s.log_prob;
    CHECK(y[i] <= cfg.gamma * (c.q1_target.forward(x)[0] + bonus) + 1e-12);
    CHECK(y[i] <= cfg.gamma * (c.q2_target.forward(x)[0] + bonus) + 1e-12);
  }
}

TEST_CASE("repeated critic updates on one terminal transition reduce the loss") {
  SacConfig cfg;
  cfg.momentum = 0.0;
  cfg.learning_rate = 1e-3;
  Rng rng(9);
  const Mlp actor = Mlp::random({4, 8, 2}, rng);
  CriticPair c = make_critics(4, cfg, rng);
  Optimizer o1(c.q1.params().size(), cfg), o2(c.q2.params().size(), cfg);
  Batch b{gradcheck::random_matrix(1, 4, rng), {0.4}, {-0.8}, gradcheck::random_matrix(1, 4, rng),
          {1.0}};
  double prev = critic_update(c, o1, o2, actor, b, cfg, rng).q1;
  for (int i = 0; i < 100; ++i) {
    const double l = critic_update(c, o1, o2, actor, b, cfg, rng).q1;
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("actor loss gradient matches finite differences") {
  SacConfig cfg;
  Rng rng(10);
  Mlp actor = Mlp::random({5, 16, 16, 2}, rng);
  const CriticPair c = make_critics(5, cfg, rng);
  const Matrix states = gradcheck::random_matrix(6, 5, rng, 0.0, 0.5);
  const std::vector<double> noise{0.3, -1.2, 0.8, 0.05, -0.4, 1.5};
  CHECK(gradcheck::actor_loss_error(actor, c, states, noise, cfg) < 1e-3);
}

TEST_CASE("constant critics drive the policy toward higher entropy") {
  SacConfig cfg;
  cfg.optimizer = OptimizerKind::adam;
  cfg.learning_rate = 1e-2;
  Rng rng(11);
  Mlp actor = Mlp::random({3, 16, 2}, rng);
  actor.mutable_params()[actor.bias_offset(1) + 1] -= 2.0;  // start narrow
  CriticPair c;
  c.q1 = constant_net({4, 8, 1}, {0.2});
  c.q2 = constant_net({4, 8, 1}, {0.2});
  Optimizer opt(actor.params().size(), cfg);
  const Matrix probe = gradcheck::random_matrix(8, 3, rng, 0.0, 0.3);
  const double before = log_std_mean(actor, probe, cfg);
  for (int i = 0; i < 200; ++i) {
    Batch b{gradcheck::random_matrix(32, 3, rng, 0.0, 0.3), {}, {}, {}, {}};
    actor_update(actor, opt, c, b, cfg, rng);
  }
  CHECK(log_std_mean(actor, probe, cfg) > before);
}

TEST_CASE("with no entropy term a critic favouring a = 1 raises the mean action") {
  SacConfig cfg;
  cfg.chi = 0.0;
  cfg.optimizer = OptimizerKind::adam;
  cfg.learning_rate = 1e-2;
  Rng rng(12);
  Mlp actor = Mlp::random({3, 16, 2}, rng);
  // Q(s, a) = a
  Mlp q({4, 1});
  q.mutable_params()[3] = 1.0;
  CriticPair c{q, q, q, q, false};
  Optimizer opt(actor.params().size(), cfg);
  const std::vector<double> s{0.1, 0.2, 0.05};
  const double before = deterministic_action(actor, s);
  for (int i = 0; i < 200; ++i) {
    Batch b{gradcheck::random_matrix(32, 3, rng, 0.0, 0.3), {}, {}, {}, {}};
    actor_update(actor, opt, c, b, cfg, rng);
  }
  CHECK(deterministic_action(actor, s) > before + 0.1);
}

TEST_CASE("SGD with momentum follows m = mu m + g, p -= lr m") {
  SacConfig cfg;
  cfg.learning_rate = 0.1;
  Mlp net({1, 1});
  Optimizer opt(2, cfg);
  const double g[] = {1.0, -2.0};
  opt.step(net, g);
  CHECK(net.params()[0] == doctest::Approx(-0.1));
  CHECK(net.params()[1] == doctest::Approx(0.2));
  opt.step(net, g);
  CHECK(net.params()[0] == doctest::Approx(-0.1 - 0.1 * 1.9));
  CHECK(net.params()[1] == doctest::Approx(0.2 + 0.1 * 3.8));
}

TEST_CASE("Adam's first step moves each parameter by about lr") {
  SacConfig cfg;
  cfg.optimizer = OptimizerKind::adam;
  cfg.learning_rate = 0.01;
  Mlp net({1, 1});
  Optimizer opt(2, cfg);
  const double g[] = {3.0, -0.5};
  opt.step(net, g);
  CHECK(net.params()[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(net.params()[1] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("zero training steps return the initial model") {
  EnvConfig env;
  SacConfig cfg;
  cfg.total_steps = 0;
  const TrainResult r = train(env, cfg);
  const PolicyModel init = init_model(env, cfg);
  CHECK(r.curve.empty());
  CHECK(std::equal(init.actor.params().begin(), init.actor.params().end(),
                   r.model.actor.params().begin()));
}

TEST_CASE("training is reproducible for a fixed seed") {
  EnvConfig env;
  SacConfig cfg;
  cfg.total_steps = 2500;
  cfg.warmup_steps = 500;
  cfg.batch_size = 32;
  cfg.seed = 17;
  const TrainResult a = train(env, cfg);
  const TrainResult b = train(env, cfg);
  REQUIRE(a.curve.size() == b.curve.size());
  REQUIRE(!a.curve.empty());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].mean_reward == b.curve[i].mean_reward);
    CHECK(a.curve[i].seed == b.curve[i].seed);
    CHECK(a.curve[i].max_reward <= 0.0);
  }
  CHECK(std::equal(a.model.actor.params().begin(), a.model.actor.params().end(),
                   b.model.actor.params().begin()));
  cfg.seed = 18;
  const TrainResult c = train(env, cfg);
  CHECK(c.curve.front().seed != a.curve.front().seed);
}

TEST_CASE("config validation") {
  SacConfig c;
  CHECK_NOTHROW(c.validate());
  c.chi = 2.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SacConfig{};
  c.hidden.clear();
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_optimizer(to_string(OptimizerKind::adam)) == OptimizerKind::adam);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), Error);
}
