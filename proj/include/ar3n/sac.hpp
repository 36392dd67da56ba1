#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ar3n/env.hpp"
#include "ar3n/mlp.hpp"

namespace ar3n {

enum class OptimizerKind { sgd_momentum, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct SacConfig {
  double learning_rate = 1e-5;
  int batch_size = 128;
  double gamma = 0.5;
  double chi = 0.5;  // fixed entropy temperature
  double tau = 0.005;
  int warmup_steps = 1000;
  int total_steps = 50'000;
  int updates_per_step = 1;
  int buffer_capacity = 100'000;
  std::vector<int> hidden{32, 32, 32};
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  OptimizerKind optimizer = OptimizerKind::sgd_momentum;
  double momentum = 0.9;
  bool single_critic = false;
  std::uint64_t seed = 1;

  void validate() const;
};

class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(std::size_t n, const SacConfig& config);
  void step(Mlp& net, std::span<const double> grad);

 private:
  OptimizerKind kind_ = OptimizerKind::sgd_momentum;
  double lr_ = 0.0;
  double momentum_ = 0.9;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

// ---- squashed Gaussian policy -------------------------------------------

/// Affine map of tanh from [-1,1] onto the gain range [0,1].
double squash(double z);

struct PolicyHead {
  double mean = 0.0;
  double log_std = 0.0;  // after clamping
  bool clamped = false;
};

PolicyHead policy_head(std::span<const double> raw, const SacConfig& config);

struct ActionSample {
  double action = 0.0;    // in [0,1]
  double log_prob = 0.0;  // density of `action` on [0,1]
  double z = 0.0;         // pre-squash value mean + std * noise
};

/// Reparameterized sample; log_prob carries the tanh Jacobian and the
/// [-1,1] -> [0,1] rescale.
ActionSample squashed_gaussian(const PolicyHead& head, double noise);

/// Log density of a in (0,1) under the squashed Gaussian.
double squashed_log_density(const PolicyHead& head, double a);

ActionSample sample_action(const Mlp& actor, std::span<const double> obs,
                           const SacConfig& config, Rng& rng);
/// Squashed mean action, no sampling.
double deterministic_action(const Mlp& actor, std::span<const double> obs);

// ---- critics ------------------------------------------------------------

struct CriticPair {
  Mlp q1;
  Mlp q2;
  Mlp q1_target;
  Mlp q2_target;
  bool single = false;  // use q1 alone (literal single soft Q-function)
};

CriticPair make_critics(int state_dim, const SacConfig& config, Rng& rng);

/// theta' <- tau * theta + (1 - tau) * theta'
void soft_update(CriticPair& critics, double tau);

// ---- replay -------------------------------------------------------------

struct Batch {
  Matrix s;
  std::vector<double> a;
  std::vector<double> r;
  Matrix s2;
  std::vector<double> done;
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim);

  void push(std::span<const double> s, double a, double r, std::span<const double> s2,
            bool done);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Uniform, without replacement within the batch.
  Batch sample(std::size_t batch_size, Rng& rng) const;
  /// Transition at logical position i, 0 = oldest retained.
  Batch at(std::size_t i) const;

 private:
  void copy_into(Batch& b, int row, std::size_t slot) const;

  std::size_t capacity_;
  int dim_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::vector<double> s_, s2_, a_, r_, done_;
};

// ---- updates ------------------------------------------------------------

/// y = r + gamma (1 - done) (min target Q(s', a') - chi log pi(a'|s')) with a'
/// drawn from the current policy using the given standard-normal noise.
std::vector<double> critic_targets(const Mlp& actor, const CriticPair& critics,
                                   const Batch& batch, std::span<const double> noise,
                                   const SacConfig& config);

struct CriticLoss {
  double q1 = 0.0;
  double q2 = 0.0;
};

CriticLoss critic_update(CriticPair& critics, Optimizer& opt1, Optimizer& opt2,
                         const Mlp& actor, const Batch& batch, const SacConfig& config,
                         Rng& rng);

struct ActorLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d actor params
  double mean_log_prob = 0.0;
};

/// Mean over the batch of chi log pi(a|s) - min_i Q_i(s, a), a reparameterized
/// from the given noise, and its exact gradient.
ActorLoss actor_loss(const Mlp& actor, const CriticPair& critics, const Matrix& states,
                     std::span<const double> noise, const SacConfig& config);

double actor_update(Mlp& actor, Optimizer& opt, const CriticPair& critics, const Batch& batch,
                    const SacConfig& config, Rng& rng);

// ---- model and training -------------------------------------------------

struct PolicyModel {
  SacConfig sac;
  EnvConfig env;
  Mlp actor;
  CriticPair critics;
};

PolicyModel init_model(const EnvConfig& env, const SacConfig& sac);

struct EpisodeStat {
  int episode = 0;
  long end_step = 0;  // environment steps taken when the episode finished
  int steps = 0;
  Shape shape = Shape::circle;
  std::uint64_t seed = 0;  // env reset seed
  double mean_reward = 0.0;
  double max_reward = -std::numeric_limits<double>::infinity();  // largest step reward
  double mean_error = 0.0;
  double mean_kappa = 0.0;
  bool terminal = false;
};

struct TrainResult {
  PolicyModel model;
  std::vector<EpisodeStat> curve;
};

/// Off-policy SAC on the virtual-patient environment. Each episode picks a
/// training shape uniformly. Throws ar3n::Error on a non-finite loss.
TrainResult train(const EnvConfig& env_config, const SacConfig& config,
                  const std::function<void(const EpisodeStat&)>& on_episode = {});

}  // namespace ar3n
