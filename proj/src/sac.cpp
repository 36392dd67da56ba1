#include "ar3n/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ar3n {

namespace {

constexpr double kLog2 = std::numbers::ln2;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(z)^2), stable for large |z|.
double log_one_minus_tanh2(double z) { return 2.0 * (kLog2 - z - softplus(-2.0 * z)); }

Matrix critic_input(const Matrix& s, std::span<const double> a) {
  Matrix x(s.rows, s.cols + 1);
  for (int r = 0; r < s.rows; ++r) {
    std::copy(s.row(r).begin(), s.row(r).end(), x.row(r).begin());
    x(r, s.cols) = a[r];
  }
  return x;
}

std::vector<double> standard_normals(std::size_t n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(std::string("non-finite ") + what + " during training");
}

}  // namespace

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd_momentum";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::sgd_momentum;
  throw Error("unknown optimizer: " + std::string(name));
}

void SacConfig::validate() const {
  if (!(learning_rate > 0) || batch_size < 1 || !(tau >= 0 && tau <= 1))
    throw Error("invalid SAC learning parameters");
  if (chi < 0 || chi > 1) throw Error("chi must lie in [0,1]");
  if (gamma < 0 || gamma > 1) throw Error("gamma must lie in [0,1]");
  if (warmup_steps < 0 || total_steps < 0 || updates_per_step < 0 || buffer_capacity < 1)
    throw Error("invalid SAC step counts");
  if (hidden.empty()) throw Error("SAC networks need at least one hidden layer");
}

// ---- optimizer ------------------------------------------------------------

Optimizer::Optimizer(std::size_t n, const SacConfig& config)
    : kind_(config.optimizer), lr_(config.learning_rate), momentum_(config.momentum),
      m_(n, 0.0) {
  if (kind_ == OptimizerKind::adam) v_.assign(n, 0.0);
}

void Optimizer::step(Mlp& net, std::span<const double> grad) {
  auto p = net.mutable_params();
  if (grad.size() != p.size() || m_.size() != p.size())
    throw Error("optimizer size does not match the network");
  if (kind_ == OptimizerKind::sgd_momentum) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[i] = momentum_ * m_[i] + grad[i];
      p[i] -= lr_ * m_[i];
    }
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = b1 * m_[i] + (1 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1 - b2) * grad[i] * grad[i];
    p[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

// ---- policy ---------------------------------------------------------------

double squash(double z) { return 0.5 * (std::tanh(z) + 1.0); }

PolicyHead policy_head(std::span<const double> raw, const SacConfig& config) {
  PolicyHead h;
  h.mean = raw[0];
  h.log_std = std::clamp(raw[1], config.log_std_min, config.log_std_max);
  h.clamped = raw[1] != h.log_std;
  return h;
}

ActionSample squashed_gaussian(const PolicyHead& head, double noise) {
  ActionSample s;
  s.z = head.mean + std::exp(head.log_std) * noise;
  s.action = squash(s.z);
  s.log_prob = -0.5 * noise * noise - head.log_std - kHalfLog2Pi - log_one_minus_tanh2(s.z) +
               kLog2;
  return s;
}

double squashed_log_density(const PolicyHead& head, double a) {
  const double z = std::atanh(2.0 * a - 1.0);
  const double xi = (z - head.mean) / std::exp(head.log_std);
  return -0.5 * xi * xi - head.log_std - kHalfLog2Pi - log_one_minus_tanh2(z) + kLog2;
}

ActionSample sample_action(const Mlp& actor, std::span<const double> obs,
                           const SacConfig& config, Rng& rng) {
  const auto raw = actor.forward(obs);
  std::normal_distribution<double> dist(0.0, 1.0);
  return squashed_gaussian(policy_head(raw, config), dist(rng));
}

double deterministic_action(const Mlp& actor, std::span<const double> obs) {
  return squash(actor.forward(obs)[0]);
}

// ---- critics --------------------------------------------------------------

CriticPair make_critics(int state_dim, const SacConfig& config, Rng& rng) {
  std::vector<int> widths{state_dim + 1};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);
  CriticPair c;
  c.q1 = Mlp::random(widths, rng);
  c.q2 = Mlp::random(widths, rng);
  c.q1_target = c.q1;
  c.q2_target = c.q2;
  c.single = config.single_critic;
  return c;
}

void soft_update(CriticPair& critics, double tau) {
  auto blend = [tau](const Mlp& online, Mlp& target) {
    auto src = online.params();
    auto dst = target.mutable_params();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
  };
  blend(critics.q1, critics.q1_target);
  blend(critics.q2, critics.q2_target);
}

// ---- replay ---------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim)
    : capacity_(capacity), dim_(state_dim) {
  if (capacity == 0 || state_dim < 1) throw Error("invalid replay buffer shape");
  s_.resize(capacity * dim_);
  s2_.resize(capacity * dim_);
  a_.resize(capacity);
  r_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> s, double a, double r,
                        std::span<const double> s2, bool done) {
  if (static_cast<int>(s.size()) != dim_ || static_cast<int>(s2.size()) != dim_)
    throw Error("transition width does not match the replay buffer");
  std::copy(s.begin(), s.end(), s_.begin() + head_ * dim_);
  std::copy(s2.begin(), s2.end(), s2_.begin() + head_ * dim_);
  a_[head_] = a;
  r_[head_] = r;
  done_[head_] = done ? 1.0 : 0.0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

void ReplayBuffer::copy_into(Batch& b, int row, std::size_t slot) const {
  std::copy_n(s_.begin() + slot * dim_, dim_, b.s.row(row).begin());
  std::copy_n(s2_.begin() + slot * dim_, dim_, b.s2.row(row).begin());
  b.a[row] = a_[slot];
  b.r[row] = r_[slot];
  b.done[row] = done_[slot];
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size > size_) throw Error("replay buffer holds fewer transitions than the batch");
  // Floyd's algorithm: distinct indices in O(batch) draws.
  std::vector<std::size_t> picks;
  picks.reserve(batch_size);
  for (std::size_t j = size_ - batch_size; j < size_; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    const bool seen = std::find(picks.begin(), picks.end(), t) != picks.end();
    picks.push_back(seen ? j : t);
  }
  const int n = static_cast<int>(batch_size);
  Batch b{Matrix(n, dim_), std::vector<double>(n), std::vector<double>(n), Matrix(n, dim_),
          std::vector<double>(n)};
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  for (int i = 0; i < n; ++i) copy_into(b, i, (oldest + picks[i]) % capacity_);
  return b;
}

Batch ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw Error("replay index out of range");
  Batch b{Matrix(1, dim_), {0.0}, {0.0}, Matrix(1, dim_), {0.0}};
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  copy_into(b, 0, (oldest + i) % capacity_);
  return b;
}

// ---- updates --------------------------------------------------------------

std::vector<double> critic_targets(const Mlp& actor, const CriticPair& critics,
                                   const Batch& batch, std::span<const double> noise,
                                   const SacConfig& config) {
  const int n = batch.s2.rows;
  const Matrix raw = actor.forward(batch.s2);
  std::vector<double> a2(n), logp2(n);
  for (int i = 0; i < n; ++i) {
    const ActionSample s = squashed_gaussian(policy_head(raw.row(i), config), noise[i]);
    a2[i] = s.action;
    logp2[i] = s.log_prob;
  }
  const Matrix x2 = critic_input(batch.s2, a2);
  const Matrix t1 = critics.q1_target.forward(x2);
  Matrix t2;
  if (!critics.single) t2 = critics.q2_target.forward(x2);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    const double q = critics.single ? t1.data[i] : std::min(t1.data[i], t2.data[i]);
    y[i] = batch.r[i] + config.gamma * (1.0 - batch.done[i]) * (q - config.chi * logp2[i]);
  }
  return y;
}

CriticLoss critic_update(CriticPair& critics, Optimizer& opt1, Optimizer& opt2,
                         const Mlp& actor, const Batch& batch, const SacConfig& config,
                         Rng& rng) {
  const int n = batch.s.rows;
  const auto noise = standard_normals(n, rng);
  const auto y = critic_targets(actor, critics, batch, noise, config);
  const Matrix x = critic_input(batch.s, batch.a);

  auto fit = [&](Mlp& q, Optimizer& opt) {
    MlpCache cache;
    const Matrix out = q.forward(x, &cache);
    Matrix dy(n, 1);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = out.data[i] - y[i];
      loss += d * d;
      dy.data[i] = 2.0 * d / n;
    }
    loss /= n;
    check_finite(loss, "critic loss");
    opt.step(q, q.backward(cache, dy).params);
    return loss;
  };

  CriticLoss l;
  l.q1 = fit(critics.q1, opt1);
  if (!critics.single) l.q2 = fit(critics.q2, opt2);
  return l;
}

ActorLoss actor_loss(const Mlp& actor, const CriticPair& critics, const Matrix& states,
                     std::span<const double> noise, const SacConfig& config) {
  const int n = states.rows;
  MlpCache actor_cache;
  const Matrix raw = actor.forward(states, &actor_cache);

  std::vector<double> a(n);
  std::vector<ActionSample> samples(n);
  std::vector<PolicyHead> heads(n);
  for (int i = 0; i < n; ++i) {
    heads[i] = policy_head(raw.row(i), config);
    samples[i] = squashed_gaussian(heads[i], noise[i]);
    a[i] = samples[i].action;
  }

  const Matrix x = critic_input(states, a);
  MlpCache c1, c2;
  const Matrix q1 = critics.q1.forward(x, &c1);
  Matrix q2;
  if (!critics.single) q2 = critics.q2.forward(x, &c2);

  // Route d loss / d Q_min = -1/n to whichever critic attains the minimum.
  Matrix dq1(n, 1), dq2(n, 1);
  ActorLoss out;
  for (int i = 0; i < n; ++i) {
    const bool use1 = critics.single || q1.data[i] <= q2.data[i];
    const double qmin = use1 ? q1.data[i] : q2.data[i];
    (use1 ? dq1 : dq2).data[i] = -1.0 / n;
    out.loss += (config.chi * samples[i].log_prob - qmin) / n;
    out.mean_log_prob += samples[i].log_prob / n;
  }
  const Matrix da1 = critics.q1.backward(c1, dq1).input;
  Matrix da2;
  if (!critics.single) da2 = critics.q2.backward(c2, dq2).input;

  const int a_col = states.cols;
  Matrix draw(n, 2);
  for (int i = 0; i < n; ++i) {
    const double dl_da = da1(i, a_col) + (critics.single ? 0.0 : da2(i, a_col));
    const double t = std::tanh(samples[i].z);
    const double sigma_xi = std::exp(heads[i].log_std) * noise[i];
    const double da_dz = 0.5 * (1.0 - t * t);
    // log pi = -xi^2/2 - log_std - c - log(1 - tanh^2 z) + log 2, xi held fixed
    const double dlogp_dz = 2.0 * t;
    const double dl_dz = config.chi / n * dlogp_dz + dl_da * da_dz;
    draw(i, 0) = dl_dz;
    const double dl_dlogstd = config.chi / n * -1.0 + dl_dz * sigma_xi;
    draw(i, 1) = heads[i].clamped ? 0.0 : dl_dlogstd;
  }
  out.grad = actor.backward(actor_cache, draw).params;
  return out;
}

double actor_update(Mlp& actor, Optimizer& opt, const CriticPair& critics, const Batch& batch,
                    const SacConfig& config, Rng& rng) {
  const auto noise = standard_normals(batch.s.rows, rng);
  const ActorLoss l = actor_loss(actor, critics, batch.s, noise, config);
  check_finite(l.loss, "actor loss");
  opt.step(actor, l.grad);
  return l.loss;
}

// ---- training -------------------------------------------------------------

PolicyModel init_model(const EnvConfig& env, const SacConfig& sac) {
  env.validate();
  sac.validate();
  Rng rng(sac.seed);
  PolicyModel m;
  m.sac = sac;
  m.env = env;
  std::vector<int> widths{env.n};
  widths.insert(widths.end(), sac.hidden.begin(), sac.hidden.end());
  widths.push_back(2);
  m.actor = Mlp::random(widths, rng);
  m.critics = make_critics(env.n, sac, rng);
  return m;
}

TrainResult train(const EnvConfig& env_config, const SacConfig& config,
                  const std::function<void(const EpisodeStat&)>& on_episode) {
  TrainResult result{init_model(env_config, config), {}};
  if (config.total_steps == 0) return result;

  PolicyModel& m = result.model;
  Rng rng(config.seed ^ 0xA5A5A5A55A5A5A5AULL);
  Optimizer actor_opt(m.actor.params().size(), config);
  Optimizer q1_opt(m.critics.q1.params().size(), config);
  Optimizer q2_opt(m.critics.q2.params().size(), config);
  ReplayBuffer buffer(config.buffer_capacity, env_config.n);
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  Env env(env_config);
  const auto shapes = training_shapes();
  std::uniform_int_distribution<std::size_t> pick_shape(0, shapes.size() - 1);
  std::uniform_real_distribution<double> uniform_action(0.0, 1.0);

  EpisodeStat ep;
  auto begin_episode = [&] {
    ep = EpisodeStat{};
    ep.episode = static_cast<int>(result.curve.size());
    ep.shape = shapes[pick_shape(rng)];
    ep.seed = rng();
    return env.reset(ep.shape, ep.seed);
  };
  Observation obs = begin_episode();

  for (long step = 0; step < config.total_steps; ++step) {
    const double a = step < config.warmup_steps
                         ? uniform_action(rng)
                         : sample_action(m.actor, obs.errors, config, rng).action;
    const StepResult r = env.step(a);
    check_finite(r.reward, "reward");
    buffer.push(obs.errors, a, r.reward, r.obs.errors, r.terminal);
    obs = r.obs;

    ep.steps += 1;
    ep.mean_reward += r.reward;
    ep.max_reward = std::max(ep.max_reward, r.reward);
    ep.mean_error += r.info.e;
    ep.mean_kappa += a;

    if (step >= config.warmup_steps && buffer.size() >= batch) {
      for (int k = 0; k < config.updates_per_step; ++k) {
        const Batch b = buffer.sample(batch, rng);
        critic_update(m.critics, q1_opt, q2_opt, m.actor, b, config, rng);
        actor_update(m.actor, actor_opt, m.critics, b, config, rng);
        soft_update(m.critics, config.tau);
      }
    }

    if (r.done) {
      ep.end_step = step + 1;
      ep.terminal = r.terminal;
      ep.mean_reward /= ep.steps;
      ep.mean_error /= ep.steps;
      ep.mean_kappa /= ep.steps;
      result.curve.push_back(ep);
      if (on_episode) on_episode(ep);
      obs = begin_episode();
    }
  }
  return result;
}

}  // namespace ar3n
