#include "ar3n/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace ar3n {

void EnvConfig::validate() const {
  if (n < 1) throw Error("history length n must be >= 1");
  if (!(dt > 0)) throw Error("dt must be positive");
  if (rho < 0 || alpha < 0 || beta < 0 || delta < 0) throw Error("weights must be >= 0");
  if (gamma < 0 || gamma > 1) throw Error("gamma must lie in [0,1]");
  if (max_steps < 1) throw Error("max_steps must be >= 1");
  if (jitter_radius < 0 || progress_window <= 0) throw Error("invalid tracking window");
  patient.validate();
}

void History::push(double v) {
  if (values_.empty()) return;
  std::rotate(values_.rbegin(), values_.rbegin() + 1, values_.rend());
  values_.front() = v;
}

double History::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / values_.size();
}

AssistForce assist_force(double kappa, Point2 pos, Point2 x_d, double rho) {
  AssistForce out;
  if (kappa < 0.0 || kappa > 1.0 || std::isnan(kappa)) {
    out.clamped = true;
    kappa = std::isnan(kappa) ? 0.0 : std::clamp(kappa, 0.0, 1.0);
  }
  out.u = (x_d - pos) * (rho * kappa);
  return out;
}

double reward(std::span<const double> err_hist, std::span<const double> force_hist,
              double kappa_t, double kappa_prev, const EnvConfig& config) {
  const double n = static_cast<double>(err_hist.size());
  const double err_sum = std::accumulate(err_hist.begin(), err_hist.end(), 0.0);
  const double e_hat = config.e_hat_mode == EHatMode::mean_squared
                           ? (err_sum / n) * (err_sum / n)
                           : err_sum * err_sum / n;
  const double u_hat =
      std::accumulate(force_hist.begin(), force_hist.end(), 0.0) / force_hist.size();
  const double kappa_dot = kappa_t - kappa_prev;
  return -config.alpha * e_hat - config.beta * u_hat - config.delta * kappa_dot * kappa_dot;
}

std::vector<double> discounted_return(std::span<const double> rewards, double gamma) {
  std::vector<double> v(rewards.size());
  double next = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    next = rewards[i] + gamma * next;
    v[i] = next;
  }
  return v;
}

ErrorTracker::ErrorTracker(std::shared_ptr<const Trajectory> traj, const EnvConfig& config,
                           Point2 start)
    : traj_(std::move(traj)),
      window_(config.progress_window),
      arc_tol_(config.terminal_arc_tol) {
  proj_ = project_window(*traj_, start, 0.0, window_, VertexTie::later);
  err_ = History(config.n, proj_.e);
  force_ = History(config.n, 0.0);
}

Observation ErrorTracker::observation() const {
  const auto v = err_.values();
  return Observation{{v.begin(), v.end()}};
}

bool ErrorTracker::at_end() const { return proj_.s >= traj_->length() - arc_tol_; }

void ErrorTracker::update(Point2 pos, double u_norm) {
  const double s = proj_.s;
  proj_ = project_window(*traj_, pos, s - traj_->max_segment_length(), s + window_,
                         VertexTie::later);
  err_.push(proj_.e);
  force_.push(u_norm);
}

Env::Env(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

Observation Env::reset(Shape shape, std::uint64_t seed) {
  return reset(std::make_shared<const Trajectory>(
                   build_trajectory(shape, config_.samples_per_unit)),
               seed);
}

Observation Env::reset(std::shared_ptr<const Trajectory> traj, std::uint64_t seed) {
  rng_.seed(seed);
  Point2 start = traj->points().front();
  if (config_.jitter_radius > 0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = config_.jitter_radius * std::sqrt(unit(rng_));
    const double a = 2 * std::numbers::pi * unit(rng_);
    start += Vec2{r * std::cos(a), r * std::sin(a)};
  }
  state_ = PatientState{start, {}};
  wind_ = sample_wind(rng_, config_.patient, 0.0);
  tracker_ = std::make_unique<ErrorTracker>(std::move(traj), config_, start);
  kappa_prev_ = 0.0;
  steps_ = 0;
  done_ = false;
  log_.clear();
  return tracker_->observation();
}

StepResult Env::step(double kappa) {
  if (done_) throw Error("step called on a finished episode");
  const AssistForce a = assist_force(kappa, state_.pos, projection().x_d, config_.rho);
  return step(AssistCommand{a.u, std::clamp(kappa, 0.0, 1.0)});
}

StepResult Env::step(const AssistCommand& cmd) {
  if (done_) throw Error("step called on a finished episode");
  const double now = time();
  if (now >= wind_.next_resample_t) wind_ = sample_wind(rng_, config_.patient, now);

  const Projection before = tracker_->projection();
  const Vec2 f_p1 = patient_force(state_, before, wind_, config_.patient);
  const PatientState prev = state_;
  state_ = step_dynamics(state_, f_p1 + cmd.u, config_.dt, config_.patient);
  ++steps_;

  const double u_norm = cmd.u.norm();
  tracker_->update(state_.pos, u_norm);

  StepResult out;
  out.reward = reward(tracker_->errors().values(), tracker_->forces().values(), cmd.kappa,
                      kappa_prev_, config_);
  kappa_prev_ = cmd.kappa;
  out.terminal = tracker_->at_end();
  out.done = out.terminal || steps_ >= config_.max_steps;
  done_ = out.done;
  out.obs = tracker_->observation();
  out.info = StepInfo{tracker_->projection().e, u_norm, cmd.kappa, tracker_->projection().s,
                      time()};

  log_.push_back(StepRecord{now, prev.pos, before.x_d, before.e, cmd.kappa, cmd.u,
                            out.reward});
  return out;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = run_seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_log_csv(std::ostream& os, const EpisodeLog& log) {
  const auto old = os.precision(17);
  os << "t,x,y,x_d_x,x_d_y,e,kappa,u_x,u_y,r\n";
  for (const StepRecord& s : log) {
    os << s.t << ',' << s.x.x << ',' << s.x.y << ',' << s.x_d.x << ',' << s.x_d.y << ','
       << s.e << ',' << s.kappa << ',' << s.u.x << ',' << s.u.y << ',' << s.r << '\n';
  }
  os.precision(old);
}

void write_log_ndjson(std::ostream& os, const EpisodeLog& log) {
  for (const StepRecord& s : log) {
    nlohmann::json j{{"t", s.t},         {"x", s.x.x},     {"y", s.x.y},
                     {"x_d_x", s.x_d.x}, {"x_d_y", s.x_d.y}, {"e", s.e},
                     {"kappa", s.kappa}, {"u_x", s.u.x},   {"u_y", s.u.y},
                     {"r", s.r}};
    os << j.dump() << '\n';
  }
}

}  // namespace ar3n
