#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "ar3n/geom.hpp"
#include "ar3n/patient.hpp"

namespace ar3n {

enum class EHatMode {
  mean_squared,   // (mean of the error window)^2
  paper_literal,  // (sum of the error window)^2 / n
};

struct EnvConfig {
  double dt = 0.02;
  int n = 25;  // error history length
  double rho = 3.0;
  double alpha = 1.0;
  double beta = 0.45;
  double delta = 0.5;
  double gamma = 0.5;
  double terminal_arc_tol = 0.02;
  int max_steps = 2000;
  EHatMode e_hat_mode = EHatMode::mean_squared;
  int samples_per_unit = 100;
  double jitter_radius = 0.05;
  /// How far ahead of the last projected arc length the next projection may
  /// land. Backward motion is limited to one segment.
  double progress_window = 0.25;
  PatientParams patient;

  void validate() const;
};

/// Most recent first: errors[0] = e_t.
struct Observation {
  std::vector<double> errors;
};

/// Fixed-length history, newest entry at index 0.
class History {
 public:
  History() = default;
  History(std::size_t n, double fill) : values_(n, fill) {}
  void push(double v);
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double mean() const;

 private:
  std::vector<double> values_;
};

struct StepInfo {
  double e = 0.0;
  double u_norm = 0.0;
  double kappa = 0.0;
  double s = 0.0;  // arc progress after the step
  double t = 0.0;  // time after the step
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  bool terminal = false;  // reached the end of the path (not a timeout)
  StepInfo info;
};

/// One row per step: state and projection before the step, the assistance
/// applied during it and the reward it produced.
struct StepRecord {
  double t = 0.0;
  Point2 x;
  Point2 x_d;
  double e = 0.0;
  double kappa = 0.0;
  Vec2 u;
  double r = 0.0;
};

using EpisodeLog = std::vector<StepRecord>;

void write_log_csv(std::ostream& os, const EpisodeLog& log);
void write_log_ndjson(std::ostream& os, const EpisodeLog& log);

struct AssistForce {
  Vec2 u;
  bool clamped = false;
};

/// u = rho * kappa * (x_d - pos); kappa outside [0,1] is clamped and flagged.
AssistForce assist_force(double kappa, Point2 pos, Point2 x_d, double rho);

double reward(std::span<const double> err_hist, std::span<const double> force_hist,
              double kappa_t, double kappa_prev, const EnvConfig& config);

/// rewards = [r_1, ..., r_T]; returns [V_0, ..., V_{T-1}] with
/// V_t = r_{t+1} + gamma * V_{t+1} and V_T = 0.
std::vector<double> discounted_return(std::span<const double> rewards, double gamma);

/// Progress-aware projection and the error / force histories that form the
/// observation. Shared by the simulated environment and the live session loop
/// so both produce identical observations for identical cursor paths.
class ErrorTracker {
 public:
  ErrorTracker(std::shared_ptr<const Trajectory> traj, const EnvConfig& config, Point2 start);

  const Trajectory& trajectory() const { return *traj_; }
  const Projection& projection() const { return proj_; }
  const History& errors() const { return err_; }
  const History& forces() const { return force_; }
  Observation observation() const;
  bool at_end() const;
  double progress() const { return proj_.s / traj_->length(); }

  /// Re-projects the cursor and pushes the new error and the magnitude of the
  /// assistance that moved it.
  void update(Point2 pos, double u_norm);

 private:
  std::shared_ptr<const Trajectory> traj_;
  double window_;
  double arc_tol_;
  Projection proj_;
  History err_;
  History force_;
};

struct AssistCommand {
  Vec2 u;
  double kappa = 0.0;  // gain reported to the reward's smoothness term
};

class Env {
 public:
  explicit Env(EnvConfig config);

  Observation reset(Shape shape, std::uint64_t seed);
  Observation reset(std::shared_ptr<const Trajectory> traj, std::uint64_t seed);

  /// Applies u = rho * kappa * (x_d - x). Throws once the episode is done.
  StepResult step(double kappa);
  /// Applies an externally computed assistance force.
  StepResult step(const AssistCommand& cmd);

  const EnvConfig& config() const { return config_; }
  const Trajectory& trajectory() const { return tracker_->trajectory(); }
  const ErrorTracker& tracker() const { return *tracker_; }
  const Projection& projection() const { return tracker_->projection(); }
  const PatientState& patient() const { return state_; }
  const WindState& wind() const { return wind_; }
  Observation observation() const { return tracker_->observation(); }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  double time() const { return steps_ * config_.dt; }
  const EpisodeLog& log() const { return log_; }

 private:
  EnvConfig config_;
  std::unique_ptr<ErrorTracker> tracker_;
  PatientState state_;
  WindState wind_;
  Rng rng_;
  double kappa_prev_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  EpisodeLog log_;
};

/// Per-episode seed for a given run seed and episode index.
std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t index);

}  // namespace ar3n
