#pragma once

#include <numbers>
#include <random>

#include "ar3n/geom.hpp"

namespace ar3n {

using Rng = std::mt19937_64;

/// Virtual patient: tangential drive, normal pull back toward the path and a
/// randomized wind disturbance, acting on a damped point mass.
struct PatientParams {
  double lambda_T = 1.0;
  double lambda_N = 0.4;
  double lambda_W_min = 1.8;
  double lambda_W_max = 2.2;
  double theta_W_min = -std::numbers::pi / 3;
  double theta_W_max = std::numbers::pi / 3;
  double resample_min = 0.75;  // seconds
  double resample_max = 1.5;
  double mass = 1.0;
  double damping = 3.0;
  bool wind_enabled = true;

  /// Throws ar3n::Error on negative scales, unordered ranges or mass <= 0.
  void validate() const;
};

struct WindState {
  double lambda_W = 0.0;
  double theta_W = 0.0;  // radians from the path tangent at x_d
  double next_resample_t = 0.0;
};

struct PatientState {
  Point2 pos;
  Vec2 vel;
};

WindState sample_wind(Rng& rng, const PatientParams& params, double now);

/// F_P1 = lambda_T F_T + lambda_N F_N + lambda_W F_W, all F_* unit vectors.
/// Throws if the wind angle lies outside the configured sector.
Vec2 patient_force(const PatientState& state, const Projection& proj, const WindState& wind,
                   const PatientParams& params);

/// One semi-implicit Euler step of m*dv/dt = F - c*v.
PatientState step_dynamics(const PatientState& state, Vec2 total_force, double dt,
                           const PatientParams& params);

}  // namespace ar3n
