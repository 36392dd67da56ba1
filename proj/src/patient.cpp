#include "ar3n/patient.hpp"

#include <cmath>

namespace ar3n {

void PatientParams::validate() const {
  if (lambda_T < 0 || lambda_N < 0 || lambda_W_min < 0)
    throw Error("patient force scales must be non-negative");
  if (lambda_W_min > lambda_W_max || theta_W_min > theta_W_max || resample_min > resample_max)
    throw Error("patient parameter ranges must be ordered");
  if (resample_min <= 0) throw Error("wind resample interval must be positive");
  if (!(mass > 0)) throw Error("patient mass must be positive");
  if (damping < 0) throw Error("patient damping must be non-negative");
}

WindState sample_wind(Rng& rng, const PatientParams& params, double now) {
  std::uniform_real_distribution<double> scale(params.lambda_W_min, params.lambda_W_max);
  std::uniform_real_distribution<double> angle(params.theta_W_min, params.theta_W_max);
  std::uniform_real_distribution<double> interval(params.resample_min, params.resample_max);
  WindState w;
  w.lambda_W = scale(rng);
  w.theta_W = angle(rng);
  w.next_resample_t = now + interval(rng);
  return w;
}

Vec2 patient_force(const PatientState& state, const Projection& proj, const WindState& wind,
                   const PatientParams& params) {
  if (wind.theta_W < params.theta_W_min || wind.theta_W > params.theta_W_max)
    throw Error("wind angle outside the configured sector");

  const Vec2 f_t = proj.tangent;
  Vec2 f_n{};
  if (proj.e > 1e-9) f_n = (proj.x_d - state.pos) * (1.0 / proj.e);
  const double c = std::cos(wind.theta_W);
  const double s = std::sin(wind.theta_W);
  const Vec2 f_w = proj.tangent * c + proj.normal * s;

  const double lw = params.wind_enabled ? wind.lambda_W : 0.0;
  return f_t * params.lambda_T + f_n * params.lambda_N + f_w * lw;
}

PatientState step_dynamics(const PatientState& state, Vec2 total_force, double dt,
                           const PatientParams& params) {
  if (!total_force.finite()) throw Error("non-finite force passed to step_dynamics");
  PatientState next;
  next.vel = state.vel + (total_force - state.vel * params.damping) * (dt / params.mass);
  next.pos = state.pos + next.vel * dt;
  return next;
}

}  // namespace ar3n
