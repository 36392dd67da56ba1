#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ar3n/patient.hpp"

using namespace ar3n;

namespace {

Projection frame(Point2 x_d, double e, Vec2 tangent) {
  Projection p;
  p.x_d = x_d;
  p.e = e;
  p.tangent = tangent;
  p.normal = tangent.perp();
  return p;
}

}  // namespace

TEST_CASE("wind draws stay in range and average to the interval midpoint") {
  const PatientParams params;
  Rng rng(11);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const WindState w = sample_wind(rng, params, 2.0);
    CHECK(w.lambda_W >= 1.8);
    CHECK(w.lambda_W <= 2.2);
    CHECK(w.theta_W >= -std::numbers::pi / 3);
    CHECK(w.theta_W <= std::numbers::pi / 3);
    CHECK(w.next_resample_t >= 2.0 + 0.75);
    CHECK(w.next_resample_t <= 2.0 + 1.5);
    sum += w.lambda_W;
  }
  CHECK(std::abs(sum / n - 2.0) < 0.01);
}

TEST_CASE("wind sequences are seeded") {
  const PatientParams params;
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    const WindState wa = sample_wind(a, params, 0.0);
    const WindState wb = sample_wind(b, params, 0.0);
    CHECK(wa.lambda_W == wb.lambda_W);
    CHECK(wa.theta_W == wb.theta_W);
    CHECK(wa.next_resample_t == wb.next_resample_t);
  }
}

TEST_CASE("on the path without wind only the tangential force remains") {
  PatientParams params;
  params.wind_enabled = false;
  const PatientState s{{0.3, 0.0}, {}};
  const Vec2 f = patient_force(s, frame({0.3, 0.0}, 0.0, {1, 0}), WindState{2.0, 0.5, 1.0}, params);
  CHECK(f.x == doctest::Approx(1.0));
  CHECK(f.y == doctest::Approx(0.0));
}

TEST_CASE("off the path without wind the normal pull is 0.4 toward x_d") {
  PatientParams params;
  params.wind_enabled = false;
  const PatientState s{{0.0, 0.2}, {}};
  const Vec2 f = patient_force(s, frame({0.0, 0.0}, 0.2, {1, 0}), WindState{}, params);
  CHECK(f.x == doctest::Approx(1.0));
  CHECK(f.y == doctest::Approx(-0.4));
}

TEST_CASE("wind is lambda_W along the tangent rotated by theta_W") {
  const PatientParams params;
  const PatientState s{{0.0, 0.0}, {}};
  const double th = std::numbers::pi / 4;
  const Vec2 f = patient_force(s, frame({0.0, 0.0}, 0.0, {0, 1}), WindState{2.0, th, 1.0}, params);
  // tangent (0,1), normal (-1,0)
  CHECK(f.x == doctest::Approx(-2.0 * std::sin(th)));
  CHECK(f.y == doctest::Approx(1.0 + 2.0 * std::cos(th)));
}

TEST_CASE("wind angle outside the sector is rejected") {
  const PatientParams params;
  const PatientState s{{0.0, 0.0}, {}};
  CHECK_THROWS_AS(patient_force(s, frame({0, 0}, 0.0, {1, 0}),
                                WindState{2.0, std::numbers::pi / 2, 1.0}, params),
                  Error);
}

TEST_CASE("zero force and zero velocity is an equilibrium") {
  const PatientParams params;
  const PatientState s{{0.25, -0.5}, {}};
  const PatientState n = step_dynamics(s, {}, 0.02, params);
  CHECK(n.pos.x == s.pos.x);
  CHECK(n.pos.y == s.pos.y);
  CHECK(n.vel.x == 0.0);
  CHECK(n.vel.y == 0.0);
}

TEST_CASE("one semi-implicit step by hand") {
  PatientParams params;
  params.damping = 2.0;
  const PatientState n = step_dynamics({{0, 0}, {0, 0}}, {1, 0}, 0.02, params);
  CHECK(n.vel.x == doctest::Approx(0.02));
  CHECK(n.vel.y == 0.0);
  CHECK(n.pos.x == doctest::Approx(0.0004));
  CHECK(n.pos.y == 0.0);
}

TEST_CASE("damping dissipates speed every step") {
  const PatientParams params;
  PatientState s{{0, 0}, {1, 0}};
  double speed = s.vel.norm();
  for (int i = 0; i < 500; ++i) {
    s = step_dynamics(s, {}, 0.02, params);
    CHECK(s.vel.norm() < speed);
    speed = s.vel.norm();
  }
}

TEST_CASE("non-finite force is rejected") {
  const PatientParams params;
  CHECK_THROWS_AS(step_dynamics({{0, 0}, {0, 0}}, {std::nan(""), 0}, 0.02, params), Error);
}

TEST_CASE("parameter validation") {
  PatientParams p;
  CHECK_NOTHROW(p.validate());
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = PatientParams{};
  p.lambda_W_min = 3.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = PatientParams{};
  p.resample_min = 2.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
