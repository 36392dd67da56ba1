#include <doctest.h>

#include <memory>

#include "ar3n/controllers.hpp"
#include "ar3n/harness.hpp"

using namespace ar3n;

namespace {

Projection at(Point2 x_d, double e) {
  Projection p;
  p.x_d = x_d;
  p.e = e;
  return p;
}

EpisodeLog kappa_log(std::vector<double> kappas) {
  EpisodeLog log;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    StepRecord r;
    r.t = 0.02 * i;
    r.e = 0.1 * i;
    r.kappa = kappas[i];
    log.push_back(r);
  }
  return log;
}

std::shared_ptr<PolicyModel> zero_output_model() {
  auto m = std::make_shared<PolicyModel>(init_model(EnvConfig{}, SacConfig{}));
  auto p = m->actor.mutable_params();
  const int last = m->actor.layer_count() - 1;
  std::fill(p.begin() + m->actor.weight_offset(last), p.end(), 0.0);
  return m;
}

}  // namespace

TEST_CASE("ER is silent inside the deadzone") {
  const ErParams er;
  CHECK(er_assist(at({0.2, 0.0}, 0.2), {0.0, 0.0}, er).norm() == 0.0);
  // the boundary itself is inside
  CHECK(er_assist(at({0.3, 0.0}, 0.3), {0.0, 0.0}, er).norm() == 0.0);
}

TEST_CASE("ER pulls toward the path outside the deadzone") {
  const ErParams er;
  const Vec2 u = er_assist(at({0.0, 0.0}, 0.4), {0.4, 0.0}, er);
  CHECK(u.norm() == doctest::Approx(1.2));
  CHECK(u.x == doctest::Approx(-1.2));
  CHECK(u.y == 0.0);
}

TEST_CASE("zeroed output layer gives the midpoint gain") {
  const auto m = zero_output_model();
  CHECK(rl_assist(*m, std::vector<double>(25, 0.7)) == 0.5);
}

TEST_CASE("policy gain is in [0,1] and deterministic") {
  const PolicyModel m = init_model(EnvConfig{}, SacConfig{});
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> obs(25);
    for (double& v : obs) v = u(rng);
    const double a = rl_assist(m, obs);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(rl_assist(m, obs) == a);
  }
}

TEST_CASE("observation width must match the actor") {
  const PolicyModel m = init_model(EnvConfig{}, SacConfig{});
  CHECK_THROWS_AS(rl_assist(m, std::vector<double>(24, 0.0)), Error);
}

TEST_CASE("off to on transitions are counted") {
  const auto ev = assist_on_events(kappa_log({0, 0.2, 0.2, 0.01, 0.3}), OnCriterion::kappa);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].step == 1);
  CHECK(ev[1].step == 4);
  CHECK(ev[1].e_at_on == doctest::Approx(0.4));
  CHECK(ev[1].t == doctest::Approx(0.08));
}

TEST_CASE("assistance on from the first step is not an event") {
  CHECK(assist_on_events(kappa_log({0.5, 0.5, 0.0, 0.5}), OnCriterion::kappa).size() == 1);
  CHECK(assist_on_events(kappa_log({0, 0, 0, 0}), OnCriterion::kappa).empty());
  CHECK(assist_on_events(EpisodeLog{}, OnCriterion::force).empty());
}

TEST_CASE("force criterion uses |u| > 0") {
  EpisodeLog log(4);
  log[2].u = {0.0, 1e-9};
  log[2].e = 0.35;
  const auto ev = assist_on_events(log, OnCriterion::force);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].step == 2);
}

TEST_CASE("every ER onset happens above the threshold") {
  const Controller er = Controller::er(ErParams{}, 3.0);
  std::size_t total = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const EpisodeResult r = run_episode(EnvConfig{}, er, Shape::star, seed);
    for (const AssistEvent& e : r.events) CHECK(e.e_at_on > 0.3);
    for (const StepRecord& row : r.log) {
      if (row.u.norm() > 0.0) {
        CHECK(row.kappa == doctest::Approx(1.0));
      } else {
        CHECK(row.kappa == 0.0);
      }
    }
    total += r.events.size();
  }
  CHECK(total > 0);
}

TEST_CASE("none commands nothing") {
  const Controller c = Controller::none();
  const EpisodeResult r = run_episode(EnvConfig{}, c, Shape::circle, 2);
  for (const StepRecord& row : r.log) CHECK(row.u.norm() == 0.0);
  CHECK(r.events.empty());
}

TEST_CASE("controller names") {
  for (auto k : {ControllerKind::none, ControllerKind::er, ControllerKind::rl})
    CHECK(parse_controller(to_string(k)) == k);
  CHECK_THROWS_AS(parse_controller("pid"), Error);
  CHECK_THROWS_AS(Controller::rl(nullptr), Error);
}
