#include "ar3n/controllers.hpp"

#include <string>

namespace ar3n {

Vec2 er_assist(const Projection& proj, Point2 pos, const ErParams& params) {
  if (!(proj.e > params.error_threshold)) return {};
  return (proj.x_d - pos) * params.gain;
}

double rl_assist(const PolicyModel& model, std::span<const double> obs) {
  if (static_cast<int>(obs.size()) != model.actor.input_width())
    throw Error("observation length " + std::to_string(obs.size()) +
                " does not match the policy input width " +
                std::to_string(model.actor.input_width()));
  return deterministic_action(model.actor, obs);
}

std::vector<AssistEvent> assist_on_events(const EpisodeLog& log, OnCriterion criterion,
                                          double kappa_on) {
  std::vector<AssistEvent> events;
  bool was_on = false;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const StepRecord& r = log[i];
    const bool on = criterion == OnCriterion::force ? r.u.norm() > 0.0 : r.kappa >= kappa_on;
    if (on && !was_on && i > 0) events.push_back({r.t, r.e, i});
    was_on = on;
  }
  return events;
}

std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::er: return "er";
    case ControllerKind::rl: return "rl";
    case ControllerKind::none: break;
  }
  return "none";
}

ControllerKind parse_controller(std::string_view name) {
  if (name == "none") return ControllerKind::none;
  if (name == "er") return ControllerKind::er;
  if (name == "rl") return ControllerKind::rl;
  throw Error("unknown controller: " + std::string(name));
}

Controller Controller::none() { return Controller{}; }

Controller Controller::er(ErParams params, double rho) {
  Controller c;
  c.kind_ = ControllerKind::er;
  c.er_ = params;
  c.er_rho_ = rho;
  return c;
}

Controller Controller::rl(std::shared_ptr<const PolicyModel> model) {
  if (!model) throw Error("rl controller needs a model");
  Controller c;
  c.kind_ = ControllerKind::rl;
  c.model_ = std::move(model);
  return c;
}

AssistCommand Controller::command(const ErrorTracker& tracker, Point2 pos, double rho) const {
  switch (kind_) {
    case ControllerKind::none:
      return {};
    case ControllerKind::er: {
      const Vec2 u = er_assist(tracker.projection(), pos, er_);
      const bool on = u.x != 0.0 || u.y != 0.0;
      return {u, on && er_rho_ > 0 ? er_.gain / er_rho_ : 0.0};
    }
    case ControllerKind::rl: {
      const double kappa = rl_assist(*model_, tracker.errors().values());
      return {assist_force(kappa, pos, tracker.projection().x_d, rho).u, kappa};
    }
  }
  return {};
}

}  // namespace ar3n
