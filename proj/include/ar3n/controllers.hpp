#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "ar3n/env.hpp"
#include "ar3n/sac.hpp"

namespace ar3n {

/// Rule-based error reduction: a deadzone around the path, proportional pull
/// outside it.
struct ErParams {
  double error_threshold = 0.3;
  double gain = 3.0;
};

struct AssistEvent {
  double t = 0.0;
  double e_at_on = 0.0;
  std::size_t step = 0;  // index into the episode log
};

/// Zero when e <= threshold (strict), gain * (x_d - pos) otherwise.
Vec2 er_assist(const Projection& proj, Point2 pos, const ErParams& params);

/// Deterministic gain in [0,1] from the policy mean. Throws on an observation
/// whose length differs from the actor's input width.
double rl_assist(const PolicyModel& model, std::span<const double> obs);

enum class OnCriterion {
  force,  // assistance is on when |u| > 0
  kappa,  // assistance is on when kappa >= kappa_on
};

/// Off -> on transitions in an episode log. Assistance that is already on at
/// the first step is not an event.
std::vector<AssistEvent> assist_on_events(const EpisodeLog& log, OnCriterion criterion,
                                          double kappa_on = 0.05);

enum class ControllerKind { none, er, rl };

std::string_view to_string(ControllerKind k);
ControllerKind parse_controller(std::string_view name);

/// Assistance source used by the evaluation loops and the live session.
class Controller {
 public:
  static Controller none();
  static Controller er(ErParams params, double rho);
  static Controller rl(std::shared_ptr<const PolicyModel> model);

  ControllerKind kind() const { return kind_; }
  /// Assistance for the current tracking state. kappa is the gain reported in
  /// logs: the policy output for rl, gain/rho when ER is on, 0 otherwise.
  AssistCommand command(const ErrorTracker& tracker, Point2 pos, double rho) const;
  OnCriterion on_criterion() const {
    return kind_ == ControllerKind::rl ? OnCriterion::kappa : OnCriterion::force;
  }

 private:
  ControllerKind kind_ = ControllerKind::none;
  ErParams er_;
  double er_rho_ = 3.0;
  std::shared_ptr<const PolicyModel> model_;
};

}  // namespace ar3n
