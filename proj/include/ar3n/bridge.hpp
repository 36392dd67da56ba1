#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ar3n/controllers.hpp"
#include "ar3n/env.hpp"

namespace ar3n {

inline constexpr int kMessageVersion = 1;

enum class TrialId { T0, T1, T2, T3 };

std::string_view to_string(TrialId t);
TrialId parse_trial(std::string_view name);

struct SessionConfig {
  ControllerKind controller = ControllerKind::er;
  std::string model_path;  // required for rl unless a model is passed in
  std::vector<Shape> shapes;
  bool mirror_x = false;
  bool mirror_y = false;
  TrialId trial = TrialId::T0;
  double k_h = 8.0;
  double c_h = 2.0;
  ErParams er;
  EnvConfig env;

  /// Controller actually used: T1 and T3 never receive assistance.
  ControllerKind effective_controller() const;
};

/// Pointer sample in workspace coordinates.
struct ClientInput {
  Point2 pos;
  double ts_ms = 0.0;
};

struct TickMessage {
  double t = 0.0;
  Point2 cursor;
  Point2 target;
  Point2 x_d;
  double e = 0.0;
  double kappa = 0.0;
  double u_norm = 0.0;
  Vec2 u;
  TrialId trial = TrialId::T0;
  Shape shape = Shape::circle;
  int shape_index = 0;
  double progress = 0.0;
  bool shape_done = false;
};

struct ShapeMetrics {
  Shape shape = Shape::circle;
  int steps = 0;
  double duration = 0.0;  // s
  double mean_error = 0.0;
  std::vector<AssistEvent> events;
  bool partial = false;  // aborted before the end of the path
  EpisodeLog log;
};

struct TrialMetrics {
  TrialId trial = TrialId::T0;
  ControllerKind controller = ControllerKind::none;
  std::vector<ShapeMetrics> shapes;
};

/// One trial: the 50 Hz loop with the human pointer in place of the virtual
/// patient. The cursor follows the pointer through a spring-damper and is
/// integrated with the patient dynamics, so assistance deflects it the same
/// way it deflects the simulated patient.
class Session {
 public:
  /// Loads the model from config.model_path when the effective controller is
  /// rl and `model` is null. Throws ar3n::Error on a bad config or model.
  explicit Session(SessionConfig config, std::shared_ptr<const PolicyModel> model = nullptr);

  const SessionConfig& config() const { return config_; }
  /// Current state without advancing time.
  TickMessage snapshot() const;

  /// Mirrors, clamps to [-1,1]^2 and stores the pointer as the target. Inputs
  /// whose timestamp is not newer than the last accepted one are dropped.
  /// Returns whether the input was accepted.
  bool apply_input(const ClientInput& input);

  /// Advances one step. When the current shape reaches the end of its path
  /// the tick reports shape_done and the next tick starts the next shape.
  /// Throws once the trial has ended.
  TickMessage tick();

  bool finished() const { return finished_; }
  /// Ends the trial. Shapes not completed are flagged partial; the shape in
  /// progress keeps its log.
  TrialMetrics end_trial();

  const ErrorTracker& tracker() const { return *tracker_; }
  const EpisodeLog& current_log() const { return log_; }

 private:
  void begin_shape(std::size_t index);
  void close_shape(bool partial);

  SessionConfig config_;
  Controller controller_;
  std::size_t shape_index_ = 0;
  std::shared_ptr<const Trajectory> traj_;
  std::unique_ptr<ErrorTracker> tracker_;
  PatientState state_;
  Point2 target_;
  std::optional<double> last_ts_;
  EpisodeLog log_;
  int steps_ = 0;
  bool shape_pending_advance_ = false;
  bool finished_ = false;
  bool ended_ = false;
  TrialMetrics metrics_;
};

/// Sessions keyed by id; ids must be unique.
class SessionManager {
 public:
  Session& start(const std::string& id, SessionConfig config,
                 std::shared_ptr<const PolicyModel> model = nullptr);
  Session* find(const std::string& id);
  void erase(const std::string& id);
  std::size_t size() const { return sessions_.size(); }

 private:
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

/// T0 (acclimatization) -> T1 (baseline) -> T2 (training) -> T3 (post).
/// T0 uses the training shapes, T1-T3 the testing shapes. Only T2 receives
/// assistance. Aborting ends the protocol.
class Protocol {
 public:
  Protocol(SessionConfig base, std::shared_ptr<const PolicyModel> model);

  bool idle() const { return !session_; }
  bool complete() const { return complete_; }
  TrialId current_trial() const { return trials_[index_]; }
  Session* session() { return session_.get(); }
  const std::vector<TrialMetrics>& results() const { return results_; }

  /// Starts the current trial. Throws if a trial is running or the protocol
  /// is complete.
  Session& start();
  /// Ends the running trial, stores its metrics and moves to the next trial.
  const TrialMetrics& finish();
  /// Ends the running trial as partial and closes the protocol.
  const TrialMetrics& abort();

 private:
  SessionConfig base_;
  std::shared_ptr<const PolicyModel> model_;
  std::vector<TrialId> trials_{TrialId::T0, TrialId::T1, TrialId::T2, TrialId::T3};
  std::size_t index_ = 0;
  std::unique_ptr<Session> session_;
  std::vector<TrialMetrics> results_;
  bool complete_ = false;
};

struct PairedError {
  Shape shape = Shape::circle;
  double before = 0.0;
  double after = 0.0;
};

/// Per-shape mean error of two trials, matched by shape in order of `before`.
std::vector<PairedError> paired_errors(const TrialMetrics& before, const TrialMetrics& after);

/// metrics.json plus one CSV log per shape under `dir`.
void export_trial(const std::filesystem::path& dir, const TrialMetrics& metrics);

// ---- wire format ----------------------------------------------------------

nlohmann::json tick_to_json(const TickMessage& m);
nlohmann::json metrics_to_json(const TrialMetrics& m);

struct ControlMessage {
  enum class Action { start, abort, next } action = Action::start;
};

/// Parsed client message. Unknown fields are ignored; a missing or wrong
/// type, or a version newer than kMessageVersion, raises ar3n::Error.
struct ClientMessage {
  std::optional<ClientInput> input;
  std::optional<ControlMessage> control;
};

ClientMessage parse_client_message(const std::string& text);

}  // namespace ar3n
