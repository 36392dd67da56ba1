#include "ar3n/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ar3n/model_io.hpp"

namespace ar3n {

std::string_view to_string(TrialId t) {
  switch (t) {
    case TrialId::T0: return "T0";
    case TrialId::T1: return "T1";
    case TrialId::T2: return "T2";
    case TrialId::T3: return "T3";
  }
  return "T0";
}

TrialId parse_trial(std::string_view name) {
  if (name == "T0") return TrialId::T0;
  if (name == "T1") return TrialId::T1;
  if (name == "T2") return TrialId::T2;
  if (name == "T3") return TrialId::T3;
  throw Error("unknown trial: " + std::string(name));
}

ControllerKind SessionConfig::effective_controller() const {
  if (trial == TrialId::T1 || trial == TrialId::T3) return ControllerKind::none;
  return controller;
}

// ---- Session ----------------------------------------------------------------

Session::Session(SessionConfig config, std::shared_ptr<const PolicyModel> model)
    : config_(std::move(config)) {
  config_.env.validate();
  if (config_.shapes.empty()) throw Error("session needs at least one shape");
  if (!(config_.k_h >= 0) || !(config_.c_h >= 0)) throw Error("coupling gains must be >= 0");

  switch (config_.effective_controller()) {
    case ControllerKind::none:
      controller_ = Controller::none();
      break;
    case ControllerKind::er:
      controller_ = Controller::er(config_.er, config_.env.rho);
      break;
    case ControllerKind::rl:
      if (!model) {
        if (config_.model_path.empty()) throw Error("rl controller needs a model path");
        model = std::make_shared<const PolicyModel>(load_model(config_.model_path));
      }
      if (model->env.n != config_.env.n)
        throw Error("model history length " + std::to_string(model->env.n) +
                    " does not match the session's " + std::to_string(config_.env.n));
      controller_ = Controller::rl(std::move(model));
      break;
  }
  metrics_.trial = config_.trial;
  metrics_.controller = config_.effective_controller();
  begin_shape(0);
}

void Session::begin_shape(std::size_t index) {
  shape_index_ = index;
  traj_ = std::make_shared<const Trajectory>(
      build_trajectory(config_.shapes[index], config_.env.samples_per_unit));
  const Point2 start = traj_->points().front();
  state_ = PatientState{start, {}};
  target_ = start;
  tracker_ = std::make_unique<ErrorTracker>(traj_, config_.env, start);
  log_.clear();
  steps_ = 0;
  shape_pending_advance_ = false;
}

void Session::close_shape(bool partial) {
  ShapeMetrics m;
  m.shape = config_.shapes[shape_index_];
  m.steps = steps_;
  m.duration = steps_ * config_.env.dt;
  for (const StepRecord& r : log_) m.mean_error += r.e;
  if (!log_.empty()) m.mean_error /= static_cast<double>(log_.size());
  m.events = assist_on_events(log_, controller_.on_criterion());
  m.partial = partial;
  m.log = log_;
  metrics_.shapes.push_back(std::move(m));
}

TickMessage Session::snapshot() const {
  TickMessage m;
  m.t = steps_ * config_.env.dt;
  m.cursor = state_.pos;
  m.target = target_;
  m.x_d = tracker_->projection().x_d;
  m.e = tracker_->projection().e;
  if (!log_.empty()) {
    m.kappa = log_.back().kappa;
    m.u = log_.back().u;
    m.u_norm = m.u.norm();
  }
  m.trial = config_.trial;
  m.shape = config_.shapes[shape_index_];
  m.shape_index = static_cast<int>(shape_index_);
  m.progress = std::clamp(tracker_->progress(), 0.0, 1.0);
  m.shape_done = shape_pending_advance_ || finished_;
  return m;
}

bool Session::apply_input(const ClientInput& input) {
  if (ended_) throw Error("session has ended");
  if (!std::isfinite(input.pos.x) || !std::isfinite(input.pos.y) || !std::isfinite(input.ts_ms))
    return false;
  if (last_ts_ && !(input.ts_ms > *last_ts_)) return false;
  last_ts_ = input.ts_ms;
  Point2 p = input.pos;
  if (config_.mirror_x) p.x = -p.x;
  if (config_.mirror_y) p.y = -p.y;
  target_ = {std::clamp(p.x, -1.0, 1.0), std::clamp(p.y, -1.0, 1.0)};
  return true;
}

TickMessage Session::tick() {
  if (ended_ || finished_) throw Error("tick on an ended session");
  if (shape_pending_advance_) begin_shape(shape_index_ + 1);

  const EnvConfig& env = config_.env;
  const Projection before = tracker_->projection();
  const Vec2 f_h = (target_ - state_.pos) * config_.k_h - state_.vel * config_.c_h;
  AssistCommand cmd = controller_.command(*tracker_, state_.pos, env.rho);
  const double cap = 2.0 * env.rho;
  const double un = cmd.u.norm();
  if (un > cap) cmd.u = cmd.u * (cap / un);

  const PatientState prev = state_;
  state_ = step_dynamics(state_, f_h + cmd.u, env.dt, env.patient);
  tracker_->update(state_.pos, cmd.u.norm());
  log_.push_back(StepRecord{steps_ * env.dt, prev.pos, before.x_d, before.e, cmd.kappa, cmd.u, 0.0});
  ++steps_;

  if (tracker_->at_end()) {
    close_shape(false);
    if (shape_index_ + 1 < config_.shapes.size())
      shape_pending_advance_ = true;
    else
      finished_ = true;
  }
  TickMessage m = snapshot();
  m.kappa = cmd.kappa;
  m.u = cmd.u;
  m.u_norm = cmd.u.norm();
  return m;
}

TrialMetrics Session::end_trial() {
  if (ended_) return metrics_;
  ended_ = true;
  if (!finished_) {
    std::size_t next = shape_index_ + 1;
    if (!shape_pending_advance_) close_shape(true);
    for (; next < config_.shapes.size(); ++next) {
      ShapeMetrics m;
      m.shape = config_.shapes[next];
      m.partial = true;
      metrics_.shapes.push_back(std::move(m));
    }
  }
  return metrics_;
}

// ---- SessionManager ---------------------------------------------------------

Session& SessionManager::start(const std::string& id, SessionConfig config,
                               std::shared_ptr<const PolicyModel> model) {
  if (sessions_.count(id)) throw Error("duplicate session id: " + id);
  auto s = std::make_unique<Session>(std::move(config), std::move(model));
  Session& ref = *s;
  sessions_.emplace(id, std::move(s));
  return ref;
}

Session* SessionManager::find(const std::string& id) {
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

void SessionManager::erase(const std::string& id) { sessions_.erase(id); }

// ---- Protocol ---------------------------------------------------------------

Protocol::Protocol(SessionConfig base, std::shared_ptr<const PolicyModel> model)
    : base_(std::move(base)), model_(std::move(model)) {
  if (base_.controller == ControllerKind::rl && !model_) {
    if (base_.model_path.empty()) throw Error("rl controller needs a model path");
    model_ = std::make_shared<const PolicyModel>(load_model(base_.model_path));
  }
}

Session& Protocol::start() {
  if (complete_) throw Error("protocol is complete");
  if (session_) throw Error("a trial is already running");
  SessionConfig cfg = base_;
  cfg.trial = trials_[index_];
  if (cfg.trial == TrialId::T0) {
    cfg.shapes.assign(training_shapes().begin(), training_shapes().end());
    cfg.controller = ControllerKind::none;
  } else if (cfg.shapes.empty()) {
    cfg.shapes.assign(testing_shapes().begin(), testing_shapes().end());
  }
  session_ = std::make_unique<Session>(std::move(cfg), model_);
  return *session_;
}

const TrialMetrics& Protocol::finish() {
  if (!session_) throw Error("no trial is running");
  results_.push_back(session_->end_trial());
  session_.reset();
  if (index_ + 1 < trials_.size())
    ++index_;
  else
    complete_ = true;
  return results_.back();
}

const TrialMetrics& Protocol::abort() {
  if (!session_) throw Error("no trial is running");
  results_.push_back(session_->end_trial());
  session_.reset();
  complete_ = true;
  return results_.back();
}

std::vector<PairedError> paired_errors(const TrialMetrics& before, const TrialMetrics& after) {
  std::vector<PairedError> out;
  for (const ShapeMetrics& b : before.shapes) {
    auto it = std::find_if(after.shapes.begin(), after.shapes.end(),
                           [&](const ShapeMetrics& a) { return a.shape == b.shape; });
    if (it == after.shapes.end() || b.partial || it->partial) continue;
    out.push_back({b.shape, b.mean_error, it->mean_error});
  }
  return out;
}

void export_trial(const std::filesystem::path& dir, const TrialMetrics& metrics) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir.string() + "'");
  {
    std::ofstream os(dir / "metrics.json");
    os << metrics_to_json(metrics).dump(1) << '\n';
    if (!os) throw Error("cannot write metrics in '" + dir.string() + "'");
  }
  for (std::size_t i = 0; i < metrics.shapes.size(); ++i) {
    const ShapeMetrics& s = metrics.shapes[i];
    if (s.log.empty()) continue;
    std::ofstream os(dir / (std::to_string(i) + "_" + std::string(to_string(s.shape)) + ".csv"));
    write_log_csv(os, s.log);
    if (!os) throw Error("cannot write logs in '" + dir.string() + "'");
  }
}

// ---- wire format ------------------------------------------------------------

nlohmann::json tick_to_json(const TickMessage& m) {
  return {{"v", kMessageVersion},
          {"type", "tick"},
          {"t", m.t},
          {"x", m.cursor.x},
          {"y", m.cursor.y},
          {"target", {m.target.x, m.target.y}},
          {"x_d", {m.x_d.x, m.x_d.y}},
          {"e", m.e},
          {"kappa", m.kappa},
          {"u_norm", m.u_norm},
          {"u", {m.u.x, m.u.y}},
          {"trial", std::string(to_string(m.trial))},
          {"shape", std::string(to_string(m.shape))},
          {"shape_index", m.shape_index},
          {"progress", m.progress},
          {"shape_done", m.shape_done}};
}

nlohmann::json metrics_to_json(const TrialMetrics& m) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const ShapeMetrics& s : m.shapes) {
    nlohmann::json events = nlohmann::json::array();
    for (const AssistEvent& e : s.events) events.push_back({{"t", e.t}, {"e", e.e_at_on}});
    shapes.push_back({{"shape", std::string(to_string(s.shape))},
                      {"steps", s.steps},
                      {"duration", s.duration},
                      {"mean_error", s.mean_error},
                      {"partial", s.partial},
                      {"events", events}});
  }
  return {{"v", kMessageVersion},
          {"type", "trial_end"},
          {"trial", std::string(to_string(m.trial))},
          {"controller", std::string(to_string(m.controller))},
          {"shapes", shapes}};
}

ClientMessage parse_client_message(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw Error("message must be an object");
  if (j.contains("v")) {
    if (!j["v"].is_number_integer()) throw Error("message version must be an integer");
    if (j["v"].get<int>() > kMessageVersion)
      throw Error("unsupported message version " + std::to_string(j["v"].get<int>()));
  }
  if (!j.contains("type") || !j["type"].is_string()) throw Error("message has no type");
  const std::string type = j["type"];
  ClientMessage out;
  if (type == "input") {
    for (const char* k : {"x", "y", "ts"})
      if (!j.contains(k) || !j[k].is_number()) throw Error(std::string("input needs numeric ") + k);
    out.input = ClientInput{{j["x"].get<double>(), j["y"].get<double>()}, j["ts"].get<double>()};
  } else if (type == "control") {
    const std::string action =
        j.contains("action") && j["action"].is_string() ? j["action"].get<std::string>() : "";
    ControlMessage c;
    if (action == "start") c.action = ControlMessage::Action::start;
    else if (action == "abort") c.action = ControlMessage::Action::abort;
    else if (action == "next") c.action = ControlMessage::Action::next;
    else throw Error("unknown control action: " + action);
    out.control = c;
  } else {
    throw Error("unknown message type: " + type);
  }
  return out;
}

}  // namespace ar3n
