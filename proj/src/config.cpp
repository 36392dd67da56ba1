#include "ar3n/config.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace ar3n {

namespace {

// Field visitors shared by the key-value and JSON encodings.
template <class F>
void visit(PatientParams& p, F&& f) {
  f("lambda_T", p.lambda_T);
  f("lambda_N", p.lambda_N);
  f("lambda_W_min", p.lambda_W_min);
  f("lambda_W_max", p.lambda_W_max);
  f("theta_W_min", p.theta_W_min);
  f("theta_W_max", p.theta_W_max);
  f("resample_min", p.resample_min);
  f("resample_max", p.resample_max);
  f("mass", p.mass);
  f("damping", p.damping);
  f("wind_enabled", p.wind_enabled);
}

template <class F>
void visit(EnvConfig& c, F&& f) {
  f("dt", c.dt);
  f("n", c.n);
  f("rho", c.rho);
  f("alpha", c.alpha);
  f("beta", c.beta);
  f("delta", c.delta);
  f("gamma", c.gamma);
  f("terminal_arc_tol", c.terminal_arc_tol);
  f("max_steps", c.max_steps);
  f("e_hat_mode", c.e_hat_mode);
  f("samples_per_unit", c.samples_per_unit);
  f("jitter_radius", c.jitter_radius);
  f("progress_window", c.progress_window);
}

template <class F>
void visit(SacConfig& c, F&& f) {
  f("learning_rate", c.learning_rate);
  f("batch_size", c.batch_size);
  f("gamma", c.gamma);
  f("chi", c.chi);
  f("tau", c.tau);
  f("warmup_steps", c.warmup_steps);
  f("total_steps", c.total_steps);
  f("updates_per_step", c.updates_per_step);
  f("buffer_capacity", c.buffer_capacity);
  f("hidden", c.hidden);
  f("log_std_min", c.log_std_min);
  f("log_std_max", c.log_std_max);
  f("optimizer", c.optimizer);
  f("momentum", c.momentum);
  f("single_critic", c.single_critic);
}

template <class F>
void visit(ErParams& p, F&& f) {
  f("threshold", p.error_threshold);
  f("gain", p.gain);
}

std::string_view to_string(EHatMode m) {
  return m == EHatMode::paper_literal ? "paper_literal" : "mean_squared";
}

EHatMode parse_e_hat(std::string_view s) {
  if (s == "mean_squared") return EHatMode::mean_squared;
  if (s == "paper_literal") return EHatMode::paper_literal;
  throw Error("unknown e_hat_mode: " + std::string(s));
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw Error("not a boolean: '" + s + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Text encoding of a single field.
struct ToText {
  std::string operator()(double v) const { return format_double(v); }
  std::string operator()(int v) const { return std::to_string(v); }
  std::string operator()(bool v) const { return v ? "true" : "false"; }
  std::string operator()(EHatMode v) const { return std::string(to_string(v)); }
  std::string operator()(OptimizerKind v) const { return std::string(to_string(v)); }
  std::string operator()(const std::vector<int>& v) const {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
  }
};

struct FromText {
  const std::string& s;
  void operator()(double& v) const { v = parse_double(s); }
  void operator()(int& v) const { v = static_cast<int>(parse_int(s)); }
  void operator()(bool& v) const { v = parse_bool(s); }
  void operator()(EHatMode& v) const { v = parse_e_hat(s); }
  void operator()(OptimizerKind& v) const { v = parse_optimizer(s); }
  void operator()(std::vector<int>& v) const {
    v.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(static_cast<int>(parse_int(trim(item))));
  }
};

template <class Cfg>
bool set_field(Cfg& cfg, const std::string& name, const std::string& value) {
  bool found = false;
  visit(cfg, [&](const char* field, auto& ref) {
    if (!found && name == field) {
      FromText{value}(ref);
      found = true;
    }
  });
  return found;
}

template <class Cfg>
void emit_fields(const std::string& prefix, const Cfg& cfg, KeyValues& out) {
  visit(const_cast<Cfg&>(cfg), [&](const char* field, auto& ref) {
    out.emplace_back(prefix + field, ToText{}(ref));
  });
}

template <class Cfg>
nlohmann::json fields_to_json(const Cfg& cfg) {
  nlohmann::json j = nlohmann::json::object();
  visit(const_cast<Cfg&>(cfg), [&](const char* field, auto& ref) {
    using T = std::decay_t<decltype(ref)>;
    if constexpr (std::is_enum_v<T>)
      j[field] = std::string(to_string(ref));
    else
      j[field] = ref;
  });
  return j;
}

template <class Cfg>
void fields_from_json(const nlohmann::json& j, Cfg& cfg) {
  visit(cfg, [&](const char* field, auto& ref) {
    if (!j.contains(field)) throw Error(std::string("missing config field: ") + field);
    using T = std::decay_t<decltype(ref)>;
    if constexpr (std::is_same_v<T, EHatMode>)
      ref = parse_e_hat(j.at(field).get<std::string>());
    else if constexpr (std::is_same_v<T, OptimizerKind>)
      ref = parse_optimizer(j.at(field).get<std::string>());
    else
      ref = j.at(field).get<T>();
  });
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::train: return "train";
    case RunMode::eval: return "eval";
    case RunMode::compare: return "compare";
    case RunMode::serve: return "serve";
  }
  return "train";
}

RunMode parse_mode(std::string_view name) {
  if (name == "train") return RunMode::train;
  if (name == "eval") return RunMode::eval;
  if (name == "compare") return RunMode::compare;
  if (name == "serve") return RunMode::serve;
  throw Error("unknown mode: " + std::string(name));
}

void RunConfig::validate() const {
  env.validate();
  if (mode == RunMode::train) sac.validate();
  if ((mode == RunMode::eval || mode == RunMode::compare) && episodes < 1)
    throw Error("episodes must be >= 1");
  if (mode == RunMode::compare && model_path.empty())
    throw Error("compare needs a model path");
  if (mode == RunMode::eval && controller == ControllerKind::rl && model_path.empty())
    throw Error("eval with the rl controller needs a model path");
  if (mode == RunMode::serve && (port < 0 || port > 65535)) throw Error("invalid port");
  if (er.error_threshold <= 0 || er.gain < 0) throw Error("invalid ER parameters");
  (void)shape_list();
}

std::vector<Shape> RunConfig::shape_list() const {
  if (shapes == "training") return {training_shapes().begin(), training_shapes().end()};
  if (shapes == "testing") return {testing_shapes().begin(), testing_shapes().end()};
  std::vector<Shape> out;
  if (shapes == "all") {
    out.assign(training_shapes().begin(), training_shapes().end());
    out.insert(out.end(), testing_shapes().begin(), testing_shapes().end());
    return out;
  }
  std::stringstream ss(shapes);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_shape(trim(item)));
  if (out.empty()) throw Error("empty shape list");
  return out;
}

KeyValues read_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

void write_key_values(std::ostream& os, const KeyValues& kv) {
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

void apply_key_values(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    try {
      if (key == "mode") cfg.mode = parse_mode(value);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value));
      else if (key == "shapes") cfg.shapes = value;
      else if (key == "controller") cfg.controller = parse_controller(value);
      else if (key == "episodes") cfg.episodes = static_cast<int>(parse_int(value));
      else if (key == "model") cfg.model_path = value;
      else if (key == "out") cfg.out_dir = value;
      else if (key == "port") cfg.port = static_cast<int>(parse_int(value));
      else if (key == "code_version") continue;
      else if (key.rfind("er.", 0) == 0 && set_field(cfg.er, key.substr(3), value)) continue;
      else if (key.rfind("env.", 0) == 0 && set_field(cfg.env, key.substr(4), value)) continue;
      else if (key.rfind("patient.", 0) == 0 && set_field(cfg.env.patient, key.substr(8), value))
        continue;
      else if (key.rfind("sac.", 0) == 0 && set_field(cfg.sac, key.substr(4), value)) continue;
      else throw Error("unknown config key");
    } catch (const Error& e) {
      throw Error("config key '" + key + "': " + e.what());
    }
  }
  cfg.sac.seed = cfg.seed;
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues kv{
      {"mode", std::string(to_string(cfg.mode))},
      {"seed", std::to_string(cfg.seed)},
      {"shapes", cfg.shapes},
      {"controller", std::string(to_string(cfg.controller))},
      {"episodes", std::to_string(cfg.episodes)},
      {"model", cfg.model_path},
      {"out", cfg.out_dir},
      {"port", std::to_string(cfg.port)},
  };
  emit_fields("er.", cfg.er, kv);
  emit_fields("env.", cfg.env, kv);
  emit_fields("patient.", cfg.env.patient, kv);
  emit_fields("sac.", cfg.sac, kv);
  return kv;
}

nlohmann::json to_json(const EnvConfig& c) {
  nlohmann::json j = fields_to_json(c);
  j["patient"] = fields_to_json(c.patient);
  return j;
}

nlohmann::json to_json(const SacConfig& c) {
  nlohmann::json j = fields_to_json(c);
  j["seed"] = c.seed;
  return j;
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  fields_from_json(j, c);
  fields_from_json(j.at("patient"), c.patient);
}

void from_json(const nlohmann::json& j, SacConfig& c) {
  fields_from_json(j, c);
  c.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace ar3n
