#include "ar3n/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ar3n/config.hpp"

namespace ar3n {

namespace {

constexpr const char* kFormatTag = "ar3n-policy";

nlohmann::json net_to_json(const Mlp& net) {
  nlohmann::json j;
  j["widths"] = net.widths();
  j["params"] = std::vector<double>(net.params().begin(), net.params().end());
  return j;
}

Mlp net_from_json(const nlohmann::json& j, const char* name) {
  const auto widths = j.at("widths").get<std::vector<int>>();
  if (widths.size() < 2 || std::any_of(widths.begin(), widths.end(), [](int w) { return w < 1; }))
    throw Error(std::string("model: invalid widths for ") + name);
  const auto params = j.at("params").get<std::vector<double>>();
  Mlp net(widths);
  auto dst = net.mutable_params();
  if (params.size() != dst.size())
    throw Error(std::string("model: ") + name + " has " + std::to_string(params.size()) +
                " parameters, widths require " + std::to_string(dst.size()));
  std::copy(params.begin(), params.end(), dst.begin());
  return net;
}

}  // namespace

void save_model(std::ostream& os, const PolicyModel& model) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = kModelFormatVersion;
  j["env"] = to_json(model.env);
  j["sac"] = to_json(model.sac);
  j["actor"] = net_to_json(model.actor);
  j["critics"] = {{"single", model.critics.single},
                  {"q1", net_to_json(model.critics.q1)},
                  {"q2", net_to_json(model.critics.q2)},
                  {"q1_target", net_to_json(model.critics.q1_target)},
                  {"q2_target", net_to_json(model.critics.q2_target)}};
  os << j.dump(1) << '\n';
  if (!os) throw Error("model: write failed");
}

void save_model(const std::string& path, const PolicyModel& model) {
  std::ofstream os(path);
  if (!os) throw Error("model: cannot open '" + path + "' for writing");
  save_model(os, model);
}

PolicyModel load_model(std::istream& is) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model: corrupt or truncated file: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", std::string()) != kFormatTag)
      throw Error("model: not an ar3n policy file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("model: unsupported format version " + std::to_string(version) +
                  " (expected " + std::to_string(kModelFormatVersion) + ")");
    PolicyModel m;
    from_json(j.at("env"), m.env);
    from_json(j.at("sac"), m.sac);
    m.env.validate();
    m.sac.validate();
    m.actor = net_from_json(j.at("actor"), "actor");
    if (m.actor.input_width() != m.env.n || m.actor.output_width() != 2)
      throw Error("model: actor widths do not match the observation length");
    const auto& c = j.at("critics");
    m.critics.single = c.at("single").get<bool>();
    m.critics.q1 = net_from_json(c.at("q1"), "q1");
    m.critics.q2 = net_from_json(c.at("q2"), "q2");
    m.critics.q1_target = net_from_json(c.at("q1_target"), "q1_target");
    m.critics.q2_target = net_from_json(c.at("q2_target"), "q2_target");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model: malformed file: ") + e.what());
  }
}

PolicyModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("model: cannot open '" + path + "'");
  try {
    return load_model(is);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace ar3n
