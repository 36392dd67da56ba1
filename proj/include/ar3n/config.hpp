#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ar3n/controllers.hpp"
#include "ar3n/env.hpp"
#include "ar3n/sac.hpp"

namespace ar3n {

enum class RunMode { train, eval, compare, serve };

std::string_view to_string(RunMode m);
RunMode parse_mode(std::string_view name);

struct RunConfig {
  RunMode mode = RunMode::train;
  std::uint64_t seed = 1;
  /// "training", "testing", "all" or a comma-separated list of shape ids.
  std::string shapes = "testing";
  ControllerKind controller = ControllerKind::rl;
  ErParams er;
  EnvConfig env;
  SacConfig sac;
  int episodes = 50;
  std::string model_path;
  std::string out_dir = "out";
  int port = 8765;

  /// Throws ar3n::Error when a field required by the mode is missing.
  void validate() const;
  std::vector<Shape> shape_list() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
KeyValues read_key_values(std::istream& is);
void write_key_values(std::ostream& os, const KeyValues& kv);

/// Applies keys in order. Keys: mode, seed, shapes, controller, episodes,
/// model, out, port, er.<field>, env.<field>, patient.<field>, sac.<field>.
/// Unknown keys raise ar3n::Error naming the key.
void apply_key_values(RunConfig& cfg, const KeyValues& kv);
/// Every key of the configuration; reading it back reproduces `cfg` exactly.
KeyValues to_key_values(const RunConfig& cfg);

nlohmann::json to_json(const EnvConfig& c);
nlohmann::json to_json(const SacConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);
void from_json(const nlohmann::json& j, SacConfig& c);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace ar3n
