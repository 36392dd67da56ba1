// ar3n command-line entry point: train, eval, compare, serve.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ar3n/bridge_server.hpp"
#include "ar3n/config.hpp"
#include "ar3n/harness.hpp"
#include "ar3n/model_io.hpp"

using namespace ar3n;

namespace {

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  // Each flag is forwarded as a config key only when given on the command line.
  std::vector<std::pair<CLI::Option*, std::string>> keyed;
  std::map<std::string, std::string> values;
};

void keyed_option(CLI::App* app, Flags& f, const std::string& flag, const std::string& key,
                  const std::string& help) {
  CLI::Option* opt = app->add_option(flag, f.values[key], help);
  f.keyed.emplace_back(opt, key);
}

RunConfig resolve(const Flags& f, RunMode mode) {
  RunConfig cfg;
  if (!f.config_file.empty()) {
    std::ifstream is(f.config_file);
    if (!is) throw Error("cannot open config file '" + f.config_file + "'");
    apply_key_values(cfg, read_key_values(is));
  }
  KeyValues kv;
  for (const auto& [opt, key] : f.keyed)
    if (opt->count() > 0) kv.emplace_back(key, f.values.at(key));
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  apply_key_values(cfg, kv);
  cfg.mode = mode;
  cfg.validate();
  return cfg;
}

std::shared_ptr<const PolicyModel> load_shared(const std::string& path) {
  return std::make_shared<const PolicyModel>(load_model(path));
}

int cmd_train(const RunConfig& cfg) {
  std::fprintf(stderr, "training %d steps, seed %llu\n", cfg.sac.total_steps,
               static_cast<unsigned long long>(cfg.seed));
  const TrainResult result = train(cfg.env, cfg.sac, [](const EpisodeStat& e) {
    if (e.episode % 10 == 0)
      std::fprintf(stderr, "episode %4d  step %6ld  reward %.4f  error %.4f  kappa %.3f\n",
                   e.episode, e.end_step, e.mean_reward, e.mean_error, e.mean_kappa);
  });
  export_train(cfg.out_dir, cfg, result);
  std::printf("%zu episodes, model written to %s/model.json\n", result.curve.size(),
              cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg, bool export_out) {
  EnvConfig env = cfg.env;
  Controller controller = Controller::none();
  if (cfg.controller == ControllerKind::rl) {
    auto model = load_shared(cfg.model_path);
    env = model->env;
    controller = Controller::rl(model);
  } else if (cfg.controller == ControllerKind::er) {
    controller = Controller::er(cfg.er, env.rho);
  }
  const auto runs = run_eval(env, controller, cfg.episodes, cfg.seed, cfg.shape_list());
  std::printf("%-4s %-13s %6s %10s %10s %11s %6s\n", "ep", "shape", "steps", "error", "|u|",
              "reward", "events");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const EpisodeResult& r = runs[i];
    std::printf("%-4zu %-13s %6zu %10.5f %10.5f %11.5f %6zu\n", i,
                std::string(to_string(r.shape)).c_str(), r.log.size(), r.mean_error, r.mean_u,
                r.mean_reward, r.events.size());
  }
  if (export_out) export_eval(cfg.out_dir, cfg, runs, std::string(to_string(cfg.controller)));
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  const CompareReport rep =
      run_compare(load_shared(cfg.model_path), cfg.er, cfg.episodes, cfg.seed, cfg.shape_list());
  write_report(std::cout, rep);
  export_compare(cfg.out_dir, cfg, rep);
  return 0;
}

int cmd_serve(const RunConfig& cfg, bool mirror_x, bool mirror_y, const std::string& address) {
  ServerConfig sc;
  sc.address = address;
  sc.port = static_cast<unsigned short>(cfg.port);
  sc.session.controller = cfg.controller;
  sc.session.model_path = cfg.model_path;
  sc.session.mirror_x = mirror_x;
  sc.session.mirror_y = mirror_y;
  sc.session.er = cfg.er;
  sc.session.env = cfg.env;
  sc.out_dir = cfg.out_dir;
  if (cfg.controller == ControllerKind::rl) {
    sc.model = load_shared(cfg.model_path);
    sc.session.env = sc.model->env;
  }
  BridgeServer server(std::move(sc));
  std::printf("listening on ws://%s:%u\n", address.c_str(), server.port());
  std::fflush(stdout);
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assist-as-needed tracking: SAC training, evaluation and live sessions"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config_file, "key = value run configuration file");
  app.add_option("--set", f.sets, "override any configuration key, key=value");

  auto* train_cmd = app.add_subcommand("train", "train a policy");
  keyed_option(train_cmd, f, "--seed", "seed", "run seed");
  keyed_option(train_cmd, f, "--steps", "sac.total_steps", "environment steps");
  keyed_option(train_cmd, f, "--out", "out", "output directory");

  auto* eval_cmd = app.add_subcommand("eval", "run episodes with one controller");
  keyed_option(eval_cmd, f, "--model", "model", "policy file");
  keyed_option(eval_cmd, f, "--shape", "shapes", "shape id, list, or training|testing|all");
  keyed_option(eval_cmd, f, "--episodes", "episodes", "episode count");
  keyed_option(eval_cmd, f, "--seed", "seed", "run seed");
  keyed_option(eval_cmd, f, "--controller", "controller", "rl | er | none");
  std::string eval_out;
  eval_cmd->add_option("--out", eval_out, "write episode logs here");

  auto* compare_cmd = app.add_subcommand("compare", "AR3n versus ER on paired episodes");
  keyed_option(compare_cmd, f, "--model", "model", "policy file");
  keyed_option(compare_cmd, f, "--episodes", "episodes", "episode count");
  keyed_option(compare_cmd, f, "--seed", "seed", "run seed");
  keyed_option(compare_cmd, f, "--shapes", "shapes", "shape set");
  keyed_option(compare_cmd, f, "--out", "out", "output directory");

  auto* serve_cmd = app.add_subcommand("serve", "live session server");
  keyed_option(serve_cmd, f, "--model", "model", "policy file (rl controller)");
  keyed_option(serve_cmd, f, "--port", "port", "TCP port");
  keyed_option(serve_cmd, f, "--controller", "controller", "T2 controller: rl | er | none");
  keyed_option(serve_cmd, f, "--out", "out", "session log directory");
  bool mirror_x = false, mirror_y = false;
  std::string address = "127.0.0.1";
  serve_cmd->add_flag("--mirror-x", mirror_x, "mirror pointer x");
  serve_cmd->add_flag("--mirror-y", mirror_y, "mirror pointer y");
  serve_cmd->add_option("--address", address, "listen address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(resolve(f, RunMode::train));
    if (eval_cmd->parsed()) {
      if (!eval_out.empty()) f.sets.push_back("out=" + eval_out);
      return cmd_eval(resolve(f, RunMode::eval), !eval_out.empty());
    }
    if (compare_cmd->parsed()) return cmd_compare(resolve(f, RunMode::compare));
    if (serve_cmd->parsed()) return cmd_serve(resolve(f, RunMode::serve), mirror_x, mirror_y, address);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
