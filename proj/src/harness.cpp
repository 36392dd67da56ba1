#include "ar3n/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "ar3n/model_io.hpp"

#ifndef AR3N_VERSION
#define AR3N_VERSION "unknown"
#endif

namespace ar3n {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error("cannot create output directory '" + dir.string() + "'");
}

void check_written(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw Error("write failed: '" + path.string() + "'");
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream os = open_out(path);
  body(os);
  check_written(os, path);
}

ControllerSample collect(std::string name, std::vector<EpisodeResult> runs, int window) {
  ControllerSample s;
  s.name = std::move(name);
  s.runs = std::move(runs);
  for (const EpisodeResult& r : s.runs)
    for (const AssistEvent& e : r.events) s.event_errors.push_back(e.e_at_on);
  s.event_summary = summarize(s.event_errors);
  s.post = post_event_stats(s.runs, window);
  return s;
}

void write_summary(std::ostream& os, const Summary& s) {
  os << "  events   " << s.count << '\n'
     << "  mean     " << fixed(s.mean) << '\n'
     << "  std      " << fixed(s.std) << '\n'
     << "  min      " << fixed(s.min) << '\n'
     << "  q1       " << fixed(s.q1) << '\n'
     << "  median   " << fixed(s.median) << '\n'
     << "  q3       " << fixed(s.q3) << '\n'
     << "  max      " << fixed(s.max) << '\n';
}

void write_logs(const fs::path& dir, const std::string& name,
                const std::vector<EpisodeResult>& runs) {
  ensure_dir(dir);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "_%03zu", i);
    write_file(dir / (name + stem + ".csv"), [&](std::ostream& os) { write_log_csv(os, runs[i].log); });
    write_file(dir / (name + stem + ".ndjson"),
               [&](std::ostream& os) { write_log_ndjson(os, runs[i].log); });
  }
}

void write_run_table(std::ostream& os, const std::string& name,
                     const std::vector<EpisodeResult>& runs, bool header) {
  const auto old = os.precision(17);
  if (header) os << "controller,episode,shape,seed,steps,terminal,mean_error,mean_u,mean_reward,events\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const EpisodeResult& r = runs[i];
    os << name << ',' << i << ',' << to_string(r.shape) << ',' << r.seed << ',' << r.log.size()
       << ',' << (r.terminal ? 1 : 0) << ',' << r.mean_error << ',' << r.mean_u << ','
       << r.mean_reward << ',' << r.events.size() << '\n';
  }
  os.precision(old);
}

}  // namespace

std::string code_version() { return AR3N_VERSION; }

EpisodeResult run_episode(const EnvConfig& config, const Controller& controller, Shape shape,
                          std::uint64_t seed) {
  Env env(config);
  env.reset(shape, seed);
  EpisodeResult out;
  out.shape = shape;
  out.seed = seed;
  while (!env.done()) {
    const AssistCommand cmd = controller.command(env.tracker(), env.patient().pos, config.rho);
    env.step(cmd);
  }
  out.log = env.log();
  out.terminal = env.tracker().at_end();
  for (const StepRecord& s : out.log) {
    out.mean_error += s.e;
    out.mean_u += s.u.norm();
    out.mean_reward += s.r;
  }
  const double n = static_cast<double>(out.log.size());
  out.mean_error /= n;
  out.mean_u /= n;
  out.mean_reward /= n;
  out.events = assist_on_events(out.log, controller.on_criterion());
  return out;
}

std::vector<EpisodeResult> run_eval(const EnvConfig& config, const Controller& controller,
                                    int episodes, std::uint64_t seed,
                                    const std::vector<Shape>& shapes) {
  if (shapes.empty()) throw Error("no shapes to evaluate");
  std::vector<EpisodeResult> runs;
  runs.reserve(episodes);
  for (int i = 0; i < episodes; ++i)
    runs.push_back(run_episode(config, controller, shapes[i % shapes.size()],
                               episode_seed(seed, static_cast<std::uint64_t>(i))));
  return runs;
}

PostEventStats post_event_stats(const std::vector<EpisodeResult>& runs, int window) {
  PostEventStats p;
  if (window < 1) throw Error("post-event window must be at least one step");
  for (const EpisodeResult& r : runs) {
    for (const AssistEvent& e : r.events) {
      const std::size_t last = e.step + static_cast<std::size_t>(window);
      if (last >= r.log.size()) continue;
      double sum = 0.0;
      for (std::size_t k = e.step + 1; k <= last; ++k) sum += r.log[k].e;
      p.events += 1;
      p.mean_e_on += r.log[e.step].e;
      p.mean_e_after += r.log[last].e;
      p.mean_window += sum / window;
    }
  }
  if (p.events == 0) return p;
  p.mean_e_on /= p.events;
  p.mean_e_after /= p.events;
  p.mean_window /= p.events;
  p.reduction = p.mean_e_on > 0 ? 1.0 - p.mean_e_after / p.mean_e_on : 0.0;
  return p;
}

CompareReport compare_controllers(const EnvConfig& config, const Controller& a,
                                  std::string name_a, const Controller& b, std::string name_b,
                                  int episodes, std::uint64_t seed,
                                  const std::vector<Shape>& shapes) {
  if (episodes < 1) throw Error("compare needs at least one episode");
  CompareReport rep;
  rep.seed = seed;
  rep.episodes = episodes;
  rep.post_window = static_cast<int>(std::lround(0.5 / config.dt));
  rep.a = collect(std::move(name_a), run_eval(config, a, episodes, seed, shapes), rep.post_window);
  rep.b = collect(std::move(name_b), run_eval(config, b, episodes, seed, shapes), rep.post_window);

  if (rep.a.event_errors.size() < 2 || rep.b.event_errors.size() < 2) {
    rep.test_note = "fewer than two assist-on events for " +
                    (rep.a.event_errors.size() < 2 ? rep.a.name : rep.b.name);
    return rep;
  }
  try {
    rep.test = welch_ttest(rep.a.event_errors, rep.b.event_errors);
    rep.test_applicable = true;
  } catch (const Error& e) {
    rep.test_note = e.what();
  }
  return rep;
}

CompareReport run_compare(std::shared_ptr<const PolicyModel> model, const ErParams& er,
                          int episodes, std::uint64_t seed, const std::vector<Shape>& shapes) {
  if (!model) throw Error("compare needs a trained model");
  const EnvConfig config = model->env;
  return compare_controllers(config, Controller::rl(model), "rl", Controller::er(er, config.rho),
                             "er", episodes, seed, shapes);
}

void write_report(std::ostream& os, const CompareReport& rep) {
  os << "compare " << rep.a.name << " vs " << rep.b.name << '\n'
     << "seed " << rep.seed << '\n'
     << "episodes " << rep.episodes << '\n'
     << "post_event_window_steps " << rep.post_window << '\n';
  for (const ControllerSample* s : {&rep.a, &rep.b}) {
    double me = 0.0, mu = 0.0;
    for (const EpisodeResult& r : s->runs) {
      me += r.mean_error;
      mu += r.mean_u;
    }
    const double n = s->runs.empty() ? 1.0 : static_cast<double>(s->runs.size());
    os << '\n' << "[" << s->name << "]\n";
    os << "  mean_episode_error " << fixed(me / n) << '\n'
       << "  mean_episode_u     " << fixed(mu / n) << '\n';
    os << " assist-on error\n";
    write_summary(os, s->event_summary);
    os << " post-event\n"
       << "  complete " << s->post.events << '\n'
       << "  e_on     " << fixed(s->post.mean_e_on) << '\n'
       << "  e_after  " << fixed(s->post.mean_e_after) << '\n'
       << "  window   " << fixed(s->post.mean_window) << '\n'
       << "  reduction " << fixed(s->post.reduction) << '\n';
  }
  os << "\n[welch]\n";
  if (rep.test_applicable) {
    char p[32];
    std::snprintf(p, sizeof p, "%.6e", rep.test.p);
    os << "  t  " << fixed(rep.test.t) << '\n'
       << "  df " << fixed(rep.test.df) << '\n'
       << "  p  " << p << '\n';
  } else {
    os << "  not applicable: " << rep.test_note << '\n';
  }
}

void write_reward_curve(std::ostream& os, const std::vector<EpisodeStat>& curve) {
  const auto old = os.precision(17);
  os << "episode,end_step,steps,shape,seed,terminal,mean_reward,max_reward,mean_error,mean_kappa\n";
  for (const EpisodeStat& e : curve)
    os << e.episode << ',' << e.end_step << ',' << e.steps << ',' << to_string(e.shape) << ','
       << e.seed << ',' << (e.terminal ? 1 : 0) << ',' << e.mean_reward << ',' << e.max_reward
       << ',' << e.mean_error
       << ',' << e.mean_kappa << '\n';
  os.precision(old);
}

void write_events_csv(std::ostream& os, const ControllerSample& sample) {
  const auto old = os.precision(17);
  os << "episode,step,t,e_at_on\n";
  for (std::size_t i = 0; i < sample.runs.size(); ++i)
    for (const AssistEvent& e : sample.runs[i].events)
      os << i << ',' << e.step << ',' << e.t << ',' << e.e_at_on << '\n';
  os.precision(old);
}

void write_episodes_csv(std::ostream& os, const CompareReport& report) {
  write_run_table(os, report.a.name, report.a.runs, true);
  write_run_table(os, report.b.name, report.b.runs, false);
}

void write_manifest(std::ostream& os, const RunConfig& cfg) {
  os << "# run manifest; pass back with --config to reproduce\n";
  KeyValues kv = to_key_values(cfg);
  kv.emplace_back("code_version", code_version());
  write_key_values(os, kv);
}

void export_train(const fs::path& dir, const RunConfig& cfg, const TrainResult& result) {
  ensure_dir(dir);
  save_model((dir / "model.json").string(), result.model);
  write_file(dir / "reward_curve.csv", [&](std::ostream& os) { write_reward_curve(os, result.curve); });
  write_file(dir / "manifest.txt", [&](std::ostream& os) { write_manifest(os, cfg); });
}

void export_compare(const fs::path& dir, const RunConfig& cfg, const CompareReport& report) {
  ensure_dir(dir);
  write_file(dir / "report.txt", [&](std::ostream& os) { write_report(os, report); });
  for (const ControllerSample* s : {&report.a, &report.b}) {
    write_file(dir / ("events_" + s->name + ".csv"),
               [&](std::ostream& os) { write_events_csv(os, *s); });
    write_logs(dir / "logs", s->name, s->runs);
  }
  write_file(dir / "episodes.csv", [&](std::ostream& os) { write_episodes_csv(os, report); });
  write_file(dir / "manifest.txt", [&](std::ostream& os) { write_manifest(os, cfg); });
}

void export_eval(const fs::path& dir, const RunConfig& cfg, const std::vector<EpisodeResult>& runs,
                 const std::string& name) {
  ensure_dir(dir);
  write_file(dir / "episodes.csv",
             [&](std::ostream& os) { write_run_table(os, name, runs, true); });
  write_logs(dir / "logs", name, runs);
  write_file(dir / "manifest.txt", [&](std::ostream& os) { write_manifest(os, cfg); });
}

}  // namespace ar3n
