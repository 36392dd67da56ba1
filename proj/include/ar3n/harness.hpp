#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ar3n/config.hpp"
#include "ar3n/controllers.hpp"
#include "ar3n/env.hpp"
#include "ar3n/sac.hpp"
#include "ar3n/stats.hpp"

namespace ar3n {

/// Version string written to run manifests.
std::string code_version();

struct EpisodeResult {
  Shape shape = Shape::circle;
  std::uint64_t seed = 0;
  EpisodeLog log;
  std::vector<AssistEvent> events;
  double mean_error = 0.0;
  double mean_u = 0.0;  // mean |u|
  double mean_reward = 0.0;
  bool terminal = false;
};

/// One virtual-patient episode under `controller`. The reward is computed with
/// the gain the controller reports.
EpisodeResult run_episode(const EnvConfig& config, const Controller& controller, Shape shape,
                          std::uint64_t seed);

/// Tracking error after each assist-on event. Events whose window runs past the
/// end of the log are skipped.
struct PostEventStats {
  std::size_t events = 0;         // events with a complete window
  double mean_e_on = 0.0;         // mean error at the event
  double mean_e_after = 0.0;      // mean error `window` steps after the event
  double mean_window = 0.0;       // mean error over steps 1..window after the event
  double reduction = 0.0;         // 1 - mean_e_after / mean_e_on
};

PostEventStats post_event_stats(const std::vector<EpisodeResult>& runs, int window);

struct ControllerSample {
  std::string name;
  std::vector<EpisodeResult> runs;
  std::vector<double> event_errors;  // pooled over episodes, episode order
  Summary event_summary;
  PostEventStats post;
};

struct CompareReport {
  std::uint64_t seed = 0;
  int episodes = 0;
  int post_window = 0;  // steps
  ControllerSample a;
  ControllerSample b;
  bool test_applicable = false;
  std::string test_note;
  TTest test;  // a vs b
};

/// Runs both controllers on the same (seed, i)-derived episode for every
/// episode index i; shapes cycle through `shapes`. The post-event window is
/// 0.5 s of simulated time.
CompareReport compare_controllers(const EnvConfig& config, const Controller& a,
                                  std::string name_a, const Controller& b, std::string name_b,
                                  int episodes, std::uint64_t seed,
                                  const std::vector<Shape>& shapes);

/// AR3n (deterministic policy of `model`) against ER on the model's env config.
CompareReport run_compare(std::shared_ptr<const PolicyModel> model, const ErParams& er,
                          int episodes, std::uint64_t seed, const std::vector<Shape>& shapes);

/// Plain-text report with fixed precision; identical inputs give identical bytes.
void write_report(std::ostream& os, const CompareReport& report);

void write_reward_curve(std::ostream& os, const std::vector<EpisodeStat>& curve);
void write_events_csv(std::ostream& os, const ControllerSample& sample);
void write_episodes_csv(std::ostream& os, const CompareReport& report);

/// Writes the run manifest: every configuration key plus the code version.
void write_manifest(std::ostream& os, const RunConfig& cfg);

/// Artifact writers. Each creates `dir` if needed and throws ar3n::Error when
/// it cannot be written.
///   train:   model.json, reward_curve.csv, manifest.txt
///   compare: report.txt, events_<a>.csv, events_<b>.csv, episodes.csv,
///            logs/<name>_<i>.csv and .ndjson, manifest.txt
///   eval:    episodes.csv, logs/..., manifest.txt
void export_train(const std::filesystem::path& dir, const RunConfig& cfg,
                  const TrainResult& result);
void export_compare(const std::filesystem::path& dir, const RunConfig& cfg,
                    const CompareReport& report);
void export_eval(const std::filesystem::path& dir, const RunConfig& cfg,
                 const std::vector<EpisodeResult>& runs, const std::string& name);

/// Runs eval episodes: episode i uses shape shapes[i % size] and seed
/// episode_seed(seed, i).
std::vector<EpisodeResult> run_eval(const EnvConfig& config, const Controller& controller,
                                    int episodes, std::uint64_t seed,
                                    const std::vector<Shape>& shapes);

}  // namespace ar3n
