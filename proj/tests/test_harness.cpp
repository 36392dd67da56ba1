#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ar3n/harness.hpp"

using namespace ar3n;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), dir).generic_string());
  return names;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ar3n_test_" + name);
  fs::remove_all(p);
  return p;
}

const std::vector<Shape> kTwo{Shape::star, Shape::spiral};

}  // namespace

TEST_CASE("post-event statistics by hand") {
  EpisodeResult r;
  for (int i = 0; i < 30; ++i) {
    StepRecord row;
    row.e = 0.01 * i;
    r.log.push_back(row);
  }
  r.events = {{0.04, 0.02, 2}, {0.56, 0.28, 28}};  // the second window is incomplete
  const PostEventStats p = post_event_stats({r}, 3);
  CHECK(p.events == 1);
  CHECK(p.mean_e_on == doctest::Approx(0.02));
  CHECK(p.mean_e_after == doctest::Approx(0.05));
  CHECK(p.mean_window == doctest::Approx(0.04));
  CHECK(p.reduction == doctest::Approx(1.0 - 0.05 / 0.02));
  CHECK_THROWS_AS(post_event_stats({r}, 0), Error);
}

TEST_CASE("a controller compared with itself gives t = 0 and p = 1") {
  const Controller er = Controller::er(ErParams{}, 3.0);
  const CompareReport rep = compare_controllers(EnvConfig{}, er, "x", er, "y", 6, 3, kTwo);
  REQUIRE(rep.test_applicable);
  CHECK(rep.test.t == 0.0);
  CHECK(rep.test.p == doctest::Approx(1.0));
  CHECK(rep.post_window == 25);
}

TEST_CASE("both controllers see the same wind on every episode") {
  const Controller none = Controller::none();
  const CompareReport rep =
      compare_controllers(EnvConfig{}, none, "a", none, "b", 3, 11, kTwo);
  for (int i = 0; i < 3; ++i) {
    const auto& ra = rep.a.runs[i];
    const auto& rb = rep.b.runs[i];
    CHECK(ra.seed == episode_seed(11, i));
    CHECK(ra.seed == rb.seed);
    CHECK(ra.shape == kTwo[i % 2]);
    REQUIRE(ra.log.size() == rb.log.size());
    for (std::size_t k = 0; k < ra.log.size(); ++k) CHECK(ra.log[k].x.x == rb.log[k].x.x);
  }
  CHECK_FALSE(rep.test_applicable);
  CHECK(rep.test_note.find("fewer than two") != std::string::npos);
}

TEST_CASE("reports are byte-identical for a fixed seed") {
  auto model = std::make_shared<const PolicyModel>(init_model(EnvConfig{}, SacConfig{}));
  std::ostringstream a, b;
  write_report(a, run_compare(model, ErParams{}, 4, 5, kTwo));
  write_report(b, run_compare(model, ErParams{}, 4, 5, kTwo));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("[welch]") != std::string::npos);
  std::ostringstream c;
  write_report(c, run_compare(model, ErParams{}, 4, 6, kTwo));
  CHECK(c.str() != a.str());
}

TEST_CASE("train export writes the model, curve and manifest") {
  RunConfig cfg;
  cfg.sac.total_steps = 600;
  cfg.sac.warmup_steps = 200;
  cfg.sac.batch_size = 16;
  const TrainResult r = train(cfg.env, cfg.sac);
  const fs::path dir = scratch("train");
  export_train(dir, cfg, r);
  CHECK(listing(dir) == std::set<std::string>{"manifest.txt", "model.json", "reward_curve.csv"});
  std::istringstream curve(slurp(dir / "reward_curve.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(curve, line);
  CHECK(line.rfind("episode,end_step,", 0) == 0);
  while (std::getline(curve, line)) ++rows;
  CHECK(rows == r.curve.size());
  fs::remove_all(dir);
}

TEST_CASE("compare export writes the report, events, episodes and logs") {
  RunConfig cfg;
  cfg.mode = RunMode::compare;
  cfg.episodes = 2;
  cfg.model_path = "unused";
  auto model = std::make_shared<const PolicyModel>(init_model(cfg.env, cfg.sac));
  const CompareReport rep = run_compare(model, cfg.er, 2, 1, kTwo);
  const fs::path dir = scratch("compare");
  export_compare(dir, cfg, rep);
  const std::set<std::string> expected{
      "report.txt",          "events_rl.csv",       "events_er.csv",       "episodes.csv",
      "manifest.txt",        "logs/rl_000.csv",     "logs/rl_000.ndjson",  "logs/rl_001.csv",
      "logs/rl_001.ndjson",  "logs/er_000.csv",     "logs/er_000.ndjson",  "logs/er_001.csv",
      "logs/er_001.ndjson"};
  CHECK(listing(dir) == expected);

  // rerunning from the manifest reproduces every file
  RunConfig again;
  std::ifstream mf(dir / "manifest.txt");
  apply_key_values(again, read_key_values(mf));
  const fs::path dir2 = scratch("compare2");
  export_compare(dir2, again, run_compare(model, again.er, again.episodes, again.seed, kTwo));
  for (const std::string& f : expected) {
    CAPTURE(f);
    CHECK(slurp(dir / f) == slurp(dir2 / f));
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("eval export and run_eval shape cycling") {
  RunConfig cfg;
  cfg.mode = RunMode::eval;
  const auto runs = run_eval(cfg.env, Controller::none(), 3, 2, kTwo);
  CHECK(runs[2].shape == Shape::star);
  const fs::path dir = scratch("eval");
  export_eval(dir, cfg, runs, "none");
  CHECK(listing(dir).count("episodes.csv") == 1);
  CHECK(listing(dir).count("logs/none_002.csv") == 1);
  fs::remove_all(dir);
}

TEST_CASE("unwritable output directories are reported") {
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  RunConfig cfg;
  const auto runs = run_eval(cfg.env, Controller::none(), 1, 1, kTwo);
  CHECK_THROWS_AS(export_eval(file / "sub", cfg, runs, "none"), Error);
  fs::remove(file);
}

TEST_CASE("episode csv has one row per controller episode") {
  const Controller er = Controller::er(ErParams{}, 3.0);
  const CompareReport rep =
      compare_controllers(EnvConfig{}, er, "a", Controller::none(), "b", 3, 1, kTwo);
  std::ostringstream os;
  write_episodes_csv(os, rep);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 6);
  std::ostringstream ev;
  write_events_csv(ev, rep.a);
  CHECK(ev.str().rfind("episode,step,t,e_at_on\n", 0) == 0);
}
