#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsdsim/cli.hpp"
#include "dsdsim/io.hpp"

using namespace dsd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dsdsim_cli_test_" + std::to_string(rng_t(std::random_device{}())()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  int rc = run_main(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// heavily descoped job so the full command path stays fast
std::string small_config(const std::string& extra = "") {
  return "# unit scale\n"
         "n_tx = 8\n"
         "n_rx = 8\n"
         "grid_tx = 16\n"
         "grid_rx = 16\n"
         "n_taps = 4\n"
         "payload = 16\n"
         "frames = 6\n"
         "trials = 2\n"
         "ls_frames = 8\n" +
         extra;
}

}  // namespace

TEST_CASE("list prints the scenario registry") {
  std::string out;
  CHECK(run({"list"}, &out) == 0);
  for (const auto& s : scenarios()) {
    CHECK(out.find(s.id) != std::string::npos);
  }
  CHECK(scenarios().size() == 4);
}

TEST_CASE("value lists accept ranges and commas") {
  CHECK(parse_value_list("0:2:6") == std::vector<double>{0, 2, 4, 6});
  CHECK(parse_value_list("-10:5:0") == std::vector<double>{-10, -5, 0});
  CHECK(parse_value_list("1,2,3.5") == std::vector<double>{1, 2, 3.5});
  CHECK(parse_value_list("7") == std::vector<double>{7});
  CHECK_THROWS_AS(parse_value_list("5:0:10"), UsageError);
  CHECK_THROWS_AS(parse_value_list("a,b"), UsageError);
  CHECK_THROWS_AS(parse_value_list("1:2"), UsageError);
}

TEST_CASE("scenario registry resolves ids") {
  CHECK(scenario_spec("fig3-desk").tap_study);
  CHECK(scenario_spec("fig4-desk").with_ls);
  CHECK(scenario_spec("fig6-desk").with_bomp);
  CHECK(scenario_spec("fig7-desk").with_horizons);
  CHECK_THROWS_AS(scenario_spec("fig9-desk"), UsageError);
  try {
    scenario_spec("nope");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("available:") != std::string::npos);
    CHECK(std::string(e.what()).find("fig4-desk") != std::string::npos);
  }
}

TEST_CASE("usage failures exit with code 1") {
  std::string err;
  CHECK(run({"run", "fig9-desk"}, nullptr, &err) == 1);
  CHECK(err.find("available:") != std::string::npos);

  CHECK(run({"run", "fig4-desk", "--scenario", "fig3-desk"}, nullptr, &err) == 1);
  CHECK(err.find("conflicting") != std::string::npos);

  CHECK(run({"run"}, nullptr, &err) == 1);  // no scenario anywhere
  CHECK(run({"bogus-subcommand"}, nullptr, &err) == 1);
  CHECK(run({"run", "fig4-desk", "--snr", "5:0:10"}, nullptr, &err) == 1);
  CHECK(run({"run", "fig4-desk", "--format", "yaml"}, nullptr, &err) == 1);
}

TEST_CASE("config files are validated") {
  TempDir tmp;
  fs::path good = tmp.path / "good.cfg";
  write_file(good, "scenario = fig4-desk\nsnr = 0,5\n# comment\ntrials = 3\n");
  auto entries = parse_config_file(good.string());
  REQUIRE(entries.size() == 3);
  CHECK(entries[0] == std::pair<std::string, std::string>{"scenario", "fig4-desk"});

  fs::path bad_key = tmp.path / "bad_key.cfg";
  write_file(bad_key, "scenario = fig4-desk\nturbo = on\n");
  try {
    parse_config_file(bad_key.string());
    CHECK(false);
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("unknown config key 'turbo'") != std::string::npos);
    CHECK(std::string(e.what()).find("valid keys:") != std::string::npos);
    CHECK(std::string(e.what()).find("snr_convention") != std::string::npos);
  }

  fs::path bad_line = tmp.path / "bad_line.cfg";
  write_file(bad_line, "just some words\n");
  CHECK_THROWS_AS(parse_config_file(bad_line.string()), UsageError);
  CHECK_THROWS_AS(parse_config_file((tmp.path / "missing.cfg").string()), UsageError);

  std::string err;
  CHECK(run({"run", "--config", bad_key.string()}, nullptr, &err) == 1);
  CHECK(err.find("turbo") != std::string::npos);
}

TEST_CASE("run writes tables, a manifest, and is byte-deterministic") {
  TempDir tmp;
  fs::path cfg = tmp.path / "run.cfg";
  write_file(cfg, small_config("scenario = fig4-desk\nsnr = 0\nseed = 7\n"));

  fs::path out1 = tmp.path / "a", out2 = tmp.path / "b";
  std::string text;
  CHECK(run({"run", "--config", cfg.string(), "--out", out1.string()}, &text) == 0);
  CHECK(text.find("results.csv") != std::string::npos);
  REQUIRE(fs::exists(out1 / "results.csv"));
  REQUIRE(fs::exists(out1 / "results.json"));
  REQUIRE(fs::exists(out1 / "manifest.json"));

  std::string csv = slurp(out1 / "results.csv");
  CHECK(csv.rfind("scenario,snr_db,speed,p,trial_count,mean_nmse_db,ci_lo,ci_hi\n", 0) == 0);
  CHECK(csv.find("fig4-desk/ls,") != std::string::npos);

  json manifest = json::parse(slurp(out1 / "manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["scenario"] == "fig4-desk");
  CHECK(!manifest.contains("timestamp"));

  CHECK(run({"run", "--config", cfg.string(), "--out", out2.string()}) == 0);
  CHECK(slurp(out2 / "results.csv") == csv);
  CHECK(slurp(out2 / "results.json") == slurp(out1 / "results.json"));

  // format selection suppresses the other table
  fs::path out3 = tmp.path / "c";
  CHECK(run({"run", "--config", cfg.string(), "--out", out3.string(), "--format", "json"}) == 0);
  CHECK(!fs::exists(out3 / "results.csv"));
  CHECK(fs::exists(out3 / "results.json"));
}

TEST_CASE("tap study scenario writes the taps table") {
  TempDir tmp;
  fs::path cfg = tmp.path / "run.cfg";
  write_file(cfg, small_config("scenario = fig3-desk\nsnr = 0\nspeed = 0\nseed = 3\n"));
  fs::path out = tmp.path / "o";
  CHECK(run({"run", "--config", cfg.string(), "--out", out.string()}) == 0);
  REQUIRE(fs::exists(out / "taps.csv"));
  std::string csv = slurp(out / "taps.csv");
  CHECK(csv.rfind("scenario,snr_db,speed,p,trial_count,mean_selected,power_ratio,agreement\n",
                  0) == 0);
  CHECK(!fs::exists(out / "results.csv"));  // no nmse rows in a tap study
}

TEST_CASE("seed precedence: flag over file over environment") {
  TempDir tmp;
  fs::path cfg = tmp.path / "run.cfg";
  write_file(cfg, small_config("scenario = fig4-desk\nsnr = 0\nseed = 11\n"));

  setenv("DSDSIM_SEED", "400", 1);
  fs::path o1 = tmp.path / "env_only";
  fs::path cfg_noseed = tmp.path / "noseed.cfg";
  write_file(cfg_noseed, small_config("scenario = fig4-desk\nsnr = 0\n"));
  CHECK(run({"run", "--config", cfg_noseed.string(), "--out", o1.string()}) == 0);
  CHECK(json::parse(slurp(o1 / "manifest.json"))["seed"] == 400);

  fs::path o2 = tmp.path / "file_wins";
  CHECK(run({"run", "--config", cfg.string(), "--out", o2.string()}) == 0);
  CHECK(json::parse(slurp(o2 / "manifest.json"))["seed"] == 11);

  fs::path o3 = tmp.path / "flag_wins";
  CHECK(run({"run", "--config", cfg.string(), "--out", o3.string(), "--seed", "123"}) == 0);
  CHECK(json::parse(slurp(o3 / "manifest.json"))["seed"] == 123);
  unsetenv("DSDSIM_SEED");
}

TEST_CASE("runtime failures exit with code 2") {
  TempDir tmp;
  fs::path cfg = tmp.path / "run.cfg";
  // payload is not a multiple of n_taps: caught deep inside the pipeline
  write_file(cfg, small_config("scenario = fig4-desk\nsnr = 0\nn_taps = 3\n"));
  std::string err;
  CHECK(run({"run", "--config", cfg.string(), "--out", (tmp.path / "x").string()}, nullptr,
            &err) == 2);
  CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("check gate passes on a descoped static comparison") {
  TempDir tmp;
  fs::path cfg = tmp.path / "check.cfg";
  write_file(cfg, "scenario = fig4-desk\n"
                  "n_tx = 16\nn_rx = 16\ngrid_tx = 32\ngrid_rx = 32\nn_taps = 8\n"
                  "payload = 32\nframes = 16\ntrials = 6\nls_frames = 12\nseed = 2\n");
  std::string out;
  CHECK(run({"check", "--config", cfg.string()}, &out) == 0);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("json round trips preserve configs and supports") {
  SystemConfig cfg;
  cfg.n_tx = 12;
  cfg.grid_rx = 48;
  cfg.speed_mps = 13.5;
  cfg.nearest_phase = true;
  SystemConfig back = system_config_from_json(to_json(cfg));
  CHECK(back.n_tx == 12);
  CHECK(back.grid_rx == 48);
  CHECK(back.speed_mps == 13.5);
  CHECK(back.nearest_phase);

  SupportEstimate se;
  se.tap = 5;
  se.coarse = {{1, 2}};
  se.fine = {{70, 130}};
  se.freqs = {{0.123, 0.456}};
  se.iterations = 2;
  se.beta = 0.25;
  SupportEstimate se2 = support_from_json(to_json(se));
  CHECK(se2.tap == 5);
  CHECK(se2.coarse == se.coarse);
  CHECK(se2.fine == se.fine);
  CHECK(se2.freqs == se.freqs);
  CHECK(se2.beta == 0.25);

  rng_t rng(4);
  SystemConfig sim_cfg;
  sim_cfg.n_tx = 4;
  sim_cfg.n_rx = 4;
  sim_cfg.n_taps = 4;
  sim_cfg.noise_var = 0.5;
  ChannelRealization ch = sample_channel(sim_cfg, 2, rng);
  ChannelRealization ch2 = channel_from_json(to_json(ch, sim_cfg), sim_cfg);
  REQUIRE(ch2.paths.size() == 2);
  CHECK((ch2.tap_gains - ch.tap_gains).cwiseAbs().maxCoeff() < 1e-12);

  ProbeSchedule s = random_schedule(sim_cfg, 3, rng);
  ProbeSchedule s2 = schedule_from_json(to_json(s));
  REQUIRE(s2.subframes() == 3);
  for (int l = 0; l < 3; ++l) CHECK((s2.tx[l] - s.tx[l]).norm() < 1e-15);

  TrainingFrame f = build_frame(FrameKind::Proposed, sim_cfg, 8);
  RxTrace tr = simulate_rx(ch, f, s, sim_cfg, 40, rng);
  RxTrace tr2 = trace_from_json(to_json(tr));
  CHECK(tr2.start_instant == 40);
  CHECK(tr2.noise_var == 0.5);
  CHECK((tr2.samples - tr.samples).cwiseAbs().maxCoeff() < 1e-15);
}
