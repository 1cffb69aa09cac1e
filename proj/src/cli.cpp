#include "dsdsim/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "dsdsim/io.hpp"

namespace dsd {

namespace fs = std::filesystem;

const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> reg = {
      {"fig3-desk", "tap detector study: selected count, captured power, static agreement"},
      {"fig4-desk", "static channel NMSE vs SNR, sparse pipeline against ridge LS"},
      {"fig6-desk", "NMSE vs SNR at 120 km/h, refined pursuit against coarse-grid baseline"},
      {"fig7-desk", "NMSE vs prediction horizon at 55 km/h, Doppler compensation on/off"},
  };
  return reg;
}

ExperimentSpec scenario_spec(const std::string& id) {
  ExperimentSpec s;
  s.scenario = id;
  if (id == "fig3-desk") {
    s.tap_study = true;
    s.snr_db = {-10, -5, 0, 5, 10};
    s.speeds_kmh = {0, 120};
  } else if (id == "fig4-desk") {
    s.with_ls = true;
    s.snr_db = {-10, -5, 0, 5, 10};
    s.speeds_kmh = {0};
  } else if (id == "fig6-desk") {
    s.with_bomp = true;
    s.snr_db = {-5, 0, 5, 10};
    s.speeds_kmh = {120};
  } else if (id == "fig7-desk") {
    s.with_horizons = true;
    s.horizons = {0, 2, 4, 6, 8, 10};
    s.snr_db = {-1};
    s.speeds_kmh = {55};
  } else {
    std::string known;
    for (const auto& r : scenarios()) known += (known.empty() ? "" : ", ") + r.id;
    throw UsageError("unknown scenario '" + id + "'; available: " + known);
  }
  return s;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> vals;
  auto to_d = [&](const std::string& s) {
    size_t pos = 0;
    double v;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw UsageError("bad numeric value '" + s + "'");
    }
    if (pos != s.size()) throw UsageError("bad numeric value '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::istringstream is(text);
    std::string a, b, c;
    if (!std::getline(is, a, ':') || !std::getline(is, b, ':') || !std::getline(is, c))
      throw UsageError("range must be lo:step:hi");
    double lo = to_d(a), step = to_d(b), hi = to_d(c);
    if (step <= 0) throw UsageError("range step must be > 0");
    for (double v = lo; v <= hi + 1e-9; v += step) vals.push_back(v);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) vals.push_back(to_d(tok));
  }
  if (vals.empty()) throw UsageError("empty value list");
  return vals;
}

namespace {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "scenario",   "seed",      "out",        "jobs",       "snr",       "speed",
      "paths",      "frames",    "polls",      "format",     "trials",    "payload",
      "n_tx",       "n_rx",      "n_taps",     "grid_tx",    "grid_rx",   "phase_bits",
      "carrier_hz", "symbol_s",  "light_mps",  "mu",         "cap",       "miss_prob",
      "beta_tol",   "corr_floor", "ls_frames", "ridge_scale", "snr_convention",
      "nmse_convention", "phase_round"};
  return keys;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r\n";
    size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + " is not key=value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      std::string known;
      for (const auto& k : config_keys()) known += (known.empty() ? "" : ", ") + k;
      throw UsageError("unknown config key '" + key + "'; valid keys: " + known);
    }
    entries.emplace_back(std::move(key), std::move(val));
  }
  return entries;
}

namespace {

struct CliValues {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs, frames, polls;
  std::optional<std::string> snr, speed, paths, format;
  std::string config_path;
};

long to_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw UsageError("bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw UsageError("bad number for " + key + ": '" + v + "'");
  }
}

// precedence: flags > config file > DSDSIM_SEED > registry defaults
ExperimentSpec resolve_spec(const CliValues& cv, std::string& out_dir, std::string& format) {
  std::map<std::string, std::string> file;
  if (!cv.config_path.empty())
    for (auto& [k, v] : parse_config_file(cv.config_path)) file[k] = v;

  std::string scen = cv.scenario;
  if (scen.empty() && file.count("scenario")) scen = file["scenario"];
  if (scen.empty()) throw UsageError("no scenario given (positional, --scenario, or config)");
  ExperimentSpec spec = scenario_spec(scen);

  auto fstr = [&](const char* k) -> std::optional<std::string> {
    if (file.count(k)) return file[k];
    return std::nullopt;
  };

  if (auto v = fstr("snr")) spec.snr_db = parse_value_list(*v);
  if (auto v = fstr("speed")) spec.speeds_kmh = parse_value_list(*v);
  if (auto v = fstr("paths")) {
    spec.path_counts.clear();
    for (double d : parse_value_list(*v)) spec.path_counts.push_back(int(d));
  }
  if (auto v = fstr("frames")) spec.base.frames = int(to_long(*v, "frames"));
  if (auto v = fstr("polls")) spec.base.polls = int(to_long(*v, "polls"));
  if (auto v = fstr("trials")) spec.trials = int(to_long(*v, "trials"));
  if (auto v = fstr("payload")) spec.base.payload = int(to_long(*v, "payload"));
  if (auto v = fstr("jobs")) spec.jobs = int(to_long(*v, "jobs"));
  if (auto v = fstr("n_tx")) spec.base.sys.n_tx = int(to_long(*v, "n_tx"));
  if (auto v = fstr("n_rx")) spec.base.sys.n_rx = int(to_long(*v, "n_rx"));
  if (auto v = fstr("n_taps")) spec.base.sys.n_taps = int(to_long(*v, "n_taps"));
  if (auto v = fstr("grid_tx")) spec.base.sys.grid_tx = int(to_long(*v, "grid_tx"));
  if (auto v = fstr("grid_rx")) spec.base.sys.grid_rx = int(to_long(*v, "grid_rx"));
  if (auto v = fstr("phase_bits")) spec.base.sys.phase_bits = int(to_long(*v, "phase_bits"));
  if (auto v = fstr("carrier_hz")) spec.base.sys.carrier_hz = to_double(*v, "carrier_hz");
  if (auto v = fstr("symbol_s")) spec.base.sys.symbol_s = to_double(*v, "symbol_s");
  if (auto v = fstr("light_mps")) spec.base.sys.light_mps = to_double(*v, "light_mps");
  if (auto v = fstr("mu")) spec.base.detector.threshold = to_double(*v, "mu");
  if (auto v = fstr("cap")) spec.base.detector.cap = int(to_long(*v, "cap"));
  if (auto v = fstr("miss_prob")) spec.base.miss_prob = to_double(*v, "miss_prob");
  if (auto v = fstr("beta_tol")) spec.base.beta_tol = to_double(*v, "beta_tol");
  if (auto v = fstr("corr_floor")) spec.base.corr_floor = to_double(*v, "corr_floor");
  if (auto v = fstr("ls_frames")) spec.ls_frames = int(to_long(*v, "ls_frames"));
  if (auto v = fstr("ridge_scale")) spec.ridge_scale = to_double(*v, "ridge_scale");
  if (auto v = fstr("snr_convention")) {
    if (*v == "avg")
      spec.base.snr_kind = SnrKind::TrainingAverage;
    else if (*v == "per_symbol")
      spec.base.snr_kind = SnrKind::PerSymbol;
    else
      throw UsageError("snr_convention must be avg or per_symbol");
  }
  if (auto v = fstr("nmse_convention")) {
    if (*v == "norms")
      spec.base.nmse_kind = NmseKind::RatioOfNorms;
    else if (*v == "squares")
      spec.base.nmse_kind = NmseKind::RatioOfSquares;
    else
      throw UsageError("nmse_convention must be norms or squares");
  }
  if (auto v = fstr("phase_round")) {
    if (*v == "as_written")
      spec.base.sys.nearest_phase = false;
    else if (*v == "nearest")
      spec.base.sys.nearest_phase = true;
    else
      throw UsageError("phase_round must be as_written or nearest");
  }

  // flags override the file
  if (cv.snr) spec.snr_db = parse_value_list(*cv.snr);
  if (cv.speed) spec.speeds_kmh = parse_value_list(*cv.speed);
  if (cv.paths) {
    spec.path_counts.clear();
    for (double d : parse_value_list(*cv.paths)) spec.path_counts.push_back(int(d));
  }
  if (cv.frames) spec.base.frames = *cv.frames;
  if (cv.polls) spec.base.polls = *cv.polls;
  if (cv.jobs) spec.jobs = *cv.jobs;

  if (cv.seed)
    spec.seed = *cv.seed;
  else if (file.count("seed"))
    spec.seed = std::uint64_t(to_long(file["seed"], "seed"));
  else if (const char* env = std::getenv("DSDSIM_SEED"))
    spec.seed = std::uint64_t(to_long(env, "DSDSIM_SEED"));

  out_dir = cv.out ? *cv.out : (file.count("out") ? file["out"] : "out/" + spec.scenario);
  format = cv.format ? *cv.format : (file.count("format") ? file["format"] : "");
  if (!format.empty() && format != "csv" && format != "json")
    throw UsageError("--format must be csv or json");

  for (int p : spec.path_counts)
    if (p < 1) throw UsageError("paths must be >= 1");
  if (spec.base.frames < 1) throw UsageError("frames must be >= 1");
  if (spec.base.polls < 2) throw UsageError("polls must be >= 2");
  if (spec.trials < 1) throw UsageError("trials must be >= 1");
  if (spec.jobs < 1) throw UsageError("jobs must be >= 1");
  return spec;
}

json manifest_json(const ExperimentSpec& spec, const std::vector<std::string>& args,
                   const std::vector<std::string>& outputs) {
  json j;
  j["tool"] = "dsdsim";
  j["version"] = "0.1.0";
  j["argv"] = args;
  j["scenario"] = spec.scenario;
  j["seed"] = spec.seed;
  j["trials"] = spec.trials;
  j["jobs"] = spec.jobs;
  j["snr_db"] = spec.snr_db;
  j["speed_kmh"] = spec.speeds_kmh;
  j["paths"] = spec.path_counts;
  j["frames"] = spec.base.frames;
  j["polls"] = spec.base.polls;
  j["payload"] = spec.base.payload;
  j["ls_frames"] = spec.ls_frames;
  j["ridge_scale"] = spec.ridge_scale;
  j["horizons"] = spec.horizons;
  j["detector"] = {{"mu", spec.base.detector.threshold}, {"cap", spec.base.detector.cap}};
  j["miss_prob"] = spec.base.miss_prob;
  j["beta_tol"] = spec.base.beta_tol;
  j["corr_floor"] = spec.base.corr_floor;
  j["snr_convention"] = spec.base.snr_kind == SnrKind::TrainingAverage ? "avg" : "per_symbol";
  j["nmse_convention"] = spec.base.nmse_kind == NmseKind::RatioOfNorms ? "norms" : "squares";
  j["system"] = to_json(spec.base.sys);
  j["outputs"] = outputs;
  return j;
}

int do_run(const ExperimentSpec& spec, const std::string& out_dir, const std::string& format,
           const std::vector<std::string>& args, std::ostream& out) {
  ExperimentResult res = run_experiment(spec);
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  const bool want_csv = format.empty() || format == "csv";
  const bool want_json = format.empty() || format == "json";
  if (want_csv && !res.rows.empty()) {
    std::ofstream os(fs::path(out_dir) / "results.csv", std::ios::binary);
    write_results_csv(os, res.rows);
    written.push_back("results.csv");
  }
  if (want_csv && !res.taps.empty()) {
    std::ofstream os(fs::path(out_dir) / "taps.csv", std::ios::binary);
    write_tap_study_csv(os, res.taps);
    written.push_back("taps.csv");
  }
  if (want_json) {
    std::ofstream os(fs::path(out_dir) / "results.json", std::ios::binary);
    os << results_json(res).dump(2) << '\n';
    written.push_back("results.json");
  }
  {
    std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::binary);
    os << manifest_json(spec, args, written).dump(2) << '\n';
  }
  out << "wrote " << out_dir << " (";
  for (size_t i = 0; i < written.size(); ++i) out << (i ? ", " : "") << written[i];
  out << (written.empty() ? "manifest.json)" : ", manifest.json)") << '\n';
  return 0;
}

int do_check(ExperimentSpec spec, std::ostream& out) {
  // trimmed gate runs
  spec.trials = std::min(spec.trials, 16);
  bool ok = true;
  auto verdict = [&](bool pass, const std::string& what) {
    out << (pass ? "PASS " : "FAIL ") << what << '\n';
    ok = ok && pass;
  };

  if (spec.tap_study) {
    spec.snr_db = {0};
    spec.speeds_kmh = {0};
    ExperimentResult r = run_experiment(spec);
    const auto& row = r.taps.at(0);
    verdict(row.power_ratio >= 0.97,
            "captured power >= 0.97 (got " + format_double(row.power_ratio) + ")");
    verdict(row.mean_selected <= 5.0,
            "mean selected taps <= 5 (got " + format_double(row.mean_selected) + ")");
  } else if (spec.with_ls) {
    spec.snr_db = {0};
    ExperimentResult r = run_experiment(spec);
    double dsa = 0, ls = 0;
    for (const auto& row : r.rows)
      (row.scenario.find("/ls") != std::string::npos ? ls : dsa) = row.mean_nmse_db;
    verdict(dsa < ls, "sparse pipeline beats ridge LS at 0 dB (" + format_double(dsa) + " vs " +
                          format_double(ls) + " dB)");
  } else if (spec.with_bomp) {
    spec.snr_db = {0};
    ExperimentResult r = run_experiment(spec);
    double fine = 0, coarse = 0;
    for (const auto& row : r.rows)
      (row.scenario.find("/bomp") != std::string::npos ? coarse : fine) = row.mean_nmse_db;
    verdict(fine <= coarse, "refined pursuit at least matches coarse baseline (" +
                                format_double(fine) + " vs " + format_double(coarse) + " dB)");
  } else if (spec.with_horizons) {
    spec.horizons = {2, 10};
    ExperimentResult r = run_experiment(spec);
    auto find = [&](const std::string& frag) {
      for (const auto& row : r.rows)
        if (row.scenario.find(frag) != std::string::npos) return row.mean_nmse_db;
      throw std::runtime_error("missing row " + frag);
    };
    verdict(find("/comp-on/h2") < find("/comp-off/h2") &&
                find("/comp-on/h10") < find("/comp-off/h10"),
            "compensation helps at horizons 2 and 10");
  }
  return ok ? 0 : 3;
}

}  // namespace

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"doubly-sparse delay/angle channel estimation testbench"};
  app.require_subcommand(1);

  CliValues cv;
  std::string positional;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario_id", positional, "scenario id");
    cmd->add_option("--scenario", cv.scenario, "scenario id");
    cmd->add_option("--config", cv.config_path, "key=value config file");
    cmd->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { cv.seed = v; });
    cmd->add_option_function<std::string>("--out", [&](std::string v) { cv.out = v; });
    cmd->add_option_function<int>("--jobs", [&](int v) { cv.jobs = v; });
    cmd->add_option_function<std::string>("--snr", [&](std::string v) { cv.snr = v; });
    cmd->add_option_function<std::string>("--speed", [&](std::string v) { cv.speed = v; });
    cmd->add_option_function<std::string>("--paths", [&](std::string v) { cv.paths = v; });
    cmd->add_option_function<int>("--frames", [&](int v) { cv.frames = v; });
    cmd->add_option_function<int>("--polls", [&](int v) { cv.polls = v; });
    cmd->add_option_function<std::string>("--format", [&](std::string v) { cv.format = v; });
  };

  CLI::App* run = app.add_subcommand("run", "run a scenario and write result tables");
  add_common(run);
  CLI::App* check = app.add_subcommand("check", "run a scenario's pass/fail gate");
  add_common(check);
  app.add_subcommand("list", "list available scenarios");

  std::vector<const char*> argv;
  argv.push_back("dsdsim");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (app.got_subcommand("list")) {
      for (const auto& s : scenarios()) out << s.id << "  " << s.summary << '\n';
      return 0;
    }
    if (!positional.empty()) {
      if (!cv.scenario.empty() && cv.scenario != positional)
        throw UsageError("conflicting scenario given both positionally and via --scenario");
      cv.scenario = positional;
    }
    std::string out_dir, format;
    ExperimentSpec spec = resolve_spec(cv, out_dir, format);
    if (app.got_subcommand("run")) return do_run(spec, out_dir, format, args, out);
    return do_check(spec, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dsd
