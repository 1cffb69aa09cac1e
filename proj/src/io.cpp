#include "dsdsim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace dsd {

namespace {

json cplx_json(cplx v) { return json::array({v.real(), v.imag()}); }
cplx cplx_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json cvec_json(const cvec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cplx_json(v[i]));
  return a;
}

cvec cvec_from(const json& j) {
  cvec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = cplx_from(j[i]);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json to_json(const SystemConfig& cfg) {
  return {{"n_tx", cfg.n_tx},       {"n_rx", cfg.n_rx},
          {"n_taps", cfg.n_taps},   {"grid_tx", cfg.grid_tx},
          {"grid_rx", cfg.grid_rx}, {"phase_bits", cfg.phase_bits},
          {"carrier_hz", cfg.carrier_hz}, {"symbol_s", cfg.symbol_s},
          {"speed_mps", cfg.speed_mps},   {"light_mps", cfg.light_mps},
          {"noise_var", cfg.noise_var},   {"nearest_phase", cfg.nearest_phase}};
}

SystemConfig system_config_from_json(const json& j) {
  SystemConfig cfg;
  cfg.n_tx = j.at("n_tx").get<int>();
  cfg.n_rx = j.at("n_rx").get<int>();
  cfg.n_taps = j.at("n_taps").get<int>();
  cfg.grid_tx = j.at("grid_tx").get<int>();
  cfg.grid_rx = j.at("grid_rx").get<int>();
  cfg.phase_bits = j.at("phase_bits").get<int>();
  cfg.carrier_hz = j.at("carrier_hz").get<double>();
  cfg.symbol_s = j.at("symbol_s").get<double>();
  cfg.speed_mps = j.at("speed_mps").get<double>();
  cfg.light_mps = j.at("light_mps").get<double>();
  cfg.noise_var = j.at("noise_var").get<double>();
  cfg.nearest_phase = j.at("nearest_phase").get<bool>();
  cfg.validate();
  return cfg;
}

json to_json(const ChannelRealization& ch, const SystemConfig&) {
  json paths = json::array();
  for (const auto& p : ch.paths)
    paths.push_back({{"gain", cplx_json(p.gain)},
                     {"delay_s", p.delay_s},
                     {"aoa_rad", p.aoa_rad},
                     {"aod_rad", p.aod_rad},
                     {"doppler", p.doppler}});
  return {{"paths", paths}};
}

ChannelRealization channel_from_json(const json& j, const SystemConfig& cfg) {
  std::vector<PathParams> paths;
  for (const auto& pj : j.at("paths")) {
    PathParams p;
    p.gain = cplx_from(pj.at("gain"));
    p.delay_s = pj.at("delay_s").get<double>();
    p.aoa_rad = pj.at("aoa_rad").get<double>();
    p.aod_rad = pj.at("aod_rad").get<double>();
    p.doppler = pj.at("doppler").get<double>();
    paths.push_back(p);
  }
  return realize_paths(cfg, std::move(paths));
}

json to_json(const ProbeSchedule& s) {
  json tx = json::array(), rx = json::array();
  for (const auto& v : s.tx) tx.push_back(cvec_json(v));
  for (const auto& v : s.rx) rx.push_back(cvec_json(v));
  return {{"tx", tx}, {"rx", rx}};
}

ProbeSchedule schedule_from_json(const json& j) {
  ProbeSchedule s;
  for (const auto& v : j.at("tx")) s.tx.push_back(cvec_from(v));
  for (const auto& v : j.at("rx")) s.rx.push_back(cvec_from(v));
  if (s.tx.size() != s.rx.size()) throw std::invalid_argument("tx/rx schedule length mismatch");
  return s;
}

json to_json(const RxTrace& t) {
  return {{"samples", cvec_json(t.samples)},
          {"noise_var", t.noise_var},
          {"start_instant", t.start_instant}};
}

RxTrace trace_from_json(const json& j) {
  RxTrace t;
  t.samples = cvec_from(j.at("samples"));
  t.noise_var = j.at("noise_var").get<double>();
  t.start_instant = j.at("start_instant").get<std::int64_t>();
  return t;
}

json to_json(const SupportEstimate& se) {
  json coarse = json::array(), fine = json::array(), freqs = json::array();
  for (const auto& [a, b] : se.coarse) coarse.push_back({a, b});
  for (const auto& [a, b] : se.fine) fine.push_back({a, b});
  for (const auto& [a, b] : se.freqs) freqs.push_back({a, b});
  return {{"tap", se.tap},     {"coarse", coarse},         {"fine", fine},
          {"freqs", freqs},    {"iterations", se.iterations}, {"beta", se.beta},
          {"regularized", se.regularized}};
}

SupportEstimate support_from_json(const json& j) {
  SupportEstimate se;
  se.tap = j.at("tap").get<int>();
  for (const auto& v : j.at("coarse")) se.coarse.emplace_back(v.at(0).get<int>(), v.at(1).get<int>());
  for (const auto& v : j.at("fine")) se.fine.emplace_back(v.at(0).get<int>(), v.at(1).get<int>());
  for (const auto& v : j.at("freqs"))
    se.freqs.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  se.iterations = j.at("iterations").get<int>();
  se.beta = j.at("beta").get<double>();
  se.regularized = j.at("regularized").get<bool>();
  return se;
}

void write_tap_stats_csv(std::ostream& os, const TapStats& stats, const std::vector<int>& selected) {
  os << "tap,ts,nts,selected\n";
  for (Eigen::Index d = 0; d < stats.ts.size(); ++d) {
    bool sel = std::find(selected.begin(), selected.end(), int(d)) != selected.end();
    os << d << ',' << format_double(stats.ts[d]) << ',' << format_double(stats.nts[d]) << ','
       << (sel ? 1 : 0) << '\n';
  }
}

void write_beams_csv(std::ostream& os, const std::vector<std::vector<BeamEstimate>>& beams) {
  os << "tap,beam,gain_re,gain_im,doppler\n";
  for (const auto& per_tap : beams)
    for (const auto& b : per_tap)
      os << b.tap << ',' << b.beam << ',' << format_double(b.gain.real()) << ','
         << format_double(b.gain.imag()) << ',' << format_double(b.doppler) << '\n';
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "scenario,snr_db,speed,p,trial_count,mean_nmse_db,ci_lo,ci_hi\n";
  for (const auto& r : rows)
    os << r.scenario << ',' << format_double(r.snr_db) << ',' << format_double(r.speed_kmh) << ','
       << r.paths << ',' << r.trials << ',' << format_double(r.mean_nmse_db) << ','
       << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << '\n';
}

void write_tap_study_csv(std::ostream& os, const std::vector<TapStudyRow>& rows) {
  os << "scenario,snr_db,speed,p,trial_count,mean_selected,power_ratio,agreement\n";
  for (const auto& r : rows)
    os << r.scenario << ',' << format_double(r.snr_db) << ',' << format_double(r.speed_kmh) << ','
       << r.paths << ',' << r.trials << ',' << format_double(r.mean_selected) << ','
       << format_double(r.power_ratio) << ',' << format_double(r.agreement) << '\n';
}

json results_json(const ExperimentResult& res) {
  json rows = json::array();
  for (const auto& r : res.rows)
    rows.push_back({{"scenario", r.scenario},
                    {"snr_db", r.snr_db},
                    {"speed", r.speed_kmh},
                    {"p", r.paths},
                    {"trial_count", r.trials},
                    {"mean_nmse_db", r.mean_nmse_db},
                    {"ci_lo", r.ci_lo},
                    {"ci_hi", r.ci_hi}});
  json taps = json::array();
  for (const auto& r : res.taps)
    taps.push_back({{"scenario", r.scenario},
                    {"snr_db", r.snr_db},
                    {"speed", r.speed_kmh},
                    {"p", r.paths},
                    {"trial_count", r.trials},
                    {"mean_selected", r.mean_selected},
                    {"power_ratio", r.power_ratio},
                    {"agreement", r.agreement}});
  json j;
  j["rows"] = rows;
  if (!taps.empty()) j["taps"] = taps;
  return j;
}

}  // namespace dsd
