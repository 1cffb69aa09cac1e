#include "dsdsim/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsd {

EstimatedChannel assemble_estimate(const SystemConfig& cfg,
                                   std::span<const SupportEstimate> supports,
                                   const std::vector<std::vector<BeamEstimate>>& beams) {
  if (supports.size() != beams.size()) throw std::invalid_argument("supports/beams mismatch");
  EstimatedChannel est;
  est.n_rx = cfg.n_rx;
  est.n_tx = cfg.n_tx;
  est.n_taps = cfg.n_taps;
  for (size_t t = 0; t < supports.size(); ++t) {
    const auto& se = supports[t];
    const int c = int(se.freqs.size());
    if (c == 0) continue;
    if (int(beams[t].size()) != c) throw std::invalid_argument("beam count mismatch");
    TapEstimate te;
    te.tap = se.tap;
    te.steer_rx.resize(cfg.n_rx, c);
    te.steer_tx.resize(cfg.n_tx, c);
    te.gains.resize(c);
    te.dopplers.resize(c);
    te.ref_instants.resize(c);
    for (int k = 0; k < c; ++k) {
      te.steer_rx.col(k) = steering_vector(cfg.n_rx, se.freqs[k].first);
      te.steer_tx.col(k) = steering_vector(cfg.n_tx, se.freqs[k].second);
      te.gains[k] = beams[t][k].gain;
      te.dopplers[k] = beams[t][k].doppler;
      te.ref_instants[k] = beams[t][k].ref_instant;
    }
    est.taps.push_back(std::move(te));
  }
  return est;
}

cmat reconstruct_tap(const EstimatedChannel& est, int tap, double instant, bool compensate) {
  if (tap < 0 || tap >= est.n_taps) throw std::out_of_range("tap index");
  for (const auto& te : est.taps) {
    if (te.tap != tap) continue;
    if (te.dense.size() > 0) return te.dense;
    const int c = int(te.gains.size());
    cvec g(c);
    for (int k = 0; k < c; ++k)
      g[k] = te.gains[k] * (compensate
                                ? std::polar(1.0, te.dopplers[k] * (instant - te.ref_instants[k]))
                                : 1.0);
    return (te.steer_rx * g.asDiagonal()) * te.steer_tx.adjoint();
  }
  return cmat::Zero(est.n_rx, est.n_tx);
}

std::vector<cmat> reconstruct(const EstimatedChannel& est, double instant, bool compensate) {
  std::vector<cmat> out;
  out.reserve(est.n_taps);
  for (int d = 0; d < est.n_taps; ++d) out.push_back(reconstruct_tap(est, d, instant, compensate));
  return out;
}

std::vector<cmat> true_taps(const ChannelRealization& ch, double instant) {
  std::vector<cmat> out;
  const int nd = int(ch.tap_gains.rows());
  out.reserve(nd);
  for (int d = 0; d < nd; ++d) out.push_back(tap_matrix(ch, d, instant));
  return out;
}

double nmse(std::span<const cmat> truth, std::span<const cmat> estimate, NmseKind kind) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("tap count mismatch");
  double num = 0, den = 0;
  for (size_t d = 0; d < truth.size(); ++d) {
    if (kind == NmseKind::RatioOfNorms) {
      num += (truth[d] - estimate[d]).norm();
      den += truth[d].norm();
    } else {
      num += (truth[d] - estimate[d]).squaredNorm();
      den += truth[d].squaredNorm();
    }
  }
  if (den == 0) return num == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

double nmse_db(double eps, NmseKind kind) {
  const double e = std::max(eps, 1e-300);
  return kind == NmseKind::RatioOfNorms ? 20.0 * std::log10(e) : 10.0 * std::log10(e);
}

EstimatedChannel ls_baseline(std::span<const RxTrace> traces, std::span<const ProbeSchedule> scheds,
                             const TrainingFrame& frame, const SystemConfig& cfg, double ridge) {
  if (traces.size() != scheds.size() || traces.empty())
    throw std::invalid_argument("need one schedule per trace");
  if (!(ridge >= 0)) throw std::invalid_argument("ridge must be >= 0");
  const int nc = cfg.n_taps;
  const int nrt = cfg.n_rx * cfg.n_tx;

  // stage 1: per-tap effective scalars z and their probe rows
  cmat z;                    // rows x nc
  cmat k;                    // rows x (nr*nt), row = kron(pt^T, pr^*)
  auto krow = [&](const cvec& pt, const cvec& pr) {
    cvec row(nrt);
    for (int n = 0; n < cfg.n_tx; ++n)
      for (int m = 0; m < cfg.n_rx; ++m) row[n * cfg.n_rx + m] = pt[n] * std::conj(pr[m]);
    return row;
  };

  if (frame.kind == FrameKind::Conventional) {
    const int len = frame.length();
    cmat s = cmat::Zero(len, nc);
    for (int n = 0; n < len; ++n)
      for (int d = 0; d < nc && d <= n; ++d) s(n, d) = frame.symbols[n - d];
    auto cod = s.completeOrthogonalDecomposition();
    const int f = int(traces.size());
    z.resize(f, nc);
    k.resize(f, nrt);
    for (int i = 0; i < f; ++i) {
      if (traces[i].samples.size() != len) throw std::invalid_argument("trace/frame length mismatch");
      z.row(i) = cod.solve(traces[i].samples).transpose();
      k.row(i) = krow(scheds[i].tx[0], scheds[i].rx[0]).transpose();
    }
  } else {
    int rows = 0;
    for (const auto& tr : traces) rows += int(tr.samples.size()) / nc;
    z.resize(rows, nc);
    k.resize(rows, nrt);
    int r = 0;
    for (size_t i = 0; i < traces.size(); ++i) {
      const int l = int(traces[i].samples.size()) / nc;
      if (scheds[i].subframes() < l) throw std::invalid_argument("schedule shorter than trace");
      for (int j = 0; j < l; ++j, ++r) {
        for (int d = 0; d < nc; ++d) z(r, d) = traces[i].samples[j * nc + d];
        k.row(r) = krow(scheds[i].tx[j], scheds[i].rx[j]).transpose();
      }
    }
  }

  // stage 2: dual-form ridge, vec(H_d) = K^* (K K^* + ridge I)^{-1} z(:,d)
  cmat gram = k * k.adjoint();
  gram.diagonal().array() += std::max(ridge, 1e-12);
  Eigen::LDLT<cmat> ldlt(gram);

  EstimatedChannel est;
  est.n_rx = cfg.n_rx;
  est.n_tx = cfg.n_tx;
  est.n_taps = nc;
  for (int d = 0; d < nc; ++d) {
    cvec v = k.adjoint() * ldlt.solve(z.col(d));
    TapEstimate te;
    te.tap = d;
    te.dense = Eigen::Map<cmat>(v.data(), cfg.n_rx, cfg.n_tx);
    est.taps.push_back(std::move(te));
  }
  return est;
}

double noise_var_for(const TrialConfig& tc) {
  if (tc.noiseless) return 0.0;
  const double snr = std::pow(10.0, tc.snr_db / 10.0);
  if (tc.snr_kind == SnrKind::PerSymbol) return 1.0 / snr;
  const double l = double(tc.payload) / tc.sys.n_taps + 1.0;
  return l / (tc.payload * snr);
}

namespace {

SystemConfig resolved_sys(const TrialConfig& tc) {
  SystemConfig cfg = tc.sys;
  cfg.speed_mps = tc.speed_kmh / 3.6;
  cfg.noise_var = noise_var_for(tc);
  cfg.validate();
  return cfg;
}

// paths on exact grid cells, pairwise non-overlapping beams, distinct taps
std::vector<PathParams> sample_grid_paths(const SystemConfig& cfg, int n_paths, rng_t& rng,
                                          bool unit_gains = false) {
  std::uniform_int_distribution<int> dtap(0, cfg.n_taps - 2);
  std::uniform_int_distribution<int> drx(0, cfg.grid_rx - 1);
  std::uniform_int_distribution<int> dtx(0, cfg.grid_tx - 1);
  std::vector<PathParams> paths;
  std::vector<std::pair<int, int>> cells;
  std::vector<int> taps;
  const double wm = cfg.max_doppler();
  while (int(paths.size()) < n_paths) {
    int tap = dtap(rng);
    std::pair<int, int> cell{drx(rng), dtx(rng)};
    bool clash = std::find(taps.begin(), taps.end(), tap) != taps.end();
    for (const auto& c : cells)
      if (pairs_overlap(cell, c, cfg.grid_rx, cfg.grid_tx)) clash = true;
    if (clash) continue;
    double ya = double(cell.first) / cfg.grid_rx;
    double yd = double(cell.second) / cfg.grid_tx;
    PathParams p;
    p.gain = unit_gains ? std::polar(1.0, std::uniform_real_distribution<double>(0.0, two_pi)(rng))
                        : randn_c(rng);
    p.delay_s = tap * cfg.symbol_s;
    p.aoa_rad = std::asin(2.0 * (ya < 0.5 ? ya : ya - 1.0));
    p.aod_rad = std::asin(2.0 * (yd < 0.5 ? yd : yd - 1.0));
    p.doppler = wm * std::sin(p.aoa_rad);
    paths.push_back(p);
    cells.push_back(cell);
    taps.push_back(tap);
  }
  return paths;
}

struct RandomStage {
  TrainingFrame frame;
  std::vector<ProbeSchedule> scheds;
  std::vector<RxTrace> traces;
};

RandomStage run_random_stage(const SystemConfig& cfg, const ChannelRealization& ch, int frames,
                             int payload, rng_t& rng) {
  RandomStage st;
  st.frame = build_frame(FrameKind::Proposed, cfg, payload);
  st.scheds.reserve(frames);
  st.traces.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    st.scheds.push_back(random_schedule(cfg, st.frame.subframes(), rng));
    st.traces.push_back(
        simulate_rx(ch, st.frame, st.scheds.back(), cfg, std::int64_t(f) * st.frame.length(), rng));
  }
  return st;
}

}  // namespace

TrialOutcome run_dsa_trial(const TrialConfig& tc, std::uint64_t seed, std::span<const int> horizons) {
  SystemConfig cfg = resolved_sys(tc);
  rng_t rng(seed);
  ChannelRealization ch =
      tc.on_grid ? realize_paths(cfg, sample_grid_paths(cfg, tc.paths, rng, tc.unit_gains))
                 : sample_channel(cfg, tc.paths, rng);

  RandomStage st = run_random_stage(cfg, ch, tc.frames, tc.payload, rng);
  TapStats stats = tap_statistics(st.traces, cfg);
  TrialOutcome out;
  out.selected = select_taps(stats, tc.detector);

  rvec energy = tap_energies(ch, 0.0);
  double esel = 0;
  for (int d : out.selected) esel += energy[d];
  out.power_ratio = energy.sum() > 0 ? esel / energy.sum() : 0.0;

  SensingMatrix sensing = build_sensing(st.scheds, cfg);
  const int ltot = sensing.subframes();
  const int kmax = iteration_bound(int(out.selected.size()), cfg.n_taps, tc.miss_prob);
  const int group = group_size_for(cfg.max_doppler(), cfg.n_taps, tc.corr_floor, ltot);

  std::vector<SupportEstimate> supports;
  for (int d : out.selected) {
    TapMeasurement m = stack_tap_samples(st.traces, sensing, cfg, d);
    SupportEstimate se;
    if (tc.method == Method::Abomp) {
      se = abomp_recover(m, {kmax, group, tc.beta_tol, true});
    } else {
      BompResult b = bomp_recover(m, kmax, tc.beta_tol);
      se.tap = d;
      se.coarse = b.pairs;
      for (const auto& [mm, nn] : b.pairs) {
        se.fine.emplace_back(mm * cfg.grid_rx, nn * cfg.grid_tx);
        se.freqs.emplace_back(double(mm) / cfg.grid_rx, double(nn) / cfg.grid_tx);
      }
      se.iterations = b.iterations;
      se.regularized = b.regularized;
    }
    if (!se.freqs.empty()) supports.push_back(std::move(se));
  }

  out.supports = supports;

  std::vector<int> hz(horizons.begin(), horizons.end());
  if (hz.empty()) hz.push_back(0);

  const double t0s = double(tc.frames) * st.frame.length();
  if (supports.empty()) {
    out.failed = true;
    out.train_end = t0s;
    for (size_t i = 0; i < hz.size(); ++i) out.horizon_nmse.emplace_back(1.0, 1.0);
    return out;
  }

  PollingPlan plan = build_polling_plan(supports, tc.polls);
  ProbeSchedule ssched = steering_schedule(plan, cfg);
  TrainingFrame sframe = pulse_frame(cfg, plan.subframes());
  RxTrace strace = simulate_rx(ch, sframe, ssched, cfg, std::int64_t(t0s), rng);
  auto series = gain_series(strace, plan, cfg);

  std::vector<std::vector<BeamEstimate>> beams(series.size());
  for (size_t t = 0; t < series.size(); ++t)
    for (const auto& s : series[t]) beams[t].push_back(wnalp_estimate(s));

  EstimatedChannel est = assemble_estimate(cfg, supports, beams);
  out.train_end = t0s + sframe.length();
  for (int k : hz) {
    const double n = out.train_end + double(k) * st.frame.length();
    std::vector<cmat> truth = true_taps(ch, n);
    double comp = nmse(truth, reconstruct(est, n, true), tc.nmse_kind);
    double frozen = nmse(truth, reconstruct(est, n, false), tc.nmse_kind);
    out.horizon_nmse.emplace_back(comp, frozen);
  }
  return out;
}

double run_ls_trial(const TrialConfig& tc, std::uint64_t seed, double ridge, int frames) {
  SystemConfig cfg = resolved_sys(tc);
  rng_t rng(seed);
  ChannelRealization ch =
      tc.on_grid ? realize_paths(cfg, sample_grid_paths(cfg, tc.paths, rng, tc.unit_gains))
                 : sample_channel(cfg, tc.paths, rng);
  TrainingFrame frame = build_frame(FrameKind::Conventional, cfg, tc.payload);
  std::vector<ProbeSchedule> scheds;
  std::vector<RxTrace> traces;
  for (int f = 0; f < frames; ++f) {
    scheds.push_back(random_schedule(cfg, 1, rng));
    traces.push_back(simulate_rx(ch, frame, scheds.back(), cfg, std::int64_t(f) * frame.length(), rng));
  }
  EstimatedChannel est = ls_baseline(traces, scheds, frame, cfg, ridge);
  const double n = double(frames) * frame.length();
  return nmse(true_taps(ch, n), reconstruct(est, n), tc.nmse_kind);
}

namespace {

struct Agg {
  double mean = 0, lo = 0, hi = 0;
};

Agg aggregate_db(const std::vector<double>& vals, NmseKind kind) {
  const int n = int(vals.size());
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= std::max(n, 1);
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= std::max(n - 1, 1);
  const double se = std::sqrt(var / std::max(n, 1));
  Agg a;
  a.mean = nmse_db(mean, kind);
  a.lo = nmse_db(std::max(mean - 1.96 * se, 1e-300), kind);
  a.hi = nmse_db(mean + 1.96 * se, kind);
  return a;
}

std::uint64_t point_seed(std::uint64_t seed, int point) {
  return seed ^ (0xd1342543de82ef95ULL * (std::uint64_t(point) + 1));
}

// paired static/moving detector study; returns (count, ratio, per-tap agreement)
std::array<double, 3> tap_study_trial(const TrialConfig& tc, std::uint64_t seed) {
  SystemConfig cfg = resolved_sys(tc);
  rng_t geom(seed);
  ChannelRealization moving = sample_channel(cfg, tc.paths, geom);
  ChannelRealization still = moving;
  for (auto& p : still.paths) p.doppler = 0.0;

  auto run = [&](const ChannelRealization& ch) {
    rng_t rng(seed ^ 0x5851f42d4c957f2dULL);
    RandomStage st = run_random_stage(cfg, ch, tc.frames, tc.payload, rng);
    return select_taps(tap_statistics(st.traces, cfg), tc.detector);
  };
  std::vector<int> sm = run(moving), ss = run(still);

  rvec energy = tap_energies(moving, 0.0);
  double esel = 0;
  for (int d : sm) esel += energy[d];
  int same = 0;
  for (int d = 0; d < cfg.n_taps; ++d) {
    bool a = std::find(sm.begin(), sm.end(), d) != sm.end();
    bool b = std::find(ss.begin(), ss.end(), d) != ss.end();
    same += a == b;
  }
  return {double(sm.size()), energy.sum() > 0 ? esel / energy.sum() : 0.0,
          double(same) / cfg.n_taps};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult res;
  int point = 0;
  for (double snr : spec.snr_db)
    for (double speed : spec.speeds_kmh)
      for (int paths : spec.path_counts) {
        TrialConfig tc = spec.base;
        tc.snr_db = snr;
        tc.speed_kmh = speed;
        tc.paths = paths;
        const std::uint64_t ps = point_seed(spec.seed, point++);

        if (spec.tap_study) {
          std::vector<std::array<double, 3>> vals(spec.trials);
          parallel_for(spec.jobs, spec.trials,
                       [&](int t) { vals[t] = tap_study_trial(tc, trial_rng(ps, t)()); });
          TapStudyRow row;
          row.scenario = spec.scenario;
          row.snr_db = snr;
          row.speed_kmh = speed;
          row.paths = paths;
          row.trials = spec.trials;
          for (const auto& v : vals) {
            row.mean_selected += v[0];
            row.power_ratio += v[1];
            row.agreement += v[2];
          }
          row.mean_selected /= std::max(spec.trials, 1);
          row.power_ratio /= std::max(spec.trials, 1);
          row.agreement /= std::max(spec.trials, 1);
          res.taps.push_back(std::move(row));
          continue;
        }

        std::vector<int> hz = spec.with_horizons ? spec.horizons : std::vector<int>{0};
        std::vector<TrialOutcome> outs(spec.trials);
        parallel_for(spec.jobs, spec.trials,
                     [&](int t) { outs[t] = run_dsa_trial(tc, trial_rng(ps, t)(), hz); });

        auto emit = [&](const std::string& name, auto pick) {
          std::vector<double> v;
          v.reserve(spec.trials);
          for (const auto& o : outs) v.push_back(pick(o));
          Agg a = aggregate_db(v, tc.nmse_kind);
          res.rows.push_back({name, snr, speed, paths, spec.trials, a.mean, a.lo, a.hi});
        };

        if (spec.with_horizons) {
          for (size_t i = 0; i < hz.size(); ++i) {
            const std::string h = "/h" + std::to_string(hz[i]);
            emit(spec.scenario + "/comp-on" + h,
                 [i](const TrialOutcome& o) { return o.horizon_nmse[i].first; });
            emit(spec.scenario + "/comp-off" + h,
                 [i](const TrialOutcome& o) { return o.horizon_nmse[i].second; });
          }
        } else {
          emit(spec.scenario,
               [](const TrialOutcome& o) { return o.horizon_nmse.at(0).first; });
        }

        if (spec.with_bomp) {
          TrialConfig tb = tc;
          tb.method = Method::Bomp;
          std::vector<TrialOutcome> bouts(spec.trials);
          parallel_for(spec.jobs, spec.trials,
                       [&](int t) { bouts[t] = run_dsa_trial(tb, trial_rng(ps, t)(), {}); });
          std::vector<double> v;
          for (const auto& o : bouts) v.push_back(o.horizon_nmse.at(0).first);
          Agg a = aggregate_db(v, tc.nmse_kind);
          res.rows.push_back(
              {spec.scenario + "/bomp", snr, speed, paths, spec.trials, a.mean, a.lo, a.hi});
        }

        if (spec.with_ls) {
          const double sigma2 = noise_var_for(tc);
          const double ridge = std::max(spec.ridge_scale * sigma2, 1e-9);
          std::vector<double> v(spec.trials);
          parallel_for(spec.jobs, spec.trials, [&](int t) {
            v[t] = run_ls_trial(tc, trial_rng(ps, t)(), ridge, spec.ls_frames);
          });
          Agg a = aggregate_db(v, tc.nmse_kind);
          res.rows.push_back(
              {spec.scenario + "/ls", snr, speed, paths, spec.trials, a.mean, a.lo, a.hi});
        }
      }
  return res;
}

}  // namespace dsd
