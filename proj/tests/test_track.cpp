#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dsdsim/track.hpp"

using namespace dsd;

namespace {

SystemConfig trk_cfg() {
  SystemConfig cfg;
  cfg.n_tx = 16;
  cfg.n_rx = 16;
  cfg.grid_tx = 32;
  cfg.grid_rx = 32;
  cfg.n_taps = 8;
  cfg.noise_var = 0.0;
  cfg.phase_bits = 8;
  return cfg;
}

SupportEstimate make_support(int tap, std::vector<std::pair<int, int>> fine, int g) {
  SupportEstimate se;
  se.tap = tap;
  se.fine = fine;
  for (auto [fa, fd] : fine) {
    se.coarse.emplace_back(fa / g, fd / g);
    se.freqs.emplace_back(double(fa) / (g * g), double(fd) / (g * g));
  }
  return se;
}

GainSeries tone_series(cplx g0, double omega, int polls, double first, double spacing) {
  GainSeries s;
  s.values.resize(polls);
  const double ref = first - spacing / 2.0;
  for (int i = 0; i < polls; ++i) {
    double t = first + i * spacing;
    s.values[i] = g0 * std::polar(1.0, omega * (t - ref));
  }
  s.first_instant = first;
  s.spacing = spacing;
  return s;
}

}  // namespace

TEST_CASE("polling plan deduplicates shared beams") {
  const int g = 32;
  SupportEstimate a = make_support(2, {{100, 200}, {300, 400}}, g);
  SupportEstimate b = make_support(5, {{300, 400}, {512, 16}}, g);
  std::vector<SupportEstimate> sup{a, b};
  PollingPlan plan = build_polling_plan(sup, 4);
  CHECK(plan.beams() == 3);  // 2 + 2 - 1 shared
  CHECK(plan.polls == 4);
  CHECK(plan.subframes() == 12);
  REQUIRE(plan.taps == std::vector<int>{2, 5});
  CHECK(plan.beam_slots[0] == std::vector<int>{0, 1});
  CHECK(plan.beam_slots[1] == std::vector<int>{1, 2});
  CHECK(plan.fine[1] == std::pair<int, int>{300, 400});
  CHECK_THROWS_AS(build_polling_plan(sup, 1), std::invalid_argument);
}

TEST_CASE("steering schedule cycles the beam union") {
  SystemConfig cfg = trk_cfg();
  SupportEstimate a = make_support(0, {{64, 128}, {512, 700}}, cfg.grid_rx);
  std::vector<SupportEstimate> sup{a};
  PollingPlan plan = build_polling_plan(sup, 3);
  ProbeSchedule s = steering_schedule(plan, cfg);
  REQUIRE(s.subframes() == plan.subframes());
  const int nb = plan.beams();
  for (int k = 0; k < s.subframes(); ++k) {
    CHECK((s.tx[k] - s.tx[k % nb]).norm() == 0.0);
    CHECK((s.rx[k] - s.rx[k % nb]).norm() == 0.0);
    CHECK(std::fabs(s.tx[k].norm() - 1.0) < 1e-14);
    CHECK(std::fabs(s.rx[k].norm() - 1.0) < 1e-14);
  }
  PollingPlan empty;
  empty.polls = 2;
  CHECK_THROWS_AS(steering_schedule(empty, cfg), std::invalid_argument);
}

TEST_CASE("weights are positive and sum to one") {
  for (int m0 = 1; m0 <= 12; ++m0) {
    rvec w = wnalp_weights(m0);
    REQUIRE(w.size() == m0);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(w.minCoeff() > 0.0);
  }
  // m0 = 2: 3*((4-m)(5-m) - 4)/30 for m = 1, 2
  rvec w2 = wnalp_weights(2);
  CHECK(w2[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(w2[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(wnalp_weights(0), std::invalid_argument);
}

TEST_CASE("noiseless tone is recovered exactly") {
  for (int polls : {2, 4, 5, 16}) {
    const double spacing = 24.0;
    const double omega = 0.3 / spacing;  // well inside the aliasing bound
    const cplx g0(0.8, -1.1);
    GainSeries s = tone_series(g0, omega, polls, 1000.0, spacing);
    BeamEstimate be = wnalp_estimate(s);
    CHECK(std::fabs(be.doppler - omega) < 1e-12);
    CHECK(std::abs(be.gain - g0) < 1e-10);
    CHECK(be.ref_instant == doctest::Approx(1000.0 - spacing / 2.0));
  }
  GainSeries bad;
  bad.values.resize(1);
  CHECK_THROWS_AS(wnalp_estimate(bad), std::invalid_argument);
}

TEST_CASE("static series gives zero doppler and the mean gain") {
  GainSeries s = tone_series(cplx(2.0, 1.0), 0.0, 6, 50.0, 10.0);
  BeamEstimate be = wnalp_estimate(s);
  CHECK(be.doppler == 0.0);
  CHECK(std::abs(be.gain - cplx(2.0, 1.0)) < 1e-12);
}

TEST_CASE("estimated doppler respects the aliasing bound") {
  rng_t rng(88);
  for (int t = 0; t < 200; ++t) {
    GainSeries s;
    s.values.resize(8);
    for (int i = 0; i < 8; ++i) s.values[i] = randn_c(rng);
    s.spacing = 32.0;
    s.first_instant = 0.0;
    BeamEstimate be = wnalp_estimate(s);
    CHECK(std::fabs(be.doppler) <= pi / s.spacing + 1e-12);
  }
}

TEST_CASE("doppler error shrinks as noise drops") {
  const double spacing = 32.0;
  const double omega = 0.02;
  auto med_err = [&](double sigma) {
    rng_t rng(4242);
    std::vector<double> errs;
    for (int t = 0; t < 300; ++t) {
      GainSeries s = tone_series(cplx(1.0, 0.0), omega, 8, 0.0, spacing);
      for (int i = 0; i < 8; ++i) s.values[i] += sigma * randn_c(rng);
      errs.push_back(std::fabs(wnalp_estimate(s).doppler - omega));
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  double hi = med_err(0.3), lo = med_err(0.03);
  CHECK(lo < hi);
  CHECK(lo < 0.1 * omega + 1e-6);
}

TEST_CASE("poll gains invert the steering couplings exactly") {
  SystemConfig cfg = trk_cfg();
  const int g = cfg.grid_rx;
  // channel beam exactly on a fine lattice point, static
  const int fa = 10 * g + 5, fd = 20 * g - 7;
  const double ya = double(fa) / (g * g), yd = double(fd) / (g * g);
  PathParams p;
  p.gain = cplx(0.4, 0.9);
  p.delay_s = 3 * cfg.symbol_s;
  p.aoa_rad = std::asin(2.0 * ya);
  p.aod_rad = std::asin(2.0 * (yd > 0.5 ? yd - 1.0 : yd));
  ChannelRealization ch = realize_paths(cfg, {p});

  SupportEstimate se = make_support(3, {{fa, fd}}, g);
  std::vector<SupportEstimate> sup{se};
  PollingPlan plan = build_polling_plan(sup, 4);
  ProbeSchedule sched = steering_schedule(plan, cfg);
  TrainingFrame frame = pulse_frame(cfg, plan.subframes());
  rng_t rng(1);
  RxTrace trace = simulate_rx(ch, frame, sched, cfg, 4000, rng);

  bool flagged = true;
  cmat gains = poll_gains(trace, plan, cfg, 0, &flagged);
  CHECK(!flagged);
  REQUIRE(gains.rows() == 4);
  REQUIRE(gains.cols() == 1);
  const cplx want = ch.tap_gains(3, 0);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(gains(i, 0) - want) < 1e-9);

  CHECK_THROWS_AS(poll_gains(trace, plan, cfg, 2, &flagged), std::out_of_range);
  RxTrace cut = trace;
  cut.samples = trace.samples.head(trace.samples.size() - cfg.n_taps);
  CHECK_THROWS_AS(poll_gains(cut, plan, cfg, 0, &flagged), std::invalid_argument);
}

TEST_CASE("gain series carry the poll geometry") {
  SystemConfig cfg = trk_cfg();
  const int g = cfg.grid_rx;
  SupportEstimate a = make_support(1, {{100, 200}, {400, 500}}, g);
  SupportEstimate b = make_support(6, {{400, 500}}, g);
  PathParams p;
  p.gain = cplx(1.0, 0.0);
  p.delay_s = 1 * cfg.symbol_s;
  ChannelRealization ch = realize_paths(cfg, {p});

  std::vector<SupportEstimate> sup{a, b};
  PollingPlan plan = build_polling_plan(sup, 3);
  ProbeSchedule sched = steering_schedule(plan, cfg);
  TrainingFrame frame = pulse_frame(cfg, plan.subframes());
  rng_t rng(2);
  RxTrace trace = simulate_rx(ch, frame, sched, cfg, 720, rng);

  auto series = gain_series(trace, plan, cfg);
  REQUIRE(series.size() == 2);
  REQUIRE(series[0].size() == 2);
  REQUIRE(series[1].size() == 1);
  const int nb = plan.beams();
  for (const auto& per_tap : series)
    for (const auto& s : per_tap) {
      CHECK(s.spacing == doctest::Approx(double(nb) * cfg.n_taps));
      CHECK(s.values.size() == 3);
    }
  CHECK(series[0][0].first_instant ==
        doctest::Approx(720.0 + 1 + cfg.n_taps * (nb - 1) / 2.0));
  CHECK(series[1][0].first_instant ==
        doctest::Approx(720.0 + 6 + cfg.n_taps * (nb - 1) / 2.0));
}

TEST_CASE("moving on-lattice beam is tracked through the full polling chain") {
  SystemConfig cfg = trk_cfg();
  cfg.speed_mps = 30.0;
  const int g = cfg.grid_rx;
  const int fa = 8 * g, fd = 14 * g;  // on the coarse grid for exact steering
  const double ya = double(fa) / (g * g), yd = double(fd) / (g * g);
  PathParams p;
  p.gain = cplx(-0.7, 0.5);
  p.delay_s = 2 * cfg.symbol_s;
  p.aoa_rad = std::asin(2.0 * ya);
  p.aod_rad = std::asin(2.0 * (yd > 0.5 ? yd - 1.0 : yd));
  p.doppler = cfg.max_doppler() * std::sin(p.aoa_rad);
  ChannelRealization ch = realize_paths(cfg, {p});

  SupportEstimate se = make_support(2, {{fa, fd}}, g);
  std::vector<SupportEstimate> sup{se};
  PollingPlan plan = build_polling_plan(sup, 8);
  ProbeSchedule sched = steering_schedule(plan, cfg);
  TrainingFrame frame = pulse_frame(cfg, plan.subframes());
  rng_t rng(3);
  const std::int64_t t0 = 12345;
  RxTrace trace = simulate_rx(ch, frame, sched, cfg, t0, rng);

  auto series = gain_series(trace, plan, cfg);
  BeamEstimate be = wnalp_estimate(series[0][0]);
  CHECK(std::fabs(be.doppler - p.doppler) < 1e-10);
  // reconstructed gain at the reference instant matches the channel
  cplx want = ch.tap_gains(2, 0) * std::polar(1.0, p.doppler * be.ref_instant);
  CHECK(std::abs(be.gain - want) < 1e-8);
}
