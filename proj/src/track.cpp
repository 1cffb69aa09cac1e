#include "dsdsim/track.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsd {

PollingPlan build_polling_plan(std::span<const SupportEstimate> supports, int polls) {
  if (polls < 2) throw std::invalid_argument("polls must be >= 2");
  PollingPlan plan;
  plan.polls = polls;
  for (const auto& se : supports) {
    plan.taps.push_back(se.tap);
    std::vector<int> slots;
    for (size_t k = 0; k < se.fine.size(); ++k) {
      auto it = std::find(plan.fine.begin(), plan.fine.end(), se.fine[k]);
      int slot;
      if (it == plan.fine.end()) {
        slot = int(plan.fine.size());
        plan.fine.push_back(se.fine[k]);
        plan.freqs.push_back(se.freqs[k]);
      } else {
        slot = int(it - plan.fine.begin());
      }
      slots.push_back(slot);
    }
    plan.beam_slots.push_back(std::move(slots));
  }
  return plan;
}

ProbeSchedule steering_schedule(const PollingPlan& plan, const SystemConfig& cfg) {
  if (plan.beams() == 0) throw std::invalid_argument("empty polling plan");
  ProbeSchedule s;
  const int total = plan.subframes();
  s.tx.reserve(total);
  s.rx.reserve(total);
  for (int k = 0; k < total; ++k) {
    const auto& [ya, yd] = plan.freqs[k % plan.beams()];
    auto [tx, rx] = steering_probe(cfg, yd, ya);
    s.tx.push_back(std::move(tx));
    s.rx.push_back(std::move(rx));
  }
  return s;
}

cmat poll_gains(const RxTrace& trace, const PollingPlan& plan, const SystemConfig& cfg,
                int tap_slot, bool* flagged) {
  if (tap_slot < 0 || tap_slot >= int(plan.taps.size())) throw std::out_of_range("tap slot");
  const int nb = plan.beams();
  const int nc = cfg.n_taps;
  if (trace.samples.size() < Eigen::Index(plan.subframes()) * nc)
    throw std::invalid_argument("trace shorter than the polling plan");
  const int tap = plan.taps[tap_slot];
  const auto& slots = plan.beam_slots[tap_slot];
  const int cd = int(slots.size());

  // steering system: row j, column k -> (pr(j)^* ar_k)(at_k^* pt(j)); identical for every poll
  std::vector<std::pair<cvec, cvec>> probes;
  probes.reserve(nb);
  for (int j = 0; j < nb; ++j) {
    const auto& [pya, pyd] = plan.freqs[j];
    probes.push_back(steering_probe(cfg, pyd, pya));
  }
  cmat m(nb, cd);
  for (int k = 0; k < cd; ++k) {
    const auto& [ya, yd] = plan.freqs[slots[k]];
    cvec ar = steering_vector(cfg.n_rx, ya);
    cvec at = steering_vector(cfg.n_tx, yd);
    for (int j = 0; j < nb; ++j)
      m(j, k) = (probes[j].second.adjoint() * ar).value() * (at.adjoint() * probes[j].first).value();
  }
  auto cod = m.completeOrthogonalDecomposition();
  if (flagged) *flagged = cod.rank() < cd;

  cmat out(plan.polls, cd);
  for (int i = 0; i < plan.polls; ++i) {
    cvec yi(nb);
    for (int j = 0; j < nb; ++j) yi[j] = trace.samples[(i * nb + j) * nc + tap];
    out.row(i) = cod.solve(yi).transpose();
  }
  return out;
}

std::vector<std::vector<GainSeries>> gain_series(const RxTrace& trace, const PollingPlan& plan,
                                                 const SystemConfig& cfg) {
  std::vector<std::vector<GainSeries>> all;
  const int nb = plan.beams();
  for (int t = 0; t < int(plan.taps.size()); ++t) {
    bool flagged = false;
    cmat g = poll_gains(trace, plan, cfg, t, &flagged);
    std::vector<GainSeries> per_tap;
    for (int k = 0; k < g.cols(); ++k) {
      GainSeries s;
      s.tap = plan.taps[t];
      s.beam = k;
      s.values = g.col(k);
      s.spacing = double(nb) * cfg.n_taps;
      s.first_instant =
          double(trace.start_instant) + plan.taps[t] + cfg.n_taps * (nb - 1) / 2.0;
      s.flagged = flagged;
      per_tap.push_back(std::move(s));
    }
    all.push_back(std::move(per_tap));
  }
  return all;
}

rvec wnalp_weights(int m0) {
  if (m0 < 1) throw std::invalid_argument("m0 must be >= 1");
  rvec w(m0);
  const double den = double(m0) * (4.0 * m0 * m0 - 1.0);
  for (int m = 1; m <= m0; ++m)
    w[m - 1] = 3.0 * ((2.0 * m0 - m) * (2.0 * m0 - m + 1.0) - double(m0) * m0) / den;
  return w;
}

BeamEstimate wnalp_estimate(const GainSeries& series) {
  const int r = int(series.values.size());
  if (r < 2) throw std::invalid_argument("need at least two polls");
  const int m0 = r / 2;
  const auto& g = series.values;

  cvec acf(m0 + 1);
  for (int m = 0; m <= m0; ++m) {
    cplx s = 0;
    for (int i = m + 1; i <= 2 * m0; ++i) s += g[i - 1] * std::conj(g[i - m - 1]);
    acf[m] = s / double(r - m);
  }

  rvec w = wnalp_weights(m0);
  const double delta = series.spacing;
  double om = 0.0;
  for (int m = 1; m <= m0; ++m) om += w[m - 1] * std::arg(acf[m] * std::conj(acf[m - 1]));
  om /= delta;

  cplx gain = 0;
  for (int i = 1; i <= r; ++i) gain += g[i - 1] * std::polar(1.0, -om * delta * (i - 0.5));
  gain /= double(r);

  BeamEstimate be;
  be.tap = series.tap;
  be.beam = series.beam;
  be.gain = gain;
  be.doppler = om;
  be.ref_instant = series.first_instant - delta / 2.0;
  be.flagged = series.flagged;
  return be;
}

}  // namespace dsd
