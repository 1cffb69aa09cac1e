#include "dsdsim/probing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsd {

double quantize_phase(double x, const PhaseSet& ps, PhaseRound mode) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ps.size(); ++i) {
    double d = wrap_2pi(x - ps.angle(i));
    if (mode == PhaseRound::Nearest) d = std::min(d, two_pi - d);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return ps.angle(best);
}

int TrainingFrame::subframes() const {
  return kind == FrameKind::Proposed ? length() / n_taps : 1;
}

TrainingFrame build_frame(FrameKind kind, const SystemConfig& cfg, int n_payload) {
  if (n_payload < 1 || n_payload % cfg.n_taps != 0)
    throw std::invalid_argument("payload must be a positive multiple of n_taps");
  TrainingFrame f;
  f.kind = kind;
  f.n_taps = cfg.n_taps;
  if (kind == FrameKind::Proposed) {
    int l = n_payload / cfg.n_taps + 1;
    f.symbols = rvec::Zero(l * cfg.n_taps);
    for (int i = 0; i < l; ++i) f.symbols[i * cfg.n_taps] = 1.0;
  } else {
    f.symbols = rvec::Zero(n_payload + cfg.n_taps);
    f.symbols.head(n_payload).setOnes();
  }
  return f;
}

TrainingFrame pulse_frame(const SystemConfig& cfg, int n_subframes) {
  if (n_subframes < 1) throw std::invalid_argument("n_subframes must be >= 1");
  TrainingFrame f;
  f.kind = FrameKind::Proposed;
  f.n_taps = cfg.n_taps;
  f.symbols = rvec::Zero(n_subframes * cfg.n_taps);
  for (int i = 0; i < n_subframes; ++i) f.symbols[i * cfg.n_taps] = 1.0;
  return f;
}

cvec random_phase_vector(int n, const PhaseSet& ps, rng_t& rng) {
  std::uniform_int_distribution<int> pick(0, ps.size() - 1);
  cvec v(n);
  const double s = 1.0 / std::sqrt(double(n));
  for (int k = 0; k < n; ++k) v[k] = std::polar(s, ps.angle(pick(rng)));
  return v;
}

std::pair<cvec, cvec> random_probe(const SystemConfig& cfg, rng_t& rng) {
  PhaseSet ps{cfg.phase_bits};
  cvec tx = random_phase_vector(cfg.n_tx, ps, rng);
  cvec rx = random_phase_vector(cfg.n_rx, ps, rng);
  return {std::move(tx), std::move(rx)};
}

ProbeSchedule random_schedule(const SystemConfig& cfg, int n_subframes, rng_t& rng) {
  ProbeSchedule s;
  s.tx.reserve(n_subframes);
  s.rx.reserve(n_subframes);
  for (int l = 0; l < n_subframes; ++l) {
    auto [tx, rx] = random_probe(cfg, rng);
    s.tx.push_back(std::move(tx));
    s.rx.push_back(std::move(rx));
  }
  return s;
}

std::pair<cvec, cvec> steering_probe(const SystemConfig& cfg, double aod_freq, double aoa_freq) {
  PhaseSet ps{cfg.phase_bits};
  const PhaseRound mode = cfg.nearest_phase ? PhaseRound::Nearest : PhaseRound::AsWritten;
  cvec tx(cfg.n_tx), rx(cfg.n_rx);
  const double st = 1.0 / std::sqrt(double(cfg.n_tx));
  const double sr = 1.0 / std::sqrt(double(cfg.n_rx));
  for (int k = 0; k < cfg.n_tx; ++k)
    tx[k] = std::polar(st, quantize_phase(two_pi * k * aod_freq, ps, mode));
  for (int k = 0; k < cfg.n_rx; ++k)
    rx[k] = std::polar(sr, quantize_phase(two_pi * k * aoa_freq, ps, mode));
  return {std::move(tx), std::move(rx)};
}

RxTrace simulate_rx(const ChannelRealization& ch, const TrainingFrame& frame,
                    const ProbeSchedule& sched, const SystemConfig& cfg,
                    std::int64_t start_instant, rng_t& rng) {
  const int len = frame.length();
  const int nc = cfg.n_taps;
  const int np = int(ch.paths.size());
  const int need = frame.kind == FrameKind::Proposed ? frame.subframes() : 1;
  if (sched.subframes() < need) throw std::invalid_argument("schedule shorter than frame");

  auto probe_slot = [&](int n) {
    return frame.kind == FrameKind::Proposed ? n / nc : 0;
  };

  // per-slot path couplings: crx[s][p] = pr_s^* ar_p, ctx[s][p] = at_p^* pt_s
  cmat crx(need, np), ctx(need, np);
  for (int s = 0; s < need; ++s) {
    crx.row(s) = sched.rx[s].adjoint() * ch.steer_rx;
    ctx.row(s) = (ch.steer_tx.adjoint() * sched.tx[s]).transpose();
  }

  RxTrace tr;
  tr.samples = cvec::Zero(len);
  tr.noise_var = cfg.noise_var;
  tr.start_instant = start_instant;
  for (int n = 0; n < len; ++n) {
    cplx acc = 0;
    const int rs = probe_slot(n);
    for (int d = 0; d < nc && d <= n; ++d) {
      const double s = frame.symbols[n - d];
      if (s == 0.0) continue;
      const int ts = probe_slot(n - d);
      cplx term = 0;
      for (int p = 0; p < np; ++p)
        term += crx(rs, p) * ctx(ts, p) * ch.tap_gains(d, p) *
                std::polar(1.0, ch.paths[p].doppler * double(start_instant + n));
      acc += s * term;
    }
    if (cfg.noise_var > 0) acc += std::sqrt(cfg.noise_var) * randn_c(rng);
    tr.samples[n] = acc;
  }
  return tr;
}

}  // namespace dsd
