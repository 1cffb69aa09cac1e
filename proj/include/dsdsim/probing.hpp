#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dsdsim/common.hpp"
#include "dsdsim/model.hpp"

namespace dsd {

struct PhaseSet {
  int bits = 2;
  int size() const { return 1 << bits; }
  double step() const { return two_pi / size(); }
  double angle(int i) const { return step() * i; }
};

enum class PhaseRound {
  AsWritten,  // argmin_i mod(x - B(i), 2*pi): one-sided, floor-like
  Nearest,    // smallest cyclic distance
};

double quantize_phase(double x, const PhaseSet& ps, PhaseRound mode = PhaseRound::AsWritten);

enum class FrameKind { Conventional, Proposed };

struct TrainingFrame {
  FrameKind kind = FrameKind::Proposed;
  int n_taps = 0;   // zero-padding / subframe length
  rvec symbols;     // s(n) over the whole frame
  int length() const { return int(symbols.size()); }
  // probe-hold intervals: every n_taps samples for the proposed pattern, one for conventional
  int subframes() const;
};

// proposed: n_payload/n_taps + 1 subframes [1, 0 x (n_taps-1)]; conventional: n_payload ones + n_taps zeros
TrainingFrame build_frame(FrameKind kind, const SystemConfig& cfg, int n_payload);
// proposed-style frame with an explicit subframe count (steering stage)
TrainingFrame pulse_frame(const SystemConfig& cfg, int n_subframes);

// unit-modulus vector with phases drawn uniformly from the phase set
cvec random_phase_vector(int n, const PhaseSet& ps, rng_t& rng);
// (tx, rx) pair for one subframe
std::pair<cvec, cvec> random_probe(const SystemConfig& cfg, rng_t& rng);

struct ProbeSchedule {
  std::vector<cvec> tx, rx;  // per subframe
  int subframes() const { return int(tx.size()); }
};

ProbeSchedule random_schedule(const SystemConfig& cfg, int n_subframes, rng_t& rng);

// quantized steering pair toward the given spatial frequencies
std::pair<cvec, cvec> steering_probe(const SystemConfig& cfg, double aod_freq, double aoa_freq);

struct RxTrace {
  cvec samples;
  double noise_var = 0.0;
  std::int64_t start_instant = 0;
};

// y(n) = sum_d pr(n)^* H_d(t0+n) pt(n-d) s(n-d) + xi(n)
RxTrace simulate_rx(const ChannelRealization& ch, const TrainingFrame& frame,
                    const ProbeSchedule& sched, const SystemConfig& cfg,
                    std::int64_t start_instant, rng_t& rng);

}  // namespace dsd
