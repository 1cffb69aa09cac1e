#pragma once

#include <vector>

#include "dsdsim/common.hpp"

namespace dsd {

struct SystemConfig {
  int n_tx = 32;
  int n_rx = 32;
  int n_taps = 16;       // channel order / subframe length
  int grid_tx = 64;      // Tx dictionary size
  int grid_rx = 64;      // Rx dictionary size
  int phase_bits = 2;    // APS resolution
  double carrier_hz = 60e9;
  double symbol_s = 50e-9;
  double speed_mps = 0.0;
  double light_mps = 3e8;
  double noise_var = 1.0;
  bool nearest_phase = false;  // steering quantizer rounding mode

  // 2*pi*fc*v*Ts/c, the Doppler magnitude bound in rad/sample
  double max_doppler() const;
  void validate() const;  // throws std::invalid_argument
};

struct PathParams {
  cplx gain;              // CN(0,1)
  double delay_s = 0;     // [0, (n_taps-1)*Ts)
  double aoa_rad = 0;
  double aod_rad = 0;
  double doppler = 0;     // rad/sample, max_doppler()*sin(aoa)
};

// spatial frequency of the steering direction, sin(angle)/2 wrapped to [0,1)
double spatial_freq(double angle_rad);

// k-th entry exp(j*2*pi*k*y)/sqrt(n)
cvec steering_vector(int n, double y);

// columns f_n(i/g), i = 0..g-1
cmat grid_dictionary(int n, int g);

// raised cosine, roll-off 1, truncated to |t| <= 4*T
double raised_cosine(double t, double symbol_s);

struct ChannelRealization {
  std::vector<PathParams> paths;
  cmat tap_gains;  // n_taps x P, sqrt(NtNr/P)*gain*rc(d*Ts - tau), at instant 0
  cmat steer_rx;   // n_rx x P
  cmat steer_tx;   // n_tx x P
};

// build derived matrices from a given path list
ChannelRealization realize_paths(const SystemConfig& cfg, std::vector<PathParams> paths);

ChannelRealization sample_channel(const SystemConfig& cfg, int n_paths, rng_t& rng);

// H_d(n); instant is absolute in samples
cmat tap_matrix(const ChannelRealization& ch, int tap, double instant);

// energy per tap at the given instant
rvec tap_energies(const ChannelRealization& ch, double instant);

// minimum-norm beamspace coefficients: (NrNt/(GrGt)) Dr^* H Dt.
// Dr X Dt^* reproduces H exactly for any H.
cmat beamspace_of(const SystemConfig& cfg, const cmat& tap_mat);

}  // namespace dsd
