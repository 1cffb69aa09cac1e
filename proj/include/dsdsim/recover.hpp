#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dsdsim/probing.hpp"

namespace dsd {

// Shared sensing structure for all taps: row l of the (implicit) matrix is
// psi(l)[n*Gr+m] = conj((Dr^* pr(l))[m]) * (Dt^* pt(l))[n]; raw probes kept for refinement.
struct SensingMatrix {
  cmat bs_rx;   // L x Gr, entry (l,m) = (pr(l)^* Dr)[m]
  cmat bs_tx;   // L x Gt, entry (l,n) = (Dt^* pt(l))[n]
  rmat abs_rx, abs_tx;
  cmat raw_rx;  // L x Nr, row l = pr(l)^T
  cmat raw_tx;  // L x Nt
  int grid_rx = 0, grid_tx = 0;

  int subframes() const { return int(bs_rx.rows()); }
  int pairs() const { return grid_rx * grid_tx; }
  int pair_index(int rx, int tx) const { return tx * grid_rx + rx; }
  std::pair<int, int> pair_of(int idx) const { return {idx % grid_rx, idx / grid_rx}; }
  cplx entry(int l, int pair) const;
  cvec column(int pair) const;
  cmat dense() const;  // L x pairs, for tests and small problems
};

SensingMatrix build_sensing(std::span<const ProbeSchedule> scheds, const SystemConfig& cfg);

struct TapMeasurement {
  int tap = 0;
  cvec samples;  // y(l*Nc+tap) stacked over frames and subframes
  const SensingMatrix* sensing = nullptr;
};

TapMeasurement stack_tap_samples(std::span<const RxTrace> traces, const SensingMatrix& sensing,
                                 const SystemConfig& cfg, int tap);

// index maps between the flat arrangement (subframe-major rows) and the
// block-contiguous arrangement (per-pair time series)
struct BlockView {
  int pairs = 0;
  int subframes = 0;
  int group = 1;
  int groups() const { return (subframes + group - 1) / group; }
  std::pair<int, int> group_span(int j) const {
    int a = j * group;
    return {a, std::min(group, subframes - a)};
  }
  Eigen::Index stacked_index(int pair, int l) const { return Eigen::Index(pair) * subframes + l; }
  Eigen::Index interleaved_index(int pair, int l) const { return Eigen::Index(l) * pairs + pair; }
};

// smallest k with P(detected, k) < miss_prob, minus one (floored at 1);
// P(D,k) = C(D,k) (1/Nc)^k ((Nc-1)/Nc)^(D-k), zero for k > D
int iteration_bound(int detected, int n_taps, double miss_prob);

// floor(acos(corr_floor) / (omega_max * n_taps)) clamped to [1, total_subframes];
// omega_max = 0 means one group spanning everything
int group_size_for(double omega_max, int n_taps, double corr_floor, int total_subframes);

// true when both coordinates are within one cyclic step on their grids
bool pairs_overlap(std::pair<int, int> a, std::pair<int, int> b, int grid_rx, int grid_tx);

struct OmpResult {
  std::vector<int> support;
  cvec coeffs;
  int iterations = 0;
};

// classic coherent OMP over explicit columns
OmpResult omp_recover(const cvec& y, const cmat& dict, int max_atoms, double res_tol);

struct BompResult {
  std::vector<std::pair<int, int>> pairs;  // coarse (rx, tx) cells
  cvec coeffs;                             // final joint LS coefficients
  int iterations = 0;
  bool regularized = false;
};

// block-sparse baseline: magnitude-profile selection on the coarse grid, one
// time-invariant coefficient per selected pair, joint LS over the whole window
BompResult bomp_recover(const TapMeasurement& m, int max_blocks, double beta_tol,
                        std::span<const std::pair<int, int>> prior = {});

struct SupportEstimate {
  int tap = 0;
  std::vector<std::pair<int, int>> coarse;        // (rx, tx) coarse cells
  std::vector<std::pair<int, int>> fine;          // refined indices on the G^2 grid
  std::vector<std::pair<double, double>> freqs;   // (aoa_y, aod_y)
  int iterations = 0;
  double beta = 0.0;
  bool regularized = false;
  std::vector<double> resid_norms;  // total residual after each iteration
};

struct AbompOptions {
  int max_iters = 1;     // from iteration_bound
  int group = 1;         // from group_size_for
  double beta_tol = 0.01;
  bool refine = true;
};

SupportEstimate abomp_recover(const TapMeasurement& m, const AbompOptions& opt,
                              std::span<const std::pair<int, int>> prior = {});

}  // namespace dsd
