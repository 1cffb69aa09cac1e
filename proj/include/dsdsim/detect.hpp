#pragma once

#include <span>
#include <vector>

#include "dsdsim/probing.hpp"

namespace dsd {

struct TapStats {
  rvec ts;          // mean |y(l*Nc+d)|^2 per tap
  rvec nts;         // (ts - sigma^2) / max(max_d(ts - sigma^2), 0)
  int subframes = 0;
  double noise_var = 0.0;
};

struct DetectorOptions {
  double threshold = 0.03;  // mu
  int cap = 8;              // A
};

// traces must be proposed-pattern, lengths a multiple of n_taps
TapStats tap_statistics(std::span<const RxTrace> traces, const SystemConfig& cfg);

// candidate set {nTS >= mu} ∩ {TS > sigma^2}; pass through if 0 < |set| <= cap,
// top-cap by nTS if larger, top-cap by TS if empty. Ties go to the smaller tap.
std::vector<int> select_taps(const TapStats& stats, const DetectorOptions& opt = {});

}  // namespace dsd
