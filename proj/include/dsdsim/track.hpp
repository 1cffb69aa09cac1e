#pragma once

#include <span>
#include <vector>

#include "dsdsim/recover.hpp"

namespace dsd {

struct PollingPlan {
  // union of refined beams across taps, deduplicated on fine-grid indices
  std::vector<std::pair<int, int>> fine;
  std::vector<std::pair<double, double>> freqs;  // (aoa_y, aod_y)
  std::vector<int> taps;
  std::vector<std::vector<int>> beam_slots;  // per tap, indices into the union
  int polls = 0;

  int beams() const { return int(fine.size()); }
  int subframes() const { return beams() * polls; }
};

PollingPlan build_polling_plan(std::span<const SupportEstimate> supports, int polls);

// quantized steering probes, subframe k targets union beam k mod |I|
ProbeSchedule steering_schedule(const PollingPlan& plan, const SystemConfig& cfg);

// per-poll least squares for one tap; rows are polls, columns the tap's beams.
// flagged reports a rank-deficient steering system.
cmat poll_gains(const RxTrace& trace, const PollingPlan& plan, const SystemConfig& cfg,
                int tap_slot, bool* flagged = nullptr);

struct GainSeries {
  int tap = 0;
  int beam = 0;            // index into the tap's beam list
  cvec values;             // one gain per poll
  double first_instant = 0;  // average instant of the first poll
  double spacing = 0;        // instants between polls
  bool flagged = false;
};

std::vector<std::vector<GainSeries>> gain_series(const RxTrace& trace, const PollingPlan& plan,
                                                 const SystemConfig& cfg);

struct BeamEstimate {
  int tap = 0;
  int beam = 0;
  cplx gain{};           // at ref_instant
  double doppler = 0.0;  // rad/sample
  double ref_instant = 0.0;
  bool flagged = false;
};

// weighted null-angle linear predictor over the poll series
BeamEstimate wnalp_estimate(const GainSeries& series);

// weight vector, sums to one; exposed for tests
rvec wnalp_weights(int m0);

}  // namespace dsd
