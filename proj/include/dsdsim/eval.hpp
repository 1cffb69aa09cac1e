#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsdsim/detect.hpp"
#include "dsdsim/track.hpp"

namespace dsd {

struct TapEstimate {
  int tap = 0;
  cmat steer_rx, steer_tx;  // Nr x c, Nt x c
  cvec gains;               // at ref_instants
  rvec dopplers;            // rad/sample
  rvec ref_instants;
  cmat dense;               // when non-empty, overrides the parametric form
};

struct EstimatedChannel {
  int n_rx = 0, n_tx = 0, n_taps = 0;
  std::vector<TapEstimate> taps;
};

// assemble from supports and per-beam estimates (pipeline output)
EstimatedChannel assemble_estimate(const SystemConfig& cfg,
                                   std::span<const SupportEstimate> supports,
                                   const std::vector<std::vector<BeamEstimate>>& beams);

cmat reconstruct_tap(const EstimatedChannel& est, int tap, double instant, bool compensate = true);
std::vector<cmat> reconstruct(const EstimatedChannel& est, double instant, bool compensate = true);
std::vector<cmat> true_taps(const ChannelRealization& ch, double instant);

enum class NmseKind {
  RatioOfNorms,    // sum_d ||H-Hh||_F / sum_d ||H||_F
  RatioOfSquares,  // squared norms in both sums
};

double nmse(std::span<const cmat> truth, std::span<const cmat> estimate,
            NmseKind kind = NmseKind::RatioOfNorms);
double nmse_db(double eps, NmseKind kind = NmseKind::RatioOfNorms);

// ridge-regularized least squares channel estimate, dense per tap.
// Conventional frames: per-frame deconvolution then per-tap dual-form ridge.
// Proposed frames: per-subframe samples feed the same per-tap ridge directly.
EstimatedChannel ls_baseline(std::span<const RxTrace> traces, std::span<const ProbeSchedule> scheds,
                             const TrainingFrame& frame, const SystemConfig& cfg, double ridge);

enum class Method { Abomp, Bomp };

enum class SnrKind {
  TrainingAverage,  // snr = L/(N*sigma^2) over a proposed frame
  PerSymbol,        // snr = 1/sigma^2
};

struct TrialConfig {
  SystemConfig sys;
  int paths = 3;
  int frames = 40;
  int polls = 4;
  int payload = 64;
  double snr_db = 0.0;
  double speed_kmh = 0.0;
  Method method = Method::Abomp;
  SnrKind snr_kind = SnrKind::TrainingAverage;
  NmseKind nmse_kind = NmseKind::RatioOfNorms;
  DetectorOptions detector{};
  double miss_prob = 1e-3;
  double beta_tol = 0.01;
  double corr_floor = 0.707;
  bool noiseless = false;
  bool on_grid = false;
  bool unit_gains = false;  // unit-modulus path gains, keeps every planted tap detectable
};

double noise_var_for(const TrialConfig& tc);

struct TrialOutcome {
  std::vector<int> selected;
  std::vector<SupportEstimate> supports;
  double power_ratio = 0.0;
  double train_end = 0.0;
  // nmse[k] at train_end + horizons[k] frames; .first compensated, .second frozen-gain
  std::vector<std::pair<double, double>> horizon_nmse;
  bool failed = false;
};

TrialOutcome run_dsa_trial(const TrialConfig& tc, std::uint64_t seed,
                           std::span<const int> horizons = {});

// static dense baseline over conventional frames; returns end-of-training NMSE
double run_ls_trial(const TrialConfig& tc, std::uint64_t seed, double ridge, int frames);

struct ExperimentSpec {
  std::string scenario = "fig4-desk";
  TrialConfig base;
  std::vector<double> snr_db{0.0};
  std::vector<double> speeds_kmh{0.0};
  std::vector<int> path_counts{3};
  std::vector<int> horizons{0};
  int trials = 50;
  int ls_frames = 60;
  double ridge_scale = 1.0;  // ridge = scale * sigma^2 (floored)
  std::uint64_t seed = 1;
  int jobs = 1;
  bool with_ls = false;
  bool with_bomp = false;
  bool with_horizons = false;
  bool tap_study = false;
};

struct ResultRow {
  std::string scenario;
  double snr_db = 0.0;
  double speed_kmh = 0.0;
  int paths = 0;
  int trials = 0;
  double mean_nmse_db = 0.0;
  double ci_lo = 0.0;  // dB
  double ci_hi = 0.0;  // dB
};

struct TapStudyRow {
  std::string scenario;
  double snr_db = 0.0;
  double speed_kmh = 0.0;
  int paths = 0;
  int trials = 0;
  double mean_selected = 0.0;
  double power_ratio = 0.0;
  double agreement = 0.0;  // per-tap decision agreement vs the static twin
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<TapStudyRow> taps;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace dsd
