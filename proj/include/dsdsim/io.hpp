#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "dsdsim/eval.hpp"

namespace dsd {

using json = nlohmann::json;

json to_json(const SystemConfig& cfg);
SystemConfig system_config_from_json(const json& j);

json to_json(const ChannelRealization& ch, const SystemConfig& cfg);
ChannelRealization channel_from_json(const json& j, const SystemConfig& cfg);

json to_json(const ProbeSchedule& s);
ProbeSchedule schedule_from_json(const json& j);

json to_json(const RxTrace& t);
RxTrace trace_from_json(const json& j);

json to_json(const SupportEstimate& se);
SupportEstimate support_from_json(const json& j);

// tap, TS, nTS, selected flag
void write_tap_stats_csv(std::ostream& os, const TapStats& stats, const std::vector<int>& selected);
// tap, beam, gain_re, gain_im, doppler
void write_beams_csv(std::ostream& os, const std::vector<std::vector<BeamEstimate>>& beams);
// scenario, snr_db, speed, p, trial_count, mean_nmse_db, ci_lo, ci_hi
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_tap_study_csv(std::ostream& os, const std::vector<TapStudyRow>& rows);

json results_json(const ExperimentResult& res);

std::string format_double(double v);

}  // namespace dsd
