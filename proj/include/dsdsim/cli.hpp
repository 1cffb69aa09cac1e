#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsdsim/eval.hpp"

namespace dsd {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioInfo {
  std::string id;
  std::string summary;
};

const std::vector<ScenarioInfo>& scenarios();
ExperimentSpec scenario_spec(const std::string& id);  // throws UsageError on unknown id

// "lo:step:hi" inclusive range or comma-separated values
std::vector<double> parse_value_list(const std::string& text);

// flat key=value config file; rejects unknown keys listing the valid ones
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

// exit codes: 0 ok, 1 usage, 2 runtime failure, 3 failed check gate
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsd
