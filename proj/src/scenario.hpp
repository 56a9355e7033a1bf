#pragma once

#include <string>
#include <vector>

namespace smacs::scenario {

struct Report {
    std::string name;
    bool parsed = false;
    bool passed = false;
    std::size_t steps_run = 0;
    std::vector<std::string> failures;
    std::string to_json() const;
};

/// Executes a scenario document against a fresh in-process token service and
/// chain simulator. Account keys derive from the scenario name, the service
/// clock follows the simulated chain clock, so runs replay identically.
Report run_scenario_text(const std::string& json_text);
Report run_scenario_file(const std::string& path);

}  // namespace smacs::scenario
