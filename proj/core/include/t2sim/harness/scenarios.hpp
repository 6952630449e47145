#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2sim/harness/runner.hpp"

namespace t2sim::harness {

struct ScenarioResult {
    std::string name;
    bool pass = false;
    nlohmann::json report;
    std::string trace; // NDJSON of every traced run, in run order
};

std::vector<std::string> scenario_names();

// Runs a built-in scenario. `overrides` is a flat object of scenario
// parameters; unknown scenario names or keys throw ConfigError.
ScenarioResult run_scenario(std::string_view name, const nlohmann::json& overrides = nlohmann::json::object());

// Extra cycles one `ldr rd, =const` costs over the equivalent MOVW/MOVH pair
// when both run sequentially from flash with the given timing.
std::int64_t pool_load_penalty(const memory::FlashTiming& t, unsigned ldr_bytes = 2);

} // namespace t2sim::harness
