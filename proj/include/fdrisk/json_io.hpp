#pragma once

// JSON round-trips for trees, variables, densities, risk configs, strategy
// spaces and deviation schedules. All readers validate and throw
// ValidationError with the offending field in the message.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdrisk/good_deal.hpp"
#include "fdrisk/indifference.hpp"
#include "fdrisk/risk.hpp"
#include "fdrisk/tree.hpp"

namespace fdrisk {

nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

ScenarioTree tree_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const ScenarioTree& tree);

NodeVariable variable_from_json(const ScenarioTree& tree, const nlohmann::json& j);
nlohmann::json variable_to_json(const ScenarioTree& tree, const NodeVariable& x);

// A claims file is either a single variable or {"claims": [...]}.
std::vector<NodeVariable> claims_from_json(const ScenarioTree& tree, const nlohmann::json& j);

DensityChange density_from_json(const ScenarioTree& tree, const nlohmann::json& j);
nlohmann::json density_to_json(const ScenarioTree& tree, const DensityChange& q);

DriverSpec driver_from_json(const nlohmann::json& j);
nlohmann::json driver_to_json(const DriverSpec& d);

// Owns the configured family; family() is the measure to evaluate, which is
// the normalized wrapper when the config asks for it.
struct RiskHandle {
    std::unique_ptr<RiskMeasure> base;
    std::unique_ptr<NormalizedFamily> normalized;
    std::string kind;

    const RiskMeasure& family() const { return normalized ? *normalized : *base; }
};

RiskHandle risk_from_json(const ScenarioTree& tree, const nlohmann::json& j);

StrategySpace strategies_from_json(const nlohmann::json& j);
nlohmann::json strategies_to_json(const StrategySpace& space);

DeltaSchedule schedule_from_json(const nlohmann::json& j, int levels);

} // namespace fdrisk
