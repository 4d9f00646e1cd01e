#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fdrisk {

std::string library_version();

// FNV-1a over a canonicalised config dump; embedded in every report so runs
// can be traced back to their inputs.
std::string config_hash(const std::string& canonical_text);

struct Check {
    std::string check;
    bool pass = true;
    double max_violation = 0.0;
    nlohmann::json witness; // optional context: node, sample index, values

    nlohmann::json to_json() const;
};

struct CheckSuite {
    std::string name;
    std::vector<Check> checks;

    bool pass() const;
    double max_violation() const;
    const Check& at(const std::string& check_name) const;
    nlohmann::json to_json() const;
};

} // namespace fdrisk
