#include "fdrisk/report.hpp"

#include <cstdint>

#include "fdrisk/errors.hpp"

namespace fdrisk {

std::string library_version() {
#ifdef FDRISK_VERSION
    return FDRISK_VERSION;
#else
    return "0.0.0";
#endif
}

std::string config_hash(const std::string& canonical_text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

nlohmann::json Check::to_json() const {
    nlohmann::json j{{"check", check}, {"pass", pass}, {"max_violation", max_violation}};
    if (!witness.is_null()) j["witness"] = witness;
    return j;
}

bool CheckSuite::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

double CheckSuite::max_violation() const {
    double m = 0.0;
    for (const auto& c : checks) m = std::max(m, c.max_violation);
    return m;
}

const Check& CheckSuite::at(const std::string& check_name) const {
    for (const auto& c : checks)
        if (c.check == check_name) return c;
    throw Error("CheckSuite: no check named " + check_name);
}

nlohmann::json CheckSuite::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) arr.push_back(c.to_json());
    return nlohmann::json{{"suite", name}, {"pass", pass()}, {"checks", arr}};
}

} // namespace fdrisk
