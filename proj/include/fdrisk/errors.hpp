#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fdrisk {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad tree, bad density change, bad config.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Shape mismatch between a variable and the tree/level it is used at.
class LevelMismatchError : public Error {
public:
    explicit LevelMismatchError(const std::string& what) : Error(what) {}
};

// The inner hedging problem has no finite infimum: a strictly profitable
// recession direction exists (or the objective fell through the floor).
class UnboundedRiskReduction : public Error {
public:
    UnboundedRiskReduction(const std::string& what, int node, std::vector<double> direction)
        : Error(what), node_id(node), direction(std::move(direction)) {}
    int node_id;
    std::vector<double> direction;
};

// No strategy dominating the requested claim exists.
class InfeasibleClaim : public Error {
public:
    explicit InfeasibleClaim(const std::string& what) : Error(what) {}
};

} // namespace fdrisk
