#pragma once

#include <stdexcept>
#include <string>

namespace netmpc {

// Bad user input: malformed config, inconsistent dimensions, invalid horizon.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed in a way that is not a property of the problem
// (LP pivot breakdown, IPM stall on a feasible problem, cache I/O).
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// A set that must be nonempty came out empty (W, X0_2, terminal set).
class EmptySetError : public std::runtime_error {
public:
  explicit EmptySetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace netmpc
