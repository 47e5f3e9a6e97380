#pragma once

#include <stdexcept>
#include <string>

namespace spinbayes {

// Bad user input: parameters, configs, network files, query shapes.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Cycle sequencing violations in the pulse engine (write without reset, ...).
class protocol_error : public std::logic_error {
 public:
  explicit protocol_error(const std::string& what) : std::logic_error(what) {}
};

// Numerical failure at runtime: non-finite state, diverged integration.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spinbayes
