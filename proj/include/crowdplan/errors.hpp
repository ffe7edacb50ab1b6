#pragma once

#include <stdexcept>
#include <string>

namespace crowdplan {

// Raised when a computation produces non-finite values or diverges.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crowdplan
