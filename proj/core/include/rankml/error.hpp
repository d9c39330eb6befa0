#pragma once

#include <stdexcept>
#include <string>

namespace rankml {

// Domain error (bad data, bad model, bad file). CLI maps these to exit code 2;
// command-line usage problems are handled separately by the argument parser.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rankml
