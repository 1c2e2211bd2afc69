#pragma once

#include <stdexcept>
#include <string>

namespace atomread {

/// Numerical routine failed to reach its requested tolerance.
class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& msg, double achieved)
      : std::runtime_error(msg + " (achieved tolerance " +
                           std::to_string(achieved) + ")"),
        achieved_tolerance_(achieved) {}

  double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
  double achieved_tolerance_;
};

/// Malformed or inconsistent input data (files, trial records).
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Analysis cannot proceed (e.g. empty post-selected trial set).
class AnalysisError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace atomread
