#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace msgate {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double sqrt2 = 1.41421356237309504880;

// All angular frequencies are rad/s; CLI and config files speak Hz and
// convert at the boundary.
inline double hz_to_rad(double f) { return two_pi * f; }
inline double rad_to_hz(double w) { return w / two_pi; }

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct unsupported_shape : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct unsupported_order : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Carries the error estimate actually reached when a tolerance could not be met.
class numeric_failure : public std::runtime_error {
 public:
  numeric_failure(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved_error() const { return achieved_; }

 private:
  double achieved_;
};

struct ill_conditioned : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct calibration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace msgate
