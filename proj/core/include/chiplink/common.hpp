#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiplink {

namespace phys {
inline constexpr double eps0_F_per_m = 8.8541878128e-12;
inline constexpr double mu0_H_per_m = 1.25663706212e-6;
}  // namespace phys

// Scale helpers: config fields carry engineering units, computation is SI.
inline constexpr double um_to_m(double um) { return um * 1e-6; }
inline constexpr double mm_to_m(double mm) { return mm * 1e-3; }
inline constexpr double fF_to_F(double ff) { return ff * 1e-15; }
inline constexpr double gbps_to_bps(double g) { return g * 1e9; }

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct Warning {
  std::string code;
  std::string message;
};

using WarningList = std::vector<Warning>;

// FNV-1a, used for config fingerprints. Stable across platforms and runs.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline bool nearly_equal(double a, double b, double rel_tol) {
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel_tol * std::max(scale, 1e-300);
}

}  // namespace chiplink
