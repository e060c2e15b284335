#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fasmobo {

using Real = double;
using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

/// Error carrying a stable machine-readable code such as "encode-infeasible".
class FasError : public std::runtime_error {
 public:
  FasError(const std::string& code, const std::string& detail)
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(code) {}
  explicit FasError(const std::string& code) : FasError(code, "") {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Thrown when an exhaustive sweep is requested over more configurations
/// than the caller's cap; carries the exact count.
class SpaceTooLargeError : public FasError {
 public:
  SpaceTooLargeError(std::uint64_t count, std::uint64_t cap)
      : FasError("space-too-large",
                 std::to_string(count) + " configurations exceed cap " +
                     std::to_string(cap)),
        count_(count) {}

  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

// Amplitude (field) ratio: -100 dB -> 1e-5.
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

inline double log2_1p(double x) { return std::log1p(x) / 0.69314718055994530942; }

}  // namespace fasmobo
