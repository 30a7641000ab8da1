#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pargate {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

// Physical constants (SI).
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double amu = 1.66053906660e-27;

// Config files quote cyclic frequencies in MHz; everything internal is rad/s.
inline double mhz_to_rads(double f_mhz) { return 2.0 * pi * f_mhz * 1e6; }
inline double rads_to_mhz(double w) { return w / (2.0 * pi * 1e6); }
inline double khz_to_rads(double f_khz) { return 2.0 * pi * f_khz * 1e3; }
inline double rads_to_khz(double w) { return w / (2.0 * pi * 1e3); }

// Error taxonomy: the CLI maps these to distinct exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& m) : std::runtime_error(m) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace pargate
