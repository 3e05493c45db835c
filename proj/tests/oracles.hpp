#pragma once

// Closed-form reference values used as test oracles.

#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

inline double sec(double x) { return 1.0 / std::cos(x); }

/// f = tan(theta) for c = 1, p = 0.
inline double tan_profile(double th) { return std::tan(th); }

/// v = sec(theta) for alpha = 2, p = 0, C1 = 1, C2 = 0.
inline double cos_power_v(double th) { return sec(th); }

/// v = sin(C - theta), f = -cos(C - theta) for alpha = 2, p = -1/2.
inline double sin_v(double C, double th) { return std::sin(C - th); }
inline double sin_f(double C, double th) { return -std::cos(C - th); }

/// Stream of the c = 1, p = 0 tan family: psi = s + ln cos(theta), Laplacian -exp(-2 psi).
inline double tan_stream(double s, double th) { return s + std::log(std::cos(th)); }
inline double tan_stream_laplacian(double s, double th) { return -std::exp(-2.0 * tan_stream(s, th)); }

/// Stream of the alpha = 2 cos-power family: psi = -sec(theta) / r, Laplacian 2 psi^3.
inline double cos_power_stream(double s, double th) { return -sec(th) * std::exp(-s); }

/// Pressure of the radial alpha = 1 flow with p = -1/2 at radius r.
inline double radial_pressure(double r) { return -0.5 / (r * r); }

/// Sliding spot value for Psi = sec(theta), tau xi2 = 0.1 at theta = 0.
inline const double sec_slide_spot = sec(0.1) - 1.0;

}  // namespace oracle
