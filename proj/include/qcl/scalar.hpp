#pragma once

#include <cmath>
#include <complex>
#include <string>

namespace qcl {

using Scalar = std::complex<double>;

// Global comparison tolerance. All normalization, unitarity and equality
// checks compare against this; overridable via --tolerance / QCL_TOLERANCE.
inline double& tolerance() {
  static double eps = 1e-9;
  return eps;
}

inline bool scalar_is_zero(const Scalar& a) { return std::abs(a) <= tolerance(); }

inline bool scalar_close(const Scalar& a, const Scalar& b) {
  return std::abs(a - b) <= tolerance();
}

inline std::string format_real(double x) {
  if (x == static_cast<long long>(x) && std::abs(x) < 1e15) {
    return std::to_string(static_cast<long long>(x));
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

inline std::string format_scalar(const Scalar& a) {
  if (a.imag() == 0.0) return format_real(a.real());
  if (a.real() == 0.0) return format_real(a.imag()) + "i";
  std::string s = format_real(a.real());
  s += (a.imag() >= 0 ? "+" : "");
  s += format_real(a.imag()) + "i";
  return s;
}

}  // namespace qcl
