#pragma once

#include <cassert>
#include <cmath>
#include <string>

namespace cmflow {

enum class EtaMode {
  Normalized,  // eta(t) keeps J(t) = \int h^p / f constant
  FixedOne,    // eta == 1; converges to a solution of f h^{1-p} rho^{q-n} sigma_k = 1
};

enum class Regime { TheoremWindow, C0Window, Invalid };

struct RegimeReport {
  Regime regime = Regime::Invalid;
  std::string reason;  // first violated inequality when Invalid

  bool valid() const { return regime != Regime::Invalid; }
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::TheoremWindow: return "TheoremWindow";
    case Regime::C0Window: return "C0Window";
    case Regime::Invalid: return "Invalid";
  }
  return "Invalid";
}

inline const char* to_string(EtaMode m) {
  return m == EtaMode::Normalized ? "normalized" : "fixed_one";
}

/// Classifies (n, k, p, q). Strict inequalities are compared exactly.
///
/// TheoremWindow: 1 <= k < n-1 and k+1 < q-n < p-k-1.
/// C0Window: p > 1 and 0 <= q-n < p-k-1, but not TheoremWindow.
inline RegimeReport validate_params(double n, double k, double p, double q) {
  auto invalid = [](std::string why) { return RegimeReport{Regime::Invalid, std::move(why)}; };
  if (!std::isfinite(n) || !std::isfinite(k) || !std::isfinite(p) || !std::isfinite(q))
    return invalid("parameters must be finite");
  if (n != std::floor(n)) return invalid("n integer violated");
  if (n < 3) return invalid("n >= 3 violated");
  if (k != std::floor(k)) return invalid("k integer violated");
  if (k < 1) return invalid("1 <= k violated");
  if (!(k < n - 1)) return invalid("k < n-1 violated");

  const double qn = q - n;
  if (k + 1 < qn && qn < p - k - 1) {
    // Consequences used by the flow and by condition (A).
    assert(p > 1 && qn >= 0);
    assert(p + k - 1 - q + n > 2 * k);
    assert(qn + k + 1 - p < 0);
    return {Regime::TheoremWindow, {}};
  }
  if (!(p > 1)) return invalid("p > 1 violated");
  if (!(0 <= qn)) return invalid("0 <= q-n violated");
  if (!(qn < p - k - 1)) return invalid("q-n < p-k-1 violated");
  return {Regime::C0Window, {}};
}

inline RegimeReport validate_params(int n, int k, double p, double q) {
  return validate_params(static_cast<double>(n), static_cast<double>(k), p, q);
}

/// Exponents of the flow plus the eta mode.
struct ParamSet {
  int n = 3;
  int k = 1;
  double p = 6;
  double q = 6;
  EtaMode eta_mode = EtaMode::FixedOne;
  double c_target = 1.0;

  RegimeReport regime() const { return validate_params(n, k, p, q); }

  double q_minus_n() const { return q - n; }

  /// F/h is homogeneous of this degree under h -> lambda h. Negative in both windows.
  double ratio_exponent() const { return q - n + k + 1 - p; }

  /// Constant term of condition (A).
  double condition_a_constant() const { return p + k - 1 - q + n; }

  /// Coefficient of f_s^2 / f in condition (A). Requires q-n != k+1.
  double condition_a_fs2_coefficient() const {
    const double qn = q - n;
    return (k + qn / (qn - k - 1) + (p - 2) / (p + k - 1)) / (k + 1);
  }

  bool operator==(const ParamSet&) const = default;
};

}  // namespace cmflow
