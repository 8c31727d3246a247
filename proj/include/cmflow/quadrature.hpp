#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cmflow {

struct GaussRule {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;  // positive
};

namespace detail {

// P_m^{(a,a)}(x) and P_{m-1}^{(a,a)}(x) by the three-term recurrence.
inline void jacobi_symmetric(int m, double a, double x, double& pm, double& pm1) {
  double p0 = 1.0;
  double p1 = (a + 1.0) * x;
  if (m == 0) {
    pm = p0;
    pm1 = 0.0;
    return;
  }
  for (int j = 2; j <= m; ++j) {
    const double s = 2.0 * j + 2.0 * a;
    const double next = ((s - 1.0) * s * (s - 2.0) * x * p1 -
                         2.0 * (j + a - 1.0) * (j + a - 1.0) * s * p0) /
                        (2.0 * j * (j + 2.0 * a) * (s - 2.0));
    p0 = p1;
    p1 = next;
  }
  pm = p1;
  pm1 = p0;
}

}  // namespace detail

/// Gauss-Jacobi rule for the weight (1 - x^2)^a on [-1, 1]; a = 0 is Gauss-Legendre.
///
/// Nodes come from the Golub-Welsch eigenproblem and are polished by Newton on the
/// Jacobi polynomial; weights use the closed form in terms of P_m'.
inline GaussRule gauss_jacobi_symmetric(int m, double a) {
  if (m < 1) throw std::invalid_argument("gauss_jacobi_symmetric: m must be >= 1");
  if (!(a > -1.0)) throw std::invalid_argument("gauss_jacobi_symmetric: a must be > -1");

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(std::max(m - 1, 0));
  for (int j = 1; j < m; ++j) {
    const double s = 2.0 * j + 2.0 * a;
    sub(j - 1) = std::sqrt(4.0 * j * (j + a) * (j + a) * (j + 2.0 * a) /
                           (s * s * (s + 1.0) * (s - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  Eigen::VectorXd guess = solver.eigenvalues();

  const double log_norm = (2.0 * a + 1.0) * std::log(2.0) + 2.0 * std::lgamma(m + a + 1.0) -
                          std::lgamma(m + 2.0 * a + 1.0) - std::lgamma(m + 1.0);

  GaussRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  // Solve the upper half and mirror, so the rule is exactly symmetric.
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = guess(m - 1 - i);
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double pm = 0.0;
      double pm1 = 0.0;
      detail::jacobi_symmetric(m, a, x, pm, pm1);
      dp = (-m * x * pm + (m + a) * pm1) / (1.0 - x * x);
      const double dx = pm / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double pm = 0.0;
    double pm1 = 0.0;
    detail::jacobi_symmetric(m, a, x, pm, pm1);
    dp = (-m * x * pm + (m + a) * pm1) / (1.0 - x * x);
    if (2 * i + 1 == m) x = 0.0;
    const double w = std::exp(log_norm) / ((1.0 - x * x) * dp * dp);
    rule.nodes[m - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[m - 1 - i] = w;
    rule.weights[i] = w;
  }
  return rule;
}

inline GaussRule gauss_legendre(int m) { return gauss_jacobi_symmetric(m, 0.0); }

/// Surface area of the unit sphere S^{d} in R^{d+1}.
inline double sphere_area(int d) {
  const double h = 0.5 * (d + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

}  // namespace cmflow
