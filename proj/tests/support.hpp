#pragma once

// Independent oracles shared by the unit and acceptance tests.

#include "cmflow/cmflow.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

/// Normalized elementary symmetric function by explicit subset enumeration.
inline double sigma_k_brute(const std::vector<double>& lam, int k) {
  const int m = static_cast<int>(lam.size());
  double e = 0.0;
  long count = 0;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) prod *= lam[i];
    e += prod;
    ++count;
  }
  return e / static_cast<double>(count);
}

/// Closed-form spherical calculus of the ellipsoid support function
/// h(x) = sqrt(sum a_i^2 x_i^2) at a point of S^2 with frame (e_theta, e_phi).
struct EllipsoidJet {
  double h;
  double g1, g2;               // frame gradient
  double m11, m12, m22;        // frame covariant Hessian
};

inline EllipsoidJet ellipsoid_jet(const std::array<double, 3>& a, const std::vector<double>& x,
                                  const std::array<double, 3>& e1, const std::array<double, 3>& e2) {
  std::array<double, 3> ax{};
  double q = 0.0;
  for (int i = 0; i < 3; ++i) {
    ax[i] = a[i] * a[i] * x[i];
    q += ax[i] * x[i];
  }
  const double h = std::sqrt(q);
  // D H = A x / h; D^2 H = (A - (Ax)(Ax)^T / h^2) / h; Hess_S h = P D^2H P - h I.
  auto d2 = [&](const std::array<double, 3>& u, const std::array<double, 3>& v) {
    double s = 0.0, au = 0.0, av = 0.0;
    for (int i = 0; i < 3; ++i) {
      s += a[i] * a[i] * u[i] * v[i];
      au += ax[i] * u[i];
      av += ax[i] * v[i];
    }
    return (s - au * av / (h * h)) / h;
  };
  auto grad = [&](const std::array<double, 3>& u) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += ax[i] * u[i];
    return s / h;
  };
  return {h, grad(e1), grad(e2), d2(e1, e1) - h, d2(e1, e2), d2(e2, e2) - h};
}

/// Ellipsoid support function sampled on a FullS2 grid.
inline cmflow::ScalarField ellipsoid_field(const cmflow::GridPtr& g, const std::array<double, 3>& a) {
  return cmflow::ScalarField::from_function(g, [&](const std::vector<double>& x) {
    return std::sqrt(a[0] * a[0] * x[0] * x[0] + a[1] * a[1] * x[1] * x[1] + a[2] * a[2] * x[2] * x[2]);
  });
}

/// Sup-norm errors of the discrete gradient and covariant Hessian against the closed form.
struct OperatorErrors {
  double gradient = 0.0;
  double hessian = 0.0;
};

inline OperatorErrors ellipsoid_operator_errors(int n_theta, const std::array<double, 3>& a) {
  auto [g, rule] = cmflow::build_grid(cmflow::GridKind::FullS2, {n_theta, 2 * n_theta}, 3);
  const cmflow::ScalarField h = ellipsoid_field(g, a);
  const cmflow::TangentField grad = cmflow::gradient(h);
  const cmflow::SymmetricFrameField hess = cmflow::covariant_hessian(h);
  OperatorErrors e;
  for (std::size_t i = 0; i < g->node_count(); ++i) {
    const auto [e1, e2] = g->frame(i);
    const EllipsoidJet j = ellipsoid_jet(a, g->unit_vector(i), e1, e2);
    e.gradient = std::max({e.gradient, std::abs(grad.e1[i] - j.g1), std::abs(grad.e2[i] - j.g2)});
    e.hessian = std::max({e.hessian, std::abs(hess.m11[i] - j.m11), std::abs(hess.m12[i] - j.m12),
                          std::abs(hess.m22[i] - j.m22)});
  }
  return e;
}

/// Random convex perturbed sphere h = r + eps <d, x>^2 with -r/2 < eps < r.
inline cmflow::PerturbedSphere random_perturbed_sphere(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r_dist(0.7, 1.4);
  std::normal_distribution<double> normal;
  const double r = r_dist(rng);
  std::uniform_real_distribution<double> e_dist(-0.3 * r, 0.6 * r);
  std::vector<double> d(3);
  double nrm = 0.0;
  for (double& c : d) {
    c = normal(rng);
    nrm += c * c;
  }
  for (double& c : d) c /= std::sqrt(nrm);
  return {r, e_dist(rng), d};
}

}  // namespace oracle
