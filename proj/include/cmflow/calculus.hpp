#pragma once

#include "cmflow/grid.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace cmflow {

/// Below this sin(theta) the axisymmetric cot(theta) h_theta term is replaced by its
/// limit h_theta_theta. Gauss nodes keep sin(theta) well above it.
inline constexpr double kPoleTolerance = 1e-8;

/// Coordinate derivatives of a field. Phi entries are empty on axisymmetric grids.
struct CoordinateDerivatives {
  std::vector<double> t, tt;       // d/dtheta, d2/dtheta2
  std::vector<double> p, pp, tp;   // d/dphi, d2/dphi2, d2/dtheta dphi
};

/// Per-node frame components: gradient (e1 = theta, e2 = phi / sin theta) and the
/// covariant Hessian. Axisymmetric grids report the transverse entry once; it has
/// multiplicity n - 2, and e2 / h12 are empty.
struct FrameCalculus {
  std::vector<double> grad1, grad2;
  std::vector<double> hess11, hess12, hess22;
};

/// Fourth-order theta differences with cross-pole ghost values: the value at (-theta, phi)
/// is read from (theta, phi + pi). Valid for any field that is a scalar on the sphere
/// or a phi-derivative of one.
inline void theta_differences(const SphericalGrid& g, std::span<const double> v,
                              std::span<double> d1, std::span<double> d2) {
  const int nt = g.n_theta();
  const int np = g.n_phi();
  for (int i = 0; i < nt; ++i) {
    const ThetaStencil& st = g.stencil(i);
    for (int j = 0; j < np; ++j) {
      const double center = v[g.node(i, j)];
      double a1 = 0.0;
      double a2 = 0.0;
      for (int s = 0; s < 5; ++s) {
        if (s == 2) continue;
        const int col = st.shifted[s] ? g.antipodal_col(j) : j;
        const double diff = v[g.node(st.row[s], col)] - center;
        a1 += st.d1[s] * diff;
        a2 += st.d2[s] * diff;
      }
      if (!d1.empty()) d1[g.node(i, j)] = a1;
      if (!d2.empty()) d2[g.node(i, j)] = a2;
    }
  }
}

inline CoordinateDerivatives coordinate_derivatives(const ScalarField& h) {
  const SphericalGrid& g = *h.grid();
  const std::size_t n = g.node_count();
  CoordinateDerivatives d;
  d.t.resize(n);
  d.tt.resize(n);
  theta_differences(g, h.values(), d.t, d.tt);
  if (g.is_full()) {
    d.p.resize(n);
    d.pp.resize(n);
    d.tp.resize(n);
    g.phi_differentiator()->differentiate(h.values(), d.p, d.pp);
    theta_differences(g, d.p, d.tp, {});
  }
  return d;
}

inline FrameCalculus frame_calculus(const SphericalGrid& g, const CoordinateDerivatives& d) {
  const std::size_t n = g.node_count();
  FrameCalculus c;
  c.grad1 = d.t;
  c.hess11 = d.tt;
  c.hess22.resize(n);
  if (g.is_full()) {
    c.grad2.resize(n);
    c.hess12.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int r = g.row_of(i);
      const double s = g.sin_theta(r);
      const double cot = g.cos_theta(r) / s;
      c.grad2[i] = d.p[i] / s;
      c.hess12[i] = (d.tp[i] - cot * d.p[i]) / s;
      c.hess22[i] = d.pp[i] / (s * s) + cot * d.t[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const int r = g.row_of(i);
      const double s = g.sin_theta(r);
      c.hess22[i] = s < kPoleTolerance ? d.tt[i] : g.cos_theta(r) / s * d.t[i];
    }
  }
  return c;
}

inline FrameCalculus frame_calculus(const ScalarField& h) {
  return frame_calculus(*h.grid(), coordinate_derivatives(h));
}

struct TangentField {
  std::vector<double> e1, e2;  // e2 empty on axisymmetric grids
};

struct SymmetricFrameField {
  std::vector<double> m11, m12, m22;  // m12 empty on axisymmetric grids
};

/// Frame components of the spherical gradient: (h_theta, h_phi / sin theta).
inline TangentField gradient(const ScalarField& h) {
  FrameCalculus c = frame_calculus(h);
  return {std::move(c.grad1), std::move(c.grad2)};
}

/// Frame components of the covariant Hessian.
inline SymmetricFrameField covariant_hessian(const ScalarField& h) {
  FrameCalculus c = frame_calculus(h);
  return {std::move(c.hess11), std::move(c.hess12), std::move(c.hess22)};
}

}  // namespace cmflow
