#pragma once

#include "cmflow/calculus.hpp"
#include "cmflow/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace cmflow {

/// C^1 bicubic Hermite interpolation of a grid field (cubic Hermite in theta on
/// axisymmetric grids). Nodal slopes come from the grid's own derivative operators;
/// the cells adjacent to the poles use ghost rows at phi + pi.
class FieldInterpolator {
 public:
  explicit FieldInterpolator(const ScalarField& f) : grid_(f.grid()), v_(f.values().begin(), f.values().end()) {
    const CoordinateDerivatives d = coordinate_derivatives(f);
    t_ = d.t;
    if (grid_->is_full()) {
      p_ = d.p;
      tp_ = d.tp;
    }
  }

  const GridPtr& grid() const { return grid_; }

  double operator()(std::span<const double> x) const {
    const SphericalGrid& g = *grid_;
    const int n = g.dim_n();
    const double theta = std::acos(std::clamp(x[n - 1], -1.0, 1.0));
    const auto th = g.theta();
    const int nt = g.n_theta();

    // Virtual rows -1 .. nt; find r with theta in [vt(r), vt(r+1)].
    auto vtheta = [&](int r) {
      if (r < 0) return -th[0];
      if (r >= nt) return 2.0 * std::numbers::pi - th[nt - 1];
      return th[r];
    };
    int r = static_cast<int>(std::upper_bound(th.begin(), th.end(), theta) - th.begin()) - 1;
    r = std::clamp(r, -1, nt - 1);
    const double t0 = vtheta(r);
    const double dth = vtheta(r + 1) - t0;
    const double u = (theta - t0) / dth;

    if (!g.is_full()) {
      double val = 0.0;
      for (int a = 0; a < 2; ++a) {
        const Corner c = corner(r + a, 0);
        val += hval(a, u) * c.f + hder(a, u) * dth * c.ft;
      }
      return val;
    }

    double phi = std::atan2(x[1], x[0]);
    if (phi < 0) phi += 2.0 * std::numbers::pi;
    const int np = g.n_phi();
    const double dph = 2.0 * std::numbers::pi / np;
    int c0 = static_cast<int>(std::floor(phi / dph));
    c0 = std::clamp(c0, 0, np - 1);
    const double w = phi / dph - c0;

    double val = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const Corner c = corner(r + a, (c0 + b) % np);
        val += hval(a, u) * hval(b, w) * c.f + hder(a, u) * dth * hval(b, w) * c.ft +
               hval(a, u) * hder(b, w) * dph * c.fp + hder(a, u) * dth * hder(b, w) * dph * c.ftp;
      }
    }
    return val;
  }

 private:
  struct Corner {
    double f, ft, fp, ftp;
  };

  // Data at virtual row r and column col; ghost rows flip the sign of theta slopes.
  Corner corner(int r, int col) const {
    const SphericalGrid& g = *grid_;
    const int nt = g.n_theta();
    double sign = 1.0;
    if (r < 0 || r >= nt) {
      r = r < 0 ? 0 : nt - 1;
      col = g.antipodal_col(col);
      sign = -1.0;
    }
    const std::size_t i = g.node(r, col);
    if (!g.is_full()) return {v_[i], sign * t_[i], 0.0, 0.0};
    return {v_[i], sign * t_[i], p_[i], sign * tp_[i]};
  }

  static double hval(int a, double s) {
    return a == 0 ? (2 * s - 3) * s * s + 1 : (3 - 2 * s) * s * s;
  }
  static double hder(int a, double s) {
    return a == 0 ? ((s - 2) * s + 1) * s : (s - 1) * s * s;
  }

  GridPtr grid_;
  std::vector<double> v_, t_, p_, tp_;
};

/// Orthonormal pair spanning the great circle orthogonal to a unit axis in R^3.
inline std::pair<std::array<double, 3>, std::array<double, 3>> circle_basis(
    const std::array<double, 3>& axis) {
  int best = 2;
  for (int i = 1; i >= 0; --i)
    if (std::abs(axis[i]) < std::abs(axis[best])) best = i;
  std::array<double, 3> u{0.0, 0.0, 0.0};
  u[best] = 1.0;
  const double dot = axis[best];
  double nrm = 0.0;
  for (int i = 0; i < 3; ++i) {
    u[i] -= dot * axis[i];
    nrm += u[i] * u[i];
  }
  nrm = std::sqrt(nrm);
  for (double& c : u) c /= nrm;
  const std::array<double, 3> v{axis[1] * u[2] - axis[2] * u[1], axis[2] * u[0] - axis[0] * u[2],
                                axis[0] * u[1] - axis[1] * u[0]};
  return {u, v};
}

/// Samples fn at x(s_j) = cos(s_j) u + sin(s_j) v, s_j = 2 pi j / m.
template <class Fn>
std::vector<double> sample_circle(Fn&& fn, std::span<const double> u, std::span<const double> v,
                                  int m) {
  std::vector<double> out(m);
  std::vector<double> x(u.size());
  for (int j = 0; j < m; ++j) {
    const double s = 2.0 * std::numbers::pi * j / m;
    const double c = std::cos(s);
    const double sn = std::sin(s);
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = c * u[i] + sn * v[i];
    out[j] = fn(std::span<const double>(x));
  }
  return out;
}

/// m equally spaced samples along the great circle orthogonal to `axis` (R^3).
template <class Fn>
std::vector<double> sample_great_circle(Fn&& fn, const std::array<double, 3>& axis, int m) {
  if (m < 32 || m % 2 != 0) throw ConfigError("sample_great_circle: m must be even and >= 32");
  const double nrm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (std::abs(nrm - 1.0) > 1e-12) throw ConfigError("sample_great_circle: axis is not a unit vector");
  const auto [u, v] = circle_basis(axis);
  return sample_circle(std::forward<Fn>(fn), u, v, m);
}

}  // namespace cmflow
