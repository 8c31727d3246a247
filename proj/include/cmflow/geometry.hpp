#pragma once

#include "cmflow/calculus.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/params.hpp"
#include "cmflow/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace cmflow {

/// Everything the flow needs at each node, derived from one support field.
///
/// The spectrum of b has at most two distinct values per node: on FullS2 the two
/// eigenvalues (radius_a >= radius_b); on axisymmetric grids the meridian radius
/// (radius_a, multiplicity 1) and the transverse radius (radius_b, multiplicity n-2).
struct CurvatureData {
  GridPtr grid;
  int n = 3;
  int k = 1;

  std::vector<double> grad1, grad2;   // frame gradient (grad2 empty on axisymmetric grids)
  std::vector<double> b11, b12, b22;  // b = Hess h + h I (b12 empty on axisymmetric grids)
  std::vector<double> radius_a, radius_b;
  std::vector<double> dsigma_a, dsigma_b;  // d sigma_k / d(single eigenvalue)
  std::vector<double> sigma_k;
  std::vector<double> rho;

  double min_margin = 0.0;       // smallest principal radius over all nodes
  std::size_t argmin_margin = 0;

  std::size_t size() const { return sigma_k.size(); }
  int multiplicity_b() const { return grid->is_full() ? 1 : n - 2; }

  double convexity_margin(std::size_t i) const { return std::min(radius_a[i], radius_b[i]); }

  /// Largest eigenvalue of the matrix d sigma_k / d b_ij.
  double max_sigma_grad(std::size_t i) const { return std::max(dsigma_a[i], dsigma_b[i]); }

  /// All n-1 principal radii at a node, descending.
  std::vector<double> radii(std::size_t i) const {
    std::vector<double> r;
    r.reserve(n - 1);
    r.push_back(radius_a[i]);
    for (int j = 0; j < multiplicity_b(); ++j) r.push_back(radius_b[i]);
    std::sort(r.begin(), r.end(), std::greater<>());
    return r;
  }
};

namespace detail {

inline void check_positive(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0)) throw NonPositiveError(std::string(what) + " must be positive", i);
}

// Symmetric 2x2 eigenvalues, descending. The smaller one is recovered from the
// determinant when the pair has a common sign, which avoids cancellation.
inline void symmetric_eigen2(double a, double b, double c, double& hi, double& lo) {
  const double mean = 0.5 * (a + c);
  const double r = std::hypot(0.5 * (a - c), b);
  if (mean >= 0.0) {
    hi = mean + r;
    lo = hi != 0.0 ? (a * c - b * b) / hi : mean - r;
  } else {
    lo = mean - r;
    hi = (a * c - b * b) / lo;
  }
}

inline constexpr double kPowerBaseMin = 1e-6;
inline constexpr double kPowerBaseMax = 1e6;

inline double checked_log(double x, const char* what) {
  if (!(x >= kPowerBaseMin && x <= kPowerBaseMax))
    throw DivergenceError(std::string(what) + " = " + std::to_string(x) +
                          " left the admissible range [1e-6, 1e6]");
  return std::log(x);
}

}  // namespace detail

/// Builds b, principal radii, sigma_k, its partials and rho from h.
inline CurvatureData curvature_pipeline(const ScalarField& h, const ParamSet& params) {
  const SphericalGrid& g = *h.grid();
  if (g.dim_n() != params.n)
    throw GridMismatch("curvature_pipeline: grid dimension differs from params.n");
  detail::check_positive(h.values(), "support function h");

  FrameCalculus fc = frame_calculus(h);
  const std::size_t nn = g.node_count();
  const int m = params.n - 1;
  const int k = params.k;

  CurvatureData cd;
  cd.grid = h.grid();
  cd.n = params.n;
  cd.k = k;
  cd.b11.resize(nn);
  cd.b22.resize(nn);
  cd.radius_a.resize(nn);
  cd.radius_b.resize(nn);
  cd.dsigma_a.resize(nn);
  cd.dsigma_b.resize(nn);
  cd.sigma_k.resize(nn);
  cd.rho.resize(nn);
  if (g.is_full()) cd.b12.resize(nn);

  double lam[detail::kMaxSpectrum];
  double part[detail::kMaxSpectrum];
  cd.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nn; ++i) {
    const double hv = h[i];
    const double a = fc.hess11[i] + hv;
    const double c = fc.hess22[i] + hv;
    cd.b11[i] = a;
    cd.b22[i] = c;
    double ra = a;
    double rb = c;
    double g2 = fc.grad1[i] * fc.grad1[i];
    if (g.is_full()) {
      const double b = fc.hess12[i];
      cd.b12[i] = b;
      detail::symmetric_eigen2(a, b, c, ra, rb);
      g2 += fc.grad2[i] * fc.grad2[i];
    }
    cd.radius_a[i] = ra;
    cd.radius_b[i] = rb;
    lam[0] = ra;
    for (int j = 1; j < m; ++j) lam[j] = rb;
    cd.sigma_k[i] = detail::sigma_k_raw(lam, m, k, part);
    cd.dsigma_a[i] = part[0];
    cd.dsigma_b[i] = part[m - 1];
    cd.rho[i] = std::sqrt(hv * hv + g2);
    const double margin = std::min(ra, rb);
    if (margin < cd.min_margin) {
      cd.min_margin = margin;
      cd.argmin_margin = i;
    }
  }
  cd.grad1 = std::move(fc.grad1);
  cd.grad2 = std::move(fc.grad2);
  return cd;
}

struct SpeedFields {
  std::vector<double> N;      // f h^{2-p} rho^{q-n}
  std::vector<double> F;      // N sigma_k
  std::vector<double> ratio;  // F / h
};

/// N, F = N sigma_k and F/h. Powers are taken in log space; bases outside
/// [1e-6, 1e6] raise DivergenceError.
inline SpeedFields speed_and_ratio(const ScalarField& h, const ScalarField& f,
                                   const CurvatureData& curv, const ParamSet& params) {
  require_same_grid(*h.grid(), *f.grid(), "speed_and_ratio");
  detail::check_positive(h.values(), "support function h");
  detail::check_positive(f.values(), "anisotropy f");
  const std::size_t nn = h.size();
  SpeedFields s;
  s.N.resize(nn);
  s.F.resize(nn);
  s.ratio.resize(nn);
  const double eh = 2.0 - params.p;
  const double er = params.q - params.n;
  for (std::size_t i = 0; i < nn; ++i) {
    const double lh = detail::checked_log(h[i], "h");
    const double lr = detail::checked_log(curv.rho[i], "rho");
    s.N[i] = f[i] * std::exp(eh * lh + er * lr);
    s.F[i] = s.N[i] * curv.sigma_k[i];
    s.ratio[i] = s.F[i] / h[i];
  }
  return s;
}

struct Residual {
  double sup = 0.0;
  std::vector<double> field;  // f h^{1-p} rho^{q-n} sigma_k - c
};

inline void require_convex(const CurvatureData& cd) {
  if (!(cd.min_margin > 0.0)) throw NonConvexError(cd.argmin_margin, cd.min_margin);
}

/// Residual of f h^{1-p} rho^{q-n} sigma_k = c. Evaluated as F/h - c.
inline Residual elliptic_residual(const ScalarField& h, const ScalarField& f,
                                  const ParamSet& params, double c_target) {
  const CurvatureData cd = curvature_pipeline(h, params);
  require_convex(cd);
  SpeedFields s = speed_and_ratio(h, f, cd, params);
  Residual r;
  r.field = std::move(s.ratio);
  for (double& v : r.field) {
    v -= c_target;
    r.sup = std::max(r.sup, std::abs(v));
  }
  return r;
}

/// Points in R^n, stored contiguously.
struct PointCloud {
  int dim = 3;
  std::vector<double> coords;

  std::size_t size() const { return coords.size() / dim; }
  std::span<const double> operator[](std::size_t i) const {
    return std::span<const double>(coords).subspan(i * dim, dim);
  }
  double norm(std::size_t i) const {
    double s = 0.0;
    for (double c : (*this)[i]) s += c * c;
    return std::sqrt(s);
  }
};

/// X = grad h + h x from explicit frame gradient components. Axisymmetric points lie
/// in the meridian plane spanned by e_1 and e_n.
inline PointCloud embed(const ScalarField& h, std::span<const double> grad1,
                        std::span<const double> grad2) {
  const SphericalGrid& g = *h.grid();
  const std::size_t nn = g.node_count();
  PointCloud pc;
  pc.dim = g.dim_n();
  pc.coords.assign(nn * pc.dim, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    const int r = g.row_of(i);
    const double st = g.sin_theta(r);
    const double ct = g.cos_theta(r);
    double* X = pc.coords.data() + i * pc.dim;
    double g2 = grad1[i] * grad1[i];
    if (g.is_full()) {
      const auto [et, ep] = g.frame(i);
      const auto x = g.unit_vector(i);
      for (int d = 0; d < 3; ++d) X[d] = h[i] * x[d] + grad1[i] * et[d] + grad2[i] * ep[d];
      g2 += grad2[i] * grad2[i];
    } else {
      X[0] = h[i] * st + grad1[i] * ct;
      X[pc.dim - 1] = h[i] * ct - grad1[i] * st;
    }
    const double rho = std::sqrt(h[i] * h[i] + g2);
    if (std::abs(pc.norm(i) - rho) > 1e-10 * std::max(1.0, rho))
      throw Error("embed: |X| differs from rho at node " + std::to_string(i));
  }
  return pc;
}

/// X = grad h + h x with the grid's discrete gradient.
inline PointCloud embed(const ScalarField& h) {
  const TangentField t = gradient(h);
  return embed(h, t.e1, t.e2);
}

struct Rescaled {
  double lambda = 1.0;
  ScalarField h;
};

/// Largest lambda <= 1 with min F/h(lambda h0) >= 1 + delta. F/h is homogeneous of the
/// negative degree q-n+k+1-p, which gives the closed form; a bisection backs it up.
inline Rescaled rescale_for_positivity(const ScalarField& h0, const ScalarField& f,
                                       const ParamSet& params, double delta) {
  if (!(delta > 0.0)) throw ConfigError("rescale_for_positivity: delta must be positive");
  if (params.regime().regime != Regime::TheoremWindow)
    throw ConfigError("rescale_for_positivity: parameters outside k+1 < q-n < p-k-1");

  auto min_ratio = [&](double lambda) {
    std::vector<double> v(h0.values().begin(), h0.values().end());
    for (double& x : v) x *= lambda;
    ScalarField h(h0.grid(), std::move(v));
    const CurvatureData cd = curvature_pipeline(h, params);
    require_convex(cd);
    const SpeedFields s = speed_and_ratio(h, f, cd, params);
    return std::pair{*std::min_element(s.ratio.begin(), s.ratio.end()), std::move(h)};
  };

  const double target = 1.0 + delta;
  auto [m0, h_unscaled] = min_ratio(1.0);
  if (m0 >= target) return {1.0, std::move(h_unscaled)};

  const double gap = -params.ratio_exponent();  // p-k-1-q+n > 0
  double lambda = std::min(1.0, std::pow(m0 / target, 1.0 / gap));
  auto [m1, h1] = min_ratio(lambda);
  if (m1 >= target * (1.0 - 1e-12)) return {lambda, std::move(h1)};

  // Closed form missed: bisect on [lo, lambda] where lo satisfies the bound.
  double lo = lambda;
  double hi = lambda;
  do {
    lo *= 0.5;
  } while (min_ratio(lo).first < target);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_ratio(mid).first >= target ? lo : hi) = mid;
  }
  auto [m2, h2] = min_ratio(lo);
  return {lo, std::move(h2)};
}

}  // namespace cmflow
