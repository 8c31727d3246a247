#pragma once

#include "cmflow/errors.hpp"
#include "cmflow/quadrature.hpp"
#include "cmflow/spectral.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace cmflow {

enum class GridKind { Axisymmetric, FullS2 };

inline const char* to_string(GridKind k) {
  return k == GridKind::Axisymmetric ? "axisymmetric" : "full_s2";
}

struct Resolution {
  int n_theta = 64;
  int n_phi = 0;  // FullS2 only
};

/// Identity of a grid: two grids with equal descriptors have identical nodes and weights.
struct GridDescriptor {
  GridKind kind = GridKind::FullS2;
  int dim_n = 3;
  int n_theta = 64;
  int n_phi = 128;  // 1 for Axisymmetric

  bool operator==(const GridDescriptor&) const = default;
};

/// Five-point stencil in theta for one row, including cross-pole ghost rows.
struct ThetaStencil {
  std::array<int, 5> row{};         // source row of each stencil point
  std::array<bool, 5> shifted{};    // true when the point lies across a pole (phi + pi)
  std::array<double, 5> d1{};       // first-derivative weights
  std::array<double, 5> d2{};       // second-derivative weights
};

namespace detail {

// Fornberg's recursion for derivative weights up to order 2 at x0.
inline void fornberg_weights(double x0, std::span<const double> x, std::span<double> w1,
                             std::span<double> w2) {
  const std::size_t n = x.size();
  std::vector<std::array<double, 3>> c(n, {0.0, 0.0, 0.0});
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  for (std::size_t i = 0; i < n; ++i) {
    w1[i] = c[i][1];
    w2[i] = c[i][2];
  }
}

}  // namespace detail

class SphericalGrid;
class QuadratureRule;

/// Staggered colatitude grid on S^{n-1}: either an axisymmetric profile (any n >= 3) or a
/// full latitude-longitude lattice on S^2. Nodes are stored row-major, theta outer.
class SphericalGrid {
 public:
  const GridDescriptor& descriptor() const { return desc_; }
  GridKind kind() const { return desc_.kind; }
  int dim_n() const { return desc_.dim_n; }
  int n_theta() const { return desc_.n_theta; }
  int n_phi() const { return desc_.n_phi; }
  std::size_t node_count() const { return static_cast<std::size_t>(desc_.n_theta) * desc_.n_phi; }
  bool is_full() const { return desc_.kind == GridKind::FullS2; }

  std::span<const double> theta() const { return theta_; }
  std::span<const double> phi() const { return phi_; }
  double sin_theta(int row) const { return sin_[row]; }
  double cos_theta(int row) const { return cos_[row]; }

  int row_of(std::size_t node) const { return static_cast<int>(node / desc_.n_phi); }
  int col_of(std::size_t node) const { return static_cast<int>(node % desc_.n_phi); }
  std::size_t node(int row, int col) const {
    return static_cast<std::size_t>(row) * desc_.n_phi + col;
  }
  /// Column at phi + pi (identity on axisymmetric grids).
  int antipodal_col(int col) const {
    return desc_.n_phi == 1 ? col : (col + desc_.n_phi / 2) % desc_.n_phi;
  }

  const ThetaStencil& stencil(int row) const { return stencils_[row]; }

  /// Unit vector of a node in R^n. Axisymmetric grids use the meridian phi = 0:
  /// (sin theta, 0, ..., 0, cos theta).
  std::vector<double> unit_vector(std::size_t node) const {
    std::vector<double> x(desc_.dim_n, 0.0);
    const int r = row_of(node);
    if (is_full()) {
      const double ph = phi_[col_of(node)];
      x[0] = sin_[r] * std::cos(ph);
      x[1] = sin_[r] * std::sin(ph);
      x[2] = cos_[r];
    } else {
      x[0] = sin_[r];
      x[desc_.dim_n - 1] = cos_[r];
    }
    return x;
  }

  /// Tangent frame (e_theta, e_phi) at a FullS2 node in R^3.
  std::pair<std::array<double, 3>, std::array<double, 3>> frame(std::size_t node) const {
    const int r = row_of(node);
    const double ph = phi_[col_of(node)];
    return {{cos_[r] * std::cos(ph), cos_[r] * std::sin(ph), -sin_[r]},
            {-std::sin(ph), std::cos(ph), 0.0}};
  }

  /// Smallest effective spacing used by the parabolic time-step bound. The phi spacing
  /// sin(theta) dphi is scaled by sqrt(16/3)/pi so that the spectral phi operator and the
  /// fourth-order theta stencil are held to the same stability margin.
  double min_spacing() const { return min_spacing_; }

  const PeriodicDifferentiator* phi_differentiator() const { return phi_diff_.get(); }

 private:
  friend std::pair<std::shared_ptr<const SphericalGrid>, QuadratureRule> build_grid(GridKind,
                                                                                    Resolution, int);

  GridDescriptor desc_;
  std::vector<double> theta_;
  std::vector<double> phi_;
  std::vector<double> sin_;
  std::vector<double> cos_;
  std::vector<ThetaStencil> stencils_;
  double min_spacing_ = 0.0;
  std::shared_ptr<PeriodicDifferentiator> phi_diff_;
};

using GridPtr = std::shared_ptr<const SphericalGrid>;

/// Surface-measure weights per node; they sum to |S^{n-1}|.
class QuadratureRule {
 public:
  QuadratureRule() = default;
  QuadratureRule(GridPtr grid, std::vector<double> weights)
      : grid_(std::move(grid)), weights_(std::move(weights)) {}

  const GridPtr& grid() const { return grid_; }
  std::span<const double> weights() const { return weights_; }
  double total() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  GridPtr grid_;
  std::vector<double> weights_;
};

/// Nodal values on a grid.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw GridMismatch("ScalarField: null grid");
    if (values_.size() != grid_->node_count())
      throw GridMismatch("ScalarField: " + std::to_string(values_.size()) + " values for " +
                         std::to_string(grid_->node_count()) + " nodes");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw Error("ScalarField: non-finite value at node " + std::to_string(i));
  }

  static ScalarField constant(GridPtr grid, double value) {
    const std::size_t n = grid->node_count();
    return ScalarField(std::move(grid), std::vector<double>(n, value));
  }

  template <class Fn>
  static ScalarField from_function(GridPtr grid, Fn&& fn) {
    std::vector<double> v(grid->node_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->unit_vector(i));
    return ScalarField(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double min() const {
    double m = values_.front();
    for (double v : values_) m = std::min(m, v);
    return m;
  }
  double max() const {
    double m = values_.front();
    for (double v : values_) m = std::max(m, v);
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const SphericalGrid& a, const SphericalGrid& b, const char* what) {
  if (!(a.descriptor() == b.descriptor())) throw GridMismatch(std::string(what) + ": grid mismatch");
}

/// Builds the grid and its quadrature.
///
/// Theta nodes are Gauss-Jacobi nodes in cos(theta) for the weight (1 - x^2)^{(n-3)/2}
/// (Gauss-Legendre when n = 3), so the axisymmetric rule integrates polynomials in
/// cos(theta) of degree <= 2 n_theta - 1 exactly for every n. FullS2 multiplies by the
/// uniform trapezoid rule in phi.
inline std::pair<std::shared_ptr<const SphericalGrid>, QuadratureRule> build_grid(GridKind kind, Resolution res, int dim_n) {
  if (dim_n < 3) throw ConfigError("grid: dim_n must be >= 3");
  if (res.n_theta < 8) throw ConfigError("grid: n_theta must be >= 8");
  if (kind == GridKind::FullS2) {
    if (dim_n != 3) throw ConfigError("grid: full_s2 requires dim_n = 3");
    if (res.n_phi < 8) throw ConfigError("grid: n_phi must be >= 8");
    if (res.n_phi % 2 != 0) throw ConfigError("grid: n_phi must be even");
  }

  auto grid = std::make_shared<SphericalGrid>();
  grid->desc_ = {kind, dim_n, res.n_theta, kind == GridKind::FullS2 ? res.n_phi : 1};
  const int nt = res.n_theta;
  const int np = grid->desc_.n_phi;

  const double a = 0.5 * (dim_n - 3);
  GaussRule gr = gauss_jacobi_symmetric(nt, a);
  grid->theta_.resize(nt);
  grid->sin_.resize(nt);
  grid->cos_.resize(nt);
  std::vector<double> row_weight(nt);
  for (int i = 0; i < nt; ++i) {
    // Ascending theta means descending cos(theta).
    const double x = gr.nodes[nt - 1 - i];
    grid->theta_[i] = std::acos(x);
    grid->cos_[i] = x;
    grid->sin_[i] = std::sqrt((1.0 - x) * (1.0 + x));
    row_weight[i] = gr.weights[nt - 1 - i];
  }

  grid->phi_.resize(np);
  for (int j = 0; j < np; ++j) grid->phi_[j] = 2.0 * std::numbers::pi * j / np;

  // Stencils with ghost rows across the poles.
  auto ext = [&](int r, int& src, bool& shifted) {
    if (r < 0) {
      src = -r - 1;
      shifted = true;
      return -grid->theta_[src];
    }
    if (r >= nt) {
      src = 2 * nt - 1 - r;
      shifted = true;
      return 2.0 * std::numbers::pi - grid->theta_[src];
    }
    src = r;
    shifted = false;
    return grid->theta_[r];
  };
  grid->stencils_.resize(nt);
  double min_dtheta = std::numbers::pi;
  for (int i = 0; i < nt; ++i) {
    ThetaStencil& st = grid->stencils_[i];
    std::array<double, 5> xs{};
    for (int s = 0; s < 5; ++s) {
      bool sh = false;
      int src = 0;
      xs[s] = ext(i - 2 + s, src, sh);
      st.row[s] = src;
      st.shifted[s] = sh;
    }
    detail::fornberg_weights(grid->theta_[i], xs, st.d1, st.d2);
    bool dummy = false;
    int src = 0;
    min_dtheta = std::min(min_dtheta, ext(i + 1, src, dummy) - grid->theta_[i]);
    min_dtheta = std::min(min_dtheta, grid->theta_[i] - ext(i - 1, src, dummy));
  }
  grid->min_spacing_ = min_dtheta;
  if (kind == GridKind::FullS2) {
    const double dphi = 2.0 * std::numbers::pi / np;
    const double scale = std::sqrt(16.0 / 3.0) / std::numbers::pi;
    for (int i = 0; i < nt; ++i)
      grid->min_spacing_ = std::min(grid->min_spacing_, scale * grid->sin_[i] * dphi);
    grid->phi_diff_ = std::make_shared<PeriodicDifferentiator>(np, nt);
  }

  std::vector<double> w(grid->node_count());
  const double transverse =
      kind == GridKind::FullS2 ? 2.0 * std::numbers::pi / np : sphere_area(dim_n - 2);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) w[grid->node(i, j)] = row_weight[i] * transverse;

  GridPtr ptr = grid;
  return {ptr, QuadratureRule(ptr, std::move(w))};
}

/// Sum of weight * value.
inline double integrate(const ScalarField& field, const QuadratureRule& rule) {
  require_same_grid(*field.grid(), *rule.grid(), "integrate");
  const auto w = rule.weights();
  const auto v = field.values();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
  return s;
}

inline double integrate(std::span<const double> values, const QuadratureRule& rule) {
  const auto w = rule.weights();
  if (values.size() != w.size()) throw GridMismatch("integrate: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * values[i];
  return s;
}

}  // namespace cmflow
