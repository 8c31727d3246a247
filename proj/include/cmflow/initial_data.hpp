#pragma once

#include "cmflow/calculus.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/geometry.hpp"
#include "cmflow/grid.hpp"

#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cmflow {

struct Sphere {
  double r = 1.0;
  bool operator==(const Sphere&) const = default;
};

/// Ball of radius r centred at `center`: h = r + <center, x>.
struct TranslatedBall {
  double r = 1.0;
  std::vector<double> center;
  bool operator==(const TranslatedBall&) const = default;
};

/// h = sqrt(sum a_i^2 x_i^2).
struct EllipsoidSupport {
  std::vector<double> axes;
  bool operator==(const EllipsoidSupport&) const = default;
};

/// h = r + epsilon <direction, x>^2. Convex iff -r/2 < epsilon < r.
struct PerturbedSphere {
  double r = 1.0;
  double epsilon = 0.0;
  std::vector<double> direction;
  bool operator==(const PerturbedSphere&) const = default;
};

using InitialShape = std::variant<Sphere, TranslatedBall, EllipsoidSupport, PerturbedSphere>;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline double support_value(const InitialShape& shape, std::span<const double> x) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return s.r;
        } else if constexpr (std::is_same_v<T, TranslatedBall>) {
          return s.r + detail::dot(s.center, x);
        } else if constexpr (std::is_same_v<T, EllipsoidSupport>) {
          double q = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) q += s.axes[i] * s.axes[i] * x[i] * x[i];
          return std::sqrt(q);
        } else {
          const double d = detail::dot(s.direction, x);
          return s.r + s.epsilon * d * d;
        }
      },
      shape);
}

/// Spherical gradient of h at x, as an ambient vector tangent to the sphere.
inline std::vector<double> support_gradient(const InitialShape& shape, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TranslatedBall>) {
          const double d = detail::dot(s.center, x);
          for (std::size_t i = 0; i < n; ++i) g[i] = s.center[i] - d * x[i];
        } else if constexpr (std::is_same_v<T, EllipsoidSupport>) {
          const double h = support_value(shape, x);
          for (std::size_t i = 0; i < n; ++i) g[i] = s.axes[i] * s.axes[i] * x[i] / h - h * x[i];
        } else if constexpr (std::is_same_v<T, PerturbedSphere>) {
          const double d = detail::dot(s.direction, x);
          for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * s.epsilon * d * (s.direction[i] - d * x[i]);
        }
      },
      shape);
  return g;
}

/// Checks parameters and compatibility with the grid (axisymmetric grids need shapes
/// symmetric about e_n). Throws ConfigError.
inline void validate_shape(const InitialShape& shape, const SphericalGrid& grid) {
  const int n = grid.dim_n();
  const bool axi = !grid.is_full();
  auto off_axis = [&](const std::vector<double>& v) {
    for (int i = 0; i + 1 < n; ++i)
      if (v[i] != 0.0) return true;
    return false;
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (!(s.r > 0)) throw ConfigError("init.r must be positive");
        } else if constexpr (std::is_same_v<T, TranslatedBall>) {
          if (!(s.r > 0)) throw ConfigError("init.r must be positive");
          if (static_cast<int>(s.center.size()) != n) throw ConfigError("init.center: expected n components");
          if (!(std::sqrt(detail::dot(s.center, s.center)) < s.r))
            throw ConfigError("init.center: the origin must lie inside the ball");
          if (axi && off_axis(s.center)) throw ConfigError("init.center must lie on the e_n axis for axisymmetric grids");
        } else if constexpr (std::is_same_v<T, EllipsoidSupport>) {
          if (static_cast<int>(s.axes.size()) != n) throw ConfigError("init.axes: expected n components");
          for (double a : s.axes)
            if (!(a > 0)) throw ConfigError("init.axes must be positive");
          if (axi)
            for (int i = 1; i + 1 < n; ++i)
              if (s.axes[i] != s.axes[0])
                throw ConfigError("init.axes: the first n-1 axes must agree for axisymmetric grids");
        } else {
          if (!(s.r > 0)) throw ConfigError("init.r must be positive");
          if (static_cast<int>(s.direction.size()) != n) throw ConfigError("init.direction: expected n components");
          if (std::abs(std::sqrt(detail::dot(s.direction, s.direction)) - 1.0) > 1e-12)
            throw ConfigError("init.direction must be a unit vector");
          if (!(s.epsilon > -0.5 * s.r && s.epsilon < s.r))
            throw ConfigError("init.epsilon: need -r/2 < epsilon < r for a convex body");
          if (axi && off_axis(s.direction)) throw ConfigError("init.direction must be +-e_n for axisymmetric grids");
        }
      },
      shape);
}

struct InitialData {
  ScalarField h;
  TangentField exact_gradient;  // closed-form frame gradient at the nodes
};

/// Samples a closed-form support function; rejects non-convex data.
inline InitialData sample_initial(const InitialShape& shape, const GridPtr& grid) {
  validate_shape(shape, *grid);
  const std::size_t nn = grid->node_count();
  std::vector<double> h(nn);
  TangentField g;
  g.e1.resize(nn);
  if (grid->is_full()) g.e2.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const auto x = grid->unit_vector(i);
    h[i] = support_value(shape, x);
    const auto gv = support_gradient(shape, x);
    if (grid->is_full()) {
      const auto [et, ep] = grid->frame(i);
      g.e1[i] = gv[0] * et[0] + gv[1] * et[1] + gv[2] * et[2];
      g.e2[i] = gv[0] * ep[0] + gv[1] * ep[1] + gv[2] * ep[2];
    } else {
      const int r = grid->row_of(i);
      g.e1[i] = gv[0] * grid->cos_theta(r) - gv[grid->dim_n() - 1] * grid->sin_theta(r);
    }
  }
  InitialData out{ScalarField(grid, std::move(h)), std::move(g)};
  ParamSet probe;
  probe.n = grid->dim_n();
  probe.k = 1;
  const CurvatureData cd = curvature_pipeline(out.h, probe);
  if (!(cd.min_margin > 0.0))
    throw ConfigError("initial data is not convex on this grid (min principal radius " +
                      std::to_string(cd.min_margin) + ")");
  return out;
}

}  // namespace cmflow
