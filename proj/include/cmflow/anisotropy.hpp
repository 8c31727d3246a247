#pragma once

#include "cmflow/errors.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/interpolation.hpp"
#include "cmflow/params.hpp"
#include "cmflow/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace cmflow {

struct ConstantF {
  double value = 1.0;
  bool operator==(const ConstantF&) const = default;
};

/// f = sum_m a_m cos(m theta), theta the colatitude; a polynomial in x_n.
struct AxisymCosinePoly {
  std::vector<double> coefficients;
  bool operator==(const AxisymCosinePoly&) const = default;
};

/// f = base + epsilon <direction, x> with a unit direction.
struct LinearHarmonic {
  double base = 1.0;
  double epsilon = 0.0;
  std::vector<double> direction;
  bool operator==(const LinearHarmonic&) const = default;
};

/// Nodal values on a grid, interpolated off-grid.
struct TabulatedF {
  ScalarField field;
};

/// The prescribed positive function f on S^{n-1}.
class AnisotropySpec {
 public:
  using Kind = std::variant<ConstantF, AxisymCosinePoly, LinearHarmonic, TabulatedF>;

  AnisotropySpec(Kind kind, int dim_n) : kind_(std::move(kind)), dim_n_(dim_n) {
    if (dim_n_ < 3) throw ConfigError("f: dimension must be >= 3");
    if (auto* lh = std::get_if<LinearHarmonic>(&kind_)) {
      if (static_cast<int>(lh->direction.size()) != dim_n_)
        throw ConfigError("f.direction: expected " + std::to_string(dim_n_) + " components");
      double nrm = 0.0;
      for (double c : lh->direction) nrm += c * c;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0)) throw ConfigError("f.direction: must be non-zero");
      for (double& c : lh->direction) c /= nrm;
    }
    if (auto* cp = std::get_if<AxisymCosinePoly>(&kind_)) {
      if (cp->coefficients.empty()) throw ConfigError("f.coefficients: must be non-empty");
    }
    if (auto* tab = std::get_if<TabulatedF>(&kind_)) {
      if (!tab->field.grid()) throw ConfigError("f: tabulated field has no grid");
      if (tab->field.grid()->dim_n() != dim_n_)
        throw ConfigError("f: tabulated grid dimension differs from n");
      interp_ = std::make_shared<FieldInterpolator>(tab->field);
    }
    floor_ = compute_floor();
    if (!(floor_ > 0.0))
      throw ConfigError("f must be positive on the sphere (minimum " + std::to_string(floor_) + ")");
  }

  const Kind& kind() const { return kind_; }
  int dim_n() const { return dim_n_; }
  double floor() const { return floor_; }
  bool is_tabulated() const { return std::holds_alternative<TabulatedF>(kind_); }

  /// True when f depends on x_n only.
  bool is_axisymmetric() const {
    if (std::holds_alternative<ConstantF>(kind_) || std::holds_alternative<AxisymCosinePoly>(kind_))
      return true;
    if (auto* lh = std::get_if<LinearHarmonic>(&kind_)) {
      for (int i = 0; i + 1 < dim_n_; ++i)
        if (lh->direction[i] != 0.0) return false;
      return true;
    }
    return !std::get<TabulatedF>(kind_).field.grid()->is_full();
  }

  double operator()(std::span<const double> x) const {
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, ConstantF>) {
            return k.value;
          } else if constexpr (std::is_same_v<T, AxisymCosinePoly>) {
            return cosine_poly(k.coefficients, x[dim_n_ - 1]);
          } else if constexpr (std::is_same_v<T, LinearHarmonic>) {
            double d = 0.0;
            for (int i = 0; i < dim_n_; ++i) d += k.direction[i] * x[i];
            return k.base + k.epsilon * d;
          } else {
            return (*interp_)(x);
          }
        },
        kind_);
  }

  /// sum a_m T_m(z), with T_m the Chebyshev polynomials (cos(m theta) = T_m(cos theta)).
  static double cosine_poly(const std::vector<double>& a, double z) {
    double t0 = 1.0;
    double t1 = z;
    double s = a[0];
    for (std::size_t m = 1; m < a.size(); ++m) {
      s += a[m] * t1;
      const double t2 = 2.0 * z * t1 - t0;
      t0 = t1;
      t1 = t2;
    }
    return s;
  }

 private:
  double compute_floor() const {
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, ConstantF>) {
            return k.value;
          } else if constexpr (std::is_same_v<T, AxisymCosinePoly>) {
            // Dense scan in theta, then golden-section refinement around the best sample.
            auto fth = [&](double th) { return cosine_poly(k.coefficients, std::cos(th)); };
            const int ns = 8192;
            int best = 0;
            double fb = fth(0.0);
            for (int i = 1; i <= ns; ++i) {
              const double v = fth(std::numbers::pi * i / ns);
              if (v < fb) {
                fb = v;
                best = i;
              }
            }
            double lo = std::numbers::pi * std::max(best - 1, 0) / ns;
            double hi = std::numbers::pi * std::min(best + 1, ns) / ns;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            for (int it = 0; it < 80; ++it) {
              const double a = hi - gr * (hi - lo);
              const double b = lo + gr * (hi - lo);
              (fth(a) < fth(b) ? hi : lo) = (fth(a) < fth(b) ? b : a);
            }
            return std::min(fb, fth(0.5 * (lo + hi)));
          } else if constexpr (std::is_same_v<T, LinearHarmonic>) {
            return k.base - std::abs(k.epsilon);
          } else {
            return k.field.min();
          }
        },
        kind_);
  }

  Kind kind_;
  int dim_n_;
  double floor_ = 0.0;
  std::shared_ptr<const FieldInterpolator> interp_;
};

/// Nodal values of f on a grid.
inline ScalarField eval_f(const AnisotropySpec& spec, const GridPtr& grid) {
  if (grid->dim_n() != spec.dim_n()) throw GridMismatch("eval_f: grid dimension differs from f");
  if (grid->kind() == GridKind::Axisymmetric && !spec.is_axisymmetric())
    throw ConfigError("f is not axisymmetric about e_n; use a full_s2 grid");
  ScalarField out;
  if (const auto* tab = std::get_if<TabulatedF>(&spec.kind());
      tab != nullptr && tab->field.grid()->descriptor() == grid->descriptor()) {
    out = ScalarField(grid, std::vector<double>(tab->field.values().begin(), tab->field.values().end()));
  } else {
    out = ScalarField::from_function(grid, [&](const std::vector<double>& x) { return spec(x); });
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] > 0.0)) throw NonPositiveError("f must be positive", i);
  return out;
}

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "fail";
}

/// Result of auditing condition (A) on a finite family of great circles. This is a
/// sampled certificate, not a proof over every circle.
struct ConditionAReport {
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> circle_u, circle_v;  // argmin circle: x(s) = cos s u + sin s v
  double arc_position = 0.0;               // s at the argmin
  std::vector<double> point;               // x(s) at the argmin
  int circles = 0;
  int samples_per_circle = 0;
  long samples = 0;
  double constant_term = 0.0;      // p + k - 1 - q + n
  double fs2_coefficient = 0.0;    // (k + (q-n)/(q-n-k-1) + (p-2)/(p+k-1)) / (k+1)
  double interpolation_error = 0.0;  // tabulated f only
  bool pass = false;
  Verdict verdict = Verdict::Fail;

  int exit_code() const {
    return verdict == Verdict::Pass ? 0 : verdict == Verdict::Fail ? 1 : 2;
  }
};

namespace detail {

inline std::vector<std::array<double, 3>> icosahedral_axes(int level) {
  const double t = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<std::array<double, 3>> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  auto normalize = [](std::array<double, 3> a) {
    const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    return std::array<double, 3>{a[0] / n, a[1] / n, a[2] / n};
  };
  for (auto& p : v) p = normalize(p);
  for (int l = 0; l < level; ++l) {
    std::vector<std::array<int, 3>> next;
    std::vector<std::pair<std::pair<int, int>, int>> cache;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      for (const auto& [k, idx] : cache)
        if (k == std::pair<int, int>(key.first, key.second)) return idx;
      v.push_back(normalize({v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]}));
      const int idx = static_cast<int>(v.size()) - 1;
      cache.push_back({{key.first, key.second}, idx});
      return idx;
    };
    for (const auto& f : faces) {
      const int a = mid(f[0], f[1]);
      const int b = mid(f[1], f[2]);
      const int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  // One axis per antipodal pair.
  std::vector<std::array<double, 3>> axes;
  for (const auto& p : v) {
    bool dup = false;
    for (const auto& q : axes)
      if (std::abs(p[0] + q[0]) + std::abs(p[1] + q[1]) + std::abs(p[2] + q[2]) < 1e-9) dup = true;
    if (!dup) axes.push_back(p);
  }
  return axes;
}

struct Circle {
  std::vector<double> u, v;
};

inline Circle circle_from_axis(const std::array<double, 3>& axis) {
  const auto [u, v] = circle_basis(axis);
  return {{u.begin(), u.end()}, {v.begin(), v.end()}};
}

inline constexpr std::uint64_t kCircleSeed = 0x5eed0a11c1c1e5ULL;

/// Quasi-uniform family of great circles plus the circles the symmetry of f singles out.
inline std::vector<Circle> circle_family(const AnisotropySpec& spec, int circles) {
  const int n = spec.dim_n();
  std::vector<Circle> out;
  std::mt19937_64 rng(kCircleSeed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (spec.is_axisymmetric()) {
    Circle meridian{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    meridian.u[n - 1] = 1.0;
    meridian.v[0] = 1.0;
    out.push_back(std::move(meridian));
  }
  if (const auto* lh = std::get_if<LinearHarmonic>(&spec.kind())) {
    // A circle through +-direction.
    Circle c{lh->direction, std::vector<double>(n, 0.0)};
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(c.u[i]) < std::abs(c.u[best])) best = i;
    c.v[best] = 1.0;
    const double d = c.u[best];
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) {
      c.v[i] -= d * c.u[i];
      nrm += c.v[i] * c.v[i];
    }
    for (double& x : c.v) x /= std::sqrt(nrm);
    out.push_back(std::move(c));
  }

  const std::size_t target = out.size() + circles;
  if (n == 3) {
    int level = 0;
    while (static_cast<int>(icosahedral_axes(level + 1).size()) <= circles) ++level;
    for (const auto& a : icosahedral_axes(level)) out.push_back(circle_from_axis(a));
    while (out.size() < target) {
      std::array<double, 3> a{gauss(rng), gauss(rng), gauss(rng)};
      const double nrm = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
      for (double& c : a) c /= nrm;
      out.push_back(circle_from_axis(a));
    }
  } else {
    // Coordinate planes first, then seeded random orthonormal pairs.
    for (int i = 0; i < n && out.size() < target; ++i)
      for (int j = i + 1; j < n && out.size() < target; ++j) {
        Circle c{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
        c.u[i] = 1.0;
        c.v[j] = 1.0;
        out.push_back(std::move(c));
      }
    while (out.size() < target) {
      Circle c{std::vector<double>(n), std::vector<double>(n)};
      for (int i = 0; i < n; ++i) {
        c.u[i] = gauss(rng);
        c.v[i] = gauss(rng);
      }
      double nu = 0.0;
      for (double x : c.u) nu += x * x;
      for (double& x : c.u) x /= std::sqrt(nu);
      double d = 0.0;
      for (int i = 0; i < n; ++i) d += c.u[i] * c.v[i];
      double nv = 0.0;
      for (int i = 0; i < n; ++i) {
        c.v[i] -= d * c.u[i];
        nv += c.v[i] * c.v[i];
      }
      for (double& x : c.v) x /= std::sqrt(nv);
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline ConditionAReport evaluate_condition_a(const AnisotropySpec& spec, const ParamSet& params,
                                             const std::vector<Circle>& family, int m) {
  ConditionAReport rep;
  rep.samples_per_circle = m;
  rep.circles = static_cast<int>(family.size());
  rep.constant_term = params.condition_a_constant();
  rep.fs2_coefficient = params.condition_a_fs2_coefficient();

  const int nc = rep.circles;
  std::vector<double> vals(static_cast<std::size_t>(nc) * m);
  for (int c = 0; c < nc; ++c) {
    const auto row = sample_circle(spec, family[c].u, family[c].v, m);
    std::copy(row.begin(), row.end(), vals.begin() + static_cast<std::ptrdiff_t>(c) * m);
  }
  std::vector<double> fs(vals.size());
  std::vector<double> fss(vals.size());
  PeriodicDifferentiator diff(m, nc);
  diff.differentiate(vals, fs, fss);

  int best_c = 0;
  int best_j = 0;
  for (int c = 0; c < nc; ++c)
    for (int j = 0; j < m; ++j) {
      const std::size_t i = static_cast<std::size_t>(c) * m + j;
      const double f = vals[i];
      const double e = fss[i] - rep.fs2_coefficient * fs[i] * fs[i] / f + rep.constant_term * f;
      if (e < rep.min_margin) {
        rep.min_margin = e;
        best_c = c;
        best_j = j;
      }
    }
  rep.samples = static_cast<long>(nc) * m;
  rep.circle_u = family[best_c].u;
  rep.circle_v = family[best_c].v;
  rep.arc_position = 2.0 * std::numbers::pi * best_j / m;
  rep.point.resize(rep.circle_u.size());
  for (std::size_t i = 0; i < rep.point.size(); ++i)
    rep.point[i] = std::cos(rep.arc_position) * rep.circle_u[i] +
                   std::sin(rep.arc_position) * rep.circle_v[i];
  rep.pass = rep.min_margin > 0.0;
  rep.verdict = rep.pass ? Verdict::Pass : Verdict::Fail;
  return rep;
}

}  // namespace detail

/// Audits condition (A),
///   f_ss - C f_s^2 / f + (p+k-1-q+n) f > 0,  C = (k + (q-n)/(q-n-k-1) + (p-2)/(p+k-1)) / (k+1),
/// on a sampled family of great circles, with f_s and f_ss by spectral differentiation.
///
/// Tabulated f is interpolated; the margin is recomputed with twice the samples per
/// circle and the change is taken as the error estimate. A margin within ten times that
/// estimate of zero is reported as inconclusive.
inline ConditionAReport condition_A_margin(const AnisotropySpec& spec, const ParamSet& params,
                                           int circles, int samples_per_circle) {
  if (params.n != spec.dim_n()) throw ConfigError("condition (A): f dimension differs from n");
  const RegimeReport reg = params.regime();
  if (reg.regime != Regime::TheoremWindow)
    throw ConfigError("condition (A) requires parameters with k+1 < q-n < p-k-1");
  if (circles < 64) throw ConfigError("condition (A): at least 64 circles required");
  if (samples_per_circle < 128 || samples_per_circle % 2 != 0)
    throw ConfigError("condition (A): samples_per_circle must be even and >= 128");

  const auto family = detail::circle_family(spec, circles);
  ConditionAReport rep = detail::evaluate_condition_a(spec, params, family, samples_per_circle);
  if (spec.is_tabulated()) {
    const ConditionAReport fine =
        detail::evaluate_condition_a(spec, params, family, 2 * samples_per_circle);
    rep.interpolation_error = std::abs(fine.min_margin - rep.min_margin);
    if (std::abs(rep.min_margin) <= 10.0 * rep.interpolation_error)
      rep.verdict = Verdict::Inconclusive;
  }
  return rep;
}

inline std::string to_text(const ConditionAReport& r) {
  std::ostringstream os;
  os.precision(12);
  auto vec = [&](const std::vector<double>& v) {
    os << "(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ")";
  };
  os << "condition (A) audit (sampled great-circle family, non-exhaustive)\n";
  os << "  verdict:             " << to_string(r.verdict) << "\n";
  os << "  min margin:          " << r.min_margin << "\n";
  os << "  argmin point:        ";
  vec(r.point);
  os << "\n  argmin circle u:     ";
  vec(r.circle_u);
  os << "\n  argmin circle v:     ";
  vec(r.circle_v);
  os << "\n  arc position s:      " << r.arc_position << "\n";
  os << "  circles:             " << r.circles << "\n";
  os << "  samples per circle:  " << r.samples_per_circle << "\n";
  os << "  total samples:       " << r.samples << "\n";
  os << "  constant term:       " << r.constant_term << "\n";
  os << "  f_s^2 coefficient:   " << r.fs2_coefficient << "\n";
  if (r.interpolation_error > 0.0)
    os << "  interpolation error: " << r.interpolation_error << "\n";
  return os.str();
}

}  // namespace cmflow
