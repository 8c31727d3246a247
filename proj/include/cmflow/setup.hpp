#pragma once

#include "cmflow/anisotropy.hpp"
#include "cmflow/config.hpp"
#include "cmflow/geometry.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/initial_data.hpp"
#include "cmflow/io.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace cmflow {

/// Everything a run needs, assembled from a RunConfig.
struct Problem {
  RunConfig config;
  GridPtr grid;
  QuadratureRule rule;
  AnisotropySpec f_spec;
  ScalarField f;
  ScalarField h0;
  std::optional<double> rescale_lambda;
};

inline std::pair<GridPtr, QuadratureRule> build_grid(const RunConfig& c) {
  return build_grid(c.grid.kind, Resolution{c.grid.n_theta, c.grid.n_phi}, c.params.n);
}

/// Relative paths inside a config resolve against the config file's directory.
inline std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).string();
}

inline AnisotropySpec make_f_spec(const RunConfig& c, const std::string& base_dir = "") {
  return std::visit(
      [&](const auto& k) -> AnisotropySpec {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TabulatedRef>) {
          const StateFile s = load_state(resolve_path(k.state_file, base_dir));
          if (s.grid.dim_n != c.params.n) throw ConfigError("f.state_file: grid dimension differs from params.n");
          auto [g, rule] = build_grid(s.grid);
          return AnisotropySpec(TabulatedF{ScalarField(g, s.values)}, c.params.n);
        } else {
          return AnisotropySpec(k, c.params.n);
        }
      },
      c.f);
}

/// Grid, f and initial data for a config; applies the positivity rescale when requested.
inline Problem make_problem(const RunConfig& c, const std::string& base_dir = "") {
  auto [grid, rule] = build_grid(c);
  AnisotropySpec spec = make_f_spec(c, base_dir);
  if (!grid->is_full() && !spec.is_axisymmetric())
    throw ConfigError("f: an axisymmetric grid needs f depending on x_n only");
  ScalarField f = eval_f(spec, grid);
  ScalarField h0 = sample_initial(c.init.shape, grid).h;
  std::optional<double> lambda;
  if (c.init.rescale_delta) {
    Rescaled r = rescale_for_positivity(h0, f, c.params, *c.init.rescale_delta);
    lambda = r.lambda;
    h0 = std::move(r.h);
  }
  return Problem{c, grid, rule, std::move(spec), std::move(f), std::move(h0), lambda};
}

/// Loads a saved field and checks it lives on the config's grid.
inline ScalarField load_field(const std::string& path, const GridPtr& grid) {
  const StateFile s = load_state(path);
  if (!(s.grid == grid->descriptor()))
    throw GridMismatch(path + ": state grid differs from the configured grid");
  return ScalarField(grid, s.values);
}

}  // namespace cmflow
