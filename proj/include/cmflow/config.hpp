#pragma once

#include "cmflow/anisotropy.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/flow.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/initial_data.hpp"
#include "cmflow/params.hpp"

#include "json.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace cmflow {

struct GridConfig {
  GridKind kind = GridKind::FullS2;
  int n_theta = 64;
  int n_phi = 128;  // 1 for axisymmetric grids
  bool operator==(const GridConfig&) const = default;
};

/// f tabulated in a state file on the run grid.
struct TabulatedRef {
  std::string state_file;
  bool operator==(const TabulatedRef&) const = default;
};

using FConfig = std::variant<ConstantF, AxisymCosinePoly, LinearHarmonic, TabulatedRef>;

struct InitConfig {
  InitialShape shape = Sphere{1.0};
  std::optional<double> rescale_delta;  // apply rescale_for_positivity with this delta
  bool operator==(const InitConfig&) const = default;
};

struct OutputConfig {
  std::string csv_path = "diagnostics.csv";
  std::optional<std::string> mesh_path;
  std::optional<long> snapshot_every;
  std::string report_path = "report.json";
  std::optional<std::string> state_path;
  bool operator==(const OutputConfig&) const = default;
};

struct CheckFConfig {
  int circles = 96;
  int samples_per_circle = 256;
  bool operator==(const CheckFConfig&) const = default;
};

struct RunConfig {
  ParamSet params;
  GridConfig grid;
  FConfig f = ConstantF{1.0};
  InitConfig init;
  StepControl control;
  OutputConfig outputs;
  CheckFConfig check_f;
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using json = nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + name() + "' must be an object");
  }

  std::string name() const { return path_.empty() ? "<root>" : path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError("missing field '" + child(key) + "'");
    return j_.at(key);
  }

  Reader object(const std::string& key) { return Reader(at(key), child(key)); }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError("field '" + child(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key) {
    const json& v = at(key);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long>(d);
    }
    throw ConfigError("field '" + child(key) + "' must be an integer");
  }
  long integer(const std::string& key, long fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError("field '" + child(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError("field '" + child(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("field '" + child(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + child(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    throw ConfigError("parse error: " + msg, line, col);
  }
}

}  // namespace detail

/// Parses the JSON run configuration. With `check_regime`, invalid exponents and
/// fixed_one outside k+1 < q-n < p-k-1 are rejected.
inline RunConfig parse_config(const std::string& text, bool check_regime = true) {
  const detail::json root = detail::parse_json(text);
  detail::Reader r(root, "");
  RunConfig c;

  {
    auto p = r.object("params");
    c.params.n = static_cast<int>(p.integer("n"));
    c.params.k = static_cast<int>(p.integer("k"));
    c.params.p = p.number("p");
    c.params.q = p.number("q");
    const std::string mode = p.has("eta_mode") ? p.string("eta_mode") : "normalized";
    if (mode == "normalized") c.params.eta_mode = EtaMode::Normalized;
    else if (mode == "fixed_one") c.params.eta_mode = EtaMode::FixedOne;
    else throw ConfigError("field 'params.eta_mode' must be 'normalized' or 'fixed_one'");
    c.params.c_target = p.number("c_target", 1.0);
    if (!(c.params.c_target > 0.0)) throw ConfigError("field 'params.c_target' must be positive");
    p.finish();
  }
  if (check_regime) {
    const RegimeReport reg = c.params.regime();
    if (!reg.valid()) throw ConfigError("params: " + reg.reason);
    if (c.params.eta_mode == EtaMode::FixedOne && reg.regime != Regime::TheoremWindow)
      throw ConfigError(
          "params: eta_mode fixed_one requires the long-time existence window k+1 < q-n < p-k-1");
  }

  {
    auto g = r.object("grid");
    const std::string kind = g.string("kind");
    if (kind == "full_s2") c.grid.kind = GridKind::FullS2;
    else if (kind == "axisymmetric") c.grid.kind = GridKind::Axisymmetric;
    else throw ConfigError("field 'grid.kind' must be 'full_s2' or 'axisymmetric'");
    c.grid.n_theta = static_cast<int>(g.integer("n_theta", 64));
    if (c.grid.kind == GridKind::FullS2) {
      c.grid.n_phi = static_cast<int>(g.integer("n_phi", 128));
      if (c.params.n != 3) throw ConfigError("field 'grid.kind': full_s2 requires params.n = 3");
    } else if (g.has("n_phi")) {
      throw ConfigError("field 'grid.n_phi' only applies to full_s2 grids");
    } else {
      c.grid.n_phi = 1;
    }
    if (c.grid.n_theta < 8) throw ConfigError("field 'grid.n_theta' must be >= 8");
    if (c.grid.kind == GridKind::FullS2 && (c.grid.n_phi < 8 || c.grid.n_phi % 2 != 0))
      throw ConfigError("field 'grid.n_phi' must be even and >= 8");
    g.finish();
  }

  {
    auto f = r.object("f");
    const std::string kind = f.string("kind");
    if (kind == "constant") {
      c.f = ConstantF{f.number("value")};
    } else if (kind == "axisym_cosine_poly") {
      c.f = AxisymCosinePoly{f.numbers("coefficients")};
    } else if (kind == "linear_harmonic") {
      c.f = LinearHarmonic{f.number("base"), f.number("epsilon"), f.numbers("direction")};
    } else if (kind == "tabulated") {
      c.f = TabulatedRef{f.string("state_file")};
    } else {
      throw ConfigError("field 'f.kind' must be one of constant, axisym_cosine_poly, "
                        "linear_harmonic, tabulated");
    }
    f.finish();
  }

  {
    auto in = r.object("init");
    const std::string kind = in.string("kind");
    if (kind == "sphere") c.init.shape = Sphere{in.number("r")};
    else if (kind == "translated_ball") c.init.shape = TranslatedBall{in.number("r"), in.numbers("center")};
    else if (kind == "ellipsoid") c.init.shape = EllipsoidSupport{in.numbers("axes")};
    else if (kind == "perturbed_sphere")
      c.init.shape = PerturbedSphere{in.number("r"), in.number("epsilon"), in.numbers("direction")};
    else
      throw ConfigError("field 'init.kind' must be one of sphere, translated_ball, ellipsoid, "
                        "perturbed_sphere");
    if (in.has("rescale_delta")) {
      c.init.rescale_delta = in.number("rescale_delta");
      if (!(*c.init.rescale_delta > 0.0)) throw ConfigError("field 'init.rescale_delta' must be positive");
    }
    in.finish();
  }

  if (r.has("control")) {
    auto k = r.object("control");
    StepControl& s = c.control;
    s.dt_safety = k.number("dt_safety", s.dt_safety);
    s.dt_min = k.number("dt_min", s.dt_min);
    s.dt_max = k.number("dt_max", s.dt_max);
    s.t_max = k.number("t_max", s.t_max);
    s.max_steps = k.integer("max_steps", s.max_steps);
    s.tol_res = k.number("tol_res", s.tol_res);
    s.tol_invariant = k.number("tol_invariant", s.tol_invariant);
    s.max_stages = static_cast<int>(k.integer("max_stages", s.max_stages));
    s.stage_damping = k.number("stage_damping", s.stage_damping);
    k.finish();
  }
  c.control.validate();

  if (r.has("outputs")) {
    auto o = r.object("outputs");
    if (o.has("csv_path")) c.outputs.csv_path = o.string("csv_path");
    if (o.has("mesh_path")) c.outputs.mesh_path = o.string("mesh_path");
    if (o.has("snapshot_every")) {
      c.outputs.snapshot_every = o.integer("snapshot_every");
      if (*c.outputs.snapshot_every < 1) throw ConfigError("field 'outputs.snapshot_every' must be >= 1");
    }
    if (o.has("report_path")) c.outputs.report_path = o.string("report_path");
    if (o.has("state_path")) c.outputs.state_path = o.string("state_path");
    o.finish();
  }

  if (r.has("check_f")) {
    auto cf = r.object("check_f");
    c.check_f.circles = static_cast<int>(cf.integer("circles", c.check_f.circles));
    c.check_f.samples_per_circle =
        static_cast<int>(cf.integer("samples_per_circle", c.check_f.samples_per_circle));
    cf.finish();
  }
  r.finish();
  return c;
}

/// Canonical JSON form with every default written out.
inline std::string serialize_config(const RunConfig& c) {
  using detail::json;
  json j;
  j["params"] = {{"n", c.params.n},
                 {"k", c.params.k},
                 {"p", c.params.p},
                 {"q", c.params.q},
                 {"eta_mode", to_string(c.params.eta_mode)},
                 {"c_target", c.params.c_target}};
  j["grid"] = {{"kind", to_string(c.grid.kind)}, {"n_theta", c.grid.n_theta}};
  if (c.grid.kind == GridKind::FullS2) j["grid"]["n_phi"] = c.grid.n_phi;

  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantF>)
          j["f"] = {{"kind", "constant"}, {"value", f.value}};
        else if constexpr (std::is_same_v<T, AxisymCosinePoly>)
          j["f"] = {{"kind", "axisym_cosine_poly"}, {"coefficients", f.coefficients}};
        else if constexpr (std::is_same_v<T, LinearHarmonic>)
          j["f"] = {{"kind", "linear_harmonic"}, {"base", f.base}, {"epsilon", f.epsilon}, {"direction", f.direction}};
        else
          j["f"] = {{"kind", "tabulated"}, {"state_file", f.state_file}};
      },
      c.f);

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>)
          j["init"] = {{"kind", "sphere"}, {"r", s.r}};
        else if constexpr (std::is_same_v<T, TranslatedBall>)
          j["init"] = {{"kind", "translated_ball"}, {"r", s.r}, {"center", s.center}};
        else if constexpr (std::is_same_v<T, EllipsoidSupport>)
          j["init"] = {{"kind", "ellipsoid"}, {"axes", s.axes}};
        else
          j["init"] = {{"kind", "perturbed_sphere"}, {"r", s.r}, {"epsilon", s.epsilon}, {"direction", s.direction}};
      },
      c.init.shape);
  if (c.init.rescale_delta) j["init"]["rescale_delta"] = *c.init.rescale_delta;

  const StepControl& s = c.control;
  j["control"] = {{"dt_safety", s.dt_safety}, {"dt_min", s.dt_min},
                  {"dt_max", s.dt_max},       {"t_max", s.t_max},
                  {"max_steps", s.max_steps}, {"tol_res", s.tol_res},
                  {"tol_invariant", s.tol_invariant}, {"max_stages", s.max_stages},
                  {"stage_damping", s.stage_damping}};
  j["outputs"] = {{"csv_path", c.outputs.csv_path}, {"report_path", c.outputs.report_path}};
  if (c.outputs.mesh_path) j["outputs"]["mesh_path"] = *c.outputs.mesh_path;
  if (c.outputs.snapshot_every) j["outputs"]["snapshot_every"] = *c.outputs.snapshot_every;
  if (c.outputs.state_path) j["outputs"]["state_path"] = *c.outputs.state_path;
  j["check_f"] = {{"circles", c.check_f.circles}, {"samples_per_circle", c.check_f.samples_per_circle}};
  return j.dump(2) + "\n";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path, bool check_regime = true) {
  try {
    return parse_config(read_text_file(path), check_regime);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace cmflow
