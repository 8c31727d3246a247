#pragma once

#include "cmflow/config.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/flow.hpp"
#include "cmflow/geometry.hpp"
#include "cmflow/grid.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cmflow {

inline constexpr const char* kDiagnosticsHeader =
    "step,t,dt,h_min,h_max,eta,J,Fh_min,Fh_max,residual,convexity_margin,kappa_max,"
    "mv_lower_slack,mv_upper_slack,J_drift";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string diagnostics_row(const DiagnosticsRecord& r) {
  std::string s = std::to_string(r.step);
  for (double v : {r.t, r.dt, r.h_min, r.h_max, r.eta, r.J, r.Fh_min, r.Fh_max, r.residual,
                   r.convexity_margin, r.kappa_max, r.mv_lower_slack, r.mv_upper_slack, r.J_drift}) {
    s += ',';
    s += format_double(v);
  }
  return s;
}

/// Streams diagnostics rows, one per accepted step.
class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open diagnostics file '" + path + "' for writing");
    out_ << kDiagnosticsHeader << '\n';
  }

  void write(const DiagnosticsRecord& r) {
    out_ << diagnostics_row(r) << '\n';
    if (!out_) throw Error("write failed on '" + path_ + "'");
  }

  void flush() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

inline void write_diagnostics(const std::string& path, const std::vector<DiagnosticsRecord>& records) {
  DiagnosticsWriter w(path);
  for (const auto& r : records) w.write(r);
  w.flush();
}

/// Parses a diagnostics CSV back into records (contract columns only).
inline std::vector<DiagnosticsRecord> read_diagnostics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line != kDiagnosticsHeader) throw Error("'" + path + "': unexpected diagnostics header");
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 15) throw Error("'" + path + "': malformed row");
    DiagnosticsRecord r;
    r.step = std::stol(cells[0]);
    double* fields[] = {&r.t, &r.dt, &r.h_min, &r.h_max, &r.eta, &r.J, &r.Fh_min, &r.Fh_max,
                        &r.residual, &r.convexity_margin, &r.kappa_max, &r.mv_lower_slack,
                        &r.mv_upper_slack, &r.J_drift};
    for (int i = 0; i < 14; ++i) *fields[i] = std::strtod(cells[i + 1].c_str(), nullptr);
    out.push_back(r);
  }
  return out;
}

/// A saved support (or f) field: grid descriptor plus nodal values.
struct StateFile {
  GridDescriptor grid;
  double t = 0.0;
  std::vector<double> values;
};

inline std::string serialize_state(const StateFile& s) {
  nlohmann::json j;
  j["format"] = "cmflow-state";
  j["version"] = 1;
  j["grid"] = {{"kind", to_string(s.grid.kind)},
               {"dim_n", s.grid.dim_n},
               {"n_theta", s.grid.n_theta},
               {"n_phi", s.grid.n_phi}};
  j["t"] = s.t;
  j["values"] = s.values;
  return j.dump() + "\n";
}

inline StateFile parse_state(const std::string& text) {
  const nlohmann::json root = detail::parse_json(text);
  detail::Reader r(root, "");
  StateFile s;
  if (r.string("format") != "cmflow-state") throw ConfigError("state file: unknown format");
  if (r.integer("version") != 1) throw ConfigError("state file: unsupported version");
  auto g = r.object("grid");
  const std::string kind = g.string("kind");
  if (kind == "full_s2") s.grid.kind = GridKind::FullS2;
  else if (kind == "axisymmetric") s.grid.kind = GridKind::Axisymmetric;
  else throw ConfigError("state file: bad grid.kind");
  s.grid.dim_n = static_cast<int>(g.integer("dim_n"));
  s.grid.n_theta = static_cast<int>(g.integer("n_theta"));
  s.grid.n_phi = static_cast<int>(g.integer("n_phi"));
  g.finish();
  s.t = r.number("t", 0.0);
  s.values = r.numbers("values");
  r.finish();
  const std::size_t expect = static_cast<std::size_t>(s.grid.n_theta) * s.grid.n_phi;
  if (s.values.size() != expect)
    throw ConfigError("state file: " + std::to_string(s.values.size()) + " values for " +
                      std::to_string(expect) + " nodes");
  return s;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write failed on '" + path + "'");
}

inline StateFile load_state(const std::string& path) {
  try {
    return parse_state(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline StateFile to_state_file(const ScalarField& h, double t = 0.0) {
  return {h.grid()->descriptor(), t, {h.values().begin(), h.values().end()}};
}

/// Grid for a state file (rebuilt from its descriptor).
inline std::pair<GridPtr, QuadratureRule> build_grid(const GridDescriptor& d) {
  return build_grid(d.kind, Resolution{d.n_theta, d.kind == GridKind::FullS2 ? d.n_phi : 0}, d.dim_n);
}

/// Wavefront OBJ of the embedded surface on a FullS2 grid. Vertices are the node
/// embeddings, row-major (theta outer, phi inner), followed by the two cap points (mean
/// of the first and last rows); faces are the lattice quads plus triangle fans at the caps.
inline std::string mesh_obj(const ScalarField& h, const PointCloud& X) {
  const SphericalGrid& g = *h.grid();
  if (!g.is_full())
    throw Error("mesh export needs a full_s2 grid; use the profile CSV for axisymmetric grids");
  const int nt = g.n_theta();
  const int np = g.n_phi();
  std::string out = "# cmflow surface: " + std::to_string(nt) + "x" + std::to_string(np) + "\n";
  auto vertex = [&](const double* p) {
    out += "v " + format_double(p[0]) + " " + format_double(p[1]) + " " + format_double(p[2]) + "\n";
  };
  for (std::size_t i = 0; i < g.node_count(); ++i) vertex(X[i].data());
  for (int row : {0, nt - 1}) {
    double c[3] = {0, 0, 0};
    for (int j = 0; j < np; ++j)
      for (int d = 0; d < 3; ++d) c[d] += X[g.node(row, j)][d] / np;
    vertex(c);
  }
  auto id = [&](int r, int j) { return std::to_string(g.node(r, j % np) + 1); };
  for (int r = 0; r + 1 < nt; ++r)
    for (int j = 0; j < np; ++j)
      out += "f " + id(r, j) + " " + id(r + 1, j) + " " + id(r + 1, j + 1) + " " + id(r, j + 1) + "\n";
  const std::string north = std::to_string(g.node_count() + 1);
  const std::string south = std::to_string(g.node_count() + 2);
  for (int j = 0; j < np; ++j) {
    out += "f " + north + " " + id(0, j) + " " + id(0, j + 1) + "\n";
    out += "f " + south + " " + id(nt - 1, j + 1) + " " + id(nt - 1, j) + "\n";
  }
  return out;
}

inline std::string export_mesh(const ScalarField& h) { return mesh_obj(h, embed(h)); }

/// Profile curve of an axisymmetric body: theta,h,lambda_meridian,lambda_transverse,rho.
inline std::string profile_csv(const ScalarField& h) {
  const SphericalGrid& g = *h.grid();
  if (g.is_full()) throw Error("profile export needs an axisymmetric grid");
  ParamSet probe;
  probe.n = g.dim_n();
  probe.k = 1;
  const CurvatureData cd = curvature_pipeline(h, probe);
  std::string out = "theta,h,lambda_meridian,lambda_transverse,rho\n";
  for (int i = 0; i < g.n_theta(); ++i)
    out += format_double(g.theta()[i]) + "," + format_double(h[i]) + "," +
           format_double(cd.radius_a[i]) + "," + format_double(cd.radius_b[i]) + "," +
           format_double(cd.rho[i]) + "\n";
  return out;
}

}  // namespace cmflow
