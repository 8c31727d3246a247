#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace cmflow;

namespace {

const char* kMinimal = R"({
  "params": {"n": 3, "k": 1, "p": 6, "q": 6},
  "grid": {"kind": "full_s2"},
  "f": {"kind": "constant", "value": 1.0},
  "init": {"kind": "sphere", "r": 1.0}
})";

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cmflow_test_" + name)).string();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.params.eta_mode, EtaMode::Normalized);
  EXPECT_EQ(c.params.c_target, 1.0);
  EXPECT_EQ(c.grid.n_theta, 64);
  EXPECT_EQ(c.grid.n_phi, 128);
  EXPECT_EQ(c.control.dt_safety, 0.2);
  EXPECT_EQ(c.control.tol_res, 1e-6);
  EXPECT_EQ(c.control.tol_invariant, 1e-3);
  EXPECT_EQ(c.control.t_max, 100.0);
  EXPECT_EQ(c.control.max_steps, 1000000);
  EXPECT_EQ(c.outputs.csv_path, "diagnostics.csv");
}

TEST(Config, KTooLargeNamesInequality) {
  std::string t = kMinimal;
  t.replace(t.find("\"k\": 1"), 6, "\"k\": 2");
  EXPECT_NE(error_of(t).find("k < n-1 violated"), std::string::npos) << error_of(t);
}

TEST(Config, UnknownKeyIsNamed) {
  std::string t = kMinimal;
  t.replace(t.find("\"kind\": \"full_s2\""), 17, "\"kind\": \"full_s2\", \"n_thta\": 32");
  EXPECT_NE(error_of(t).find("grid.n_thta"), std::string::npos) << error_of(t);
  std::string top = kMinimal;
  top.replace(top.rfind('}'), 1, ", \"extra\": 1}");
  EXPECT_NE(error_of(top).find("extra"), std::string::npos);
}

TEST(Config, ParseErrorHasLineAndColumn) {
  const std::string t = "{\n  \"params\": {\"n\": 3,,}\n}";
  try {
    parse_config(t);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(Config, MissingAndMistypedFieldsNamed) {
  EXPECT_NE(error_of(R"({"params": {"n": 3, "k": 1, "p": 6}, "grid": {"kind": "full_s2"},
      "f": {"kind": "constant", "value": 1}, "init": {"kind": "sphere", "r": 1}})").find("params.q"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"params": {"n": 3, "k": 1, "p": 6, "q": "six"}, "grid": {"kind": "full_s2"},
      "f": {"kind": "constant", "value": 1}, "init": {"kind": "sphere", "r": 1}})").find("params.q"),
            std::string::npos);
}

TEST(Config, FixedOneOutsideWindowRejected) {
  std::string t = kMinimal;
  t.replace(t.find("\"q\": 6"), 6, "\"q\": 4, \"eta_mode\": \"fixed_one\"");
  EXPECT_NE(error_of(t).find("k+1 < q-n < p-k-1"), std::string::npos) << error_of(t);
}

TEST(Config, FullS2NeedsN3) {
  EXPECT_NE(error_of(R"({"params": {"n": 4, "k": 1, "p": 8, "q": 7}, "grid": {"kind": "full_s2"},
      "f": {"kind": "constant", "value": 1}, "init": {"kind": "sphere", "r": 1}})").find("full_s2"),
            std::string::npos);
}

TEST(Config, RoundTripIsIdentity) {
  RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(parse_config(serialize_config(c)), c);

  c.params.eta_mode = EtaMode::FixedOne;
  c.params.p = 6.3000000000000007;
  c.grid = GridConfig{GridKind::Axisymmetric, 48, 1};
  c.f = LinearHarmonic{1.0, 0.05, {0.0, 0.0, 1.0}};
  c.init.shape = PerturbedSphere{1.0, 0.1, {0.0, 0.0, 1.0}};
  c.init.rescale_delta = 0.25;
  c.control.dt_max = 1e-3;
  c.outputs.mesh_path = "m.obj";
  c.outputs.snapshot_every = 10;
  c.outputs.state_path = "s.json";
  c.check_f.circles = 128;
  const RunConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));

  for (FConfig f : {FConfig{AxisymCosinePoly{{1.0, 0.0, 0.1}}}, FConfig{TabulatedRef{"f.json"}}}) {
    c.f = f;
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
  c.grid = GridConfig{GridKind::FullS2, 32, 64};
  for (InitialShape s : {InitialShape{TranslatedBall{1.0, {0, 0, 0.05}}}, InitialShape{EllipsoidSupport{{1.0, 1.2, 1.5}}}}) {
    c.init.shape = s;
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
}

TEST(Config, ShippedConfigsParse) {
  const std::filesystem::path dir = std::filesystem::path(CMFLOW_SOURCE_DIR) / "configs";
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++count;
  }
  EXPECT_GE(count, 4);
}

TEST(Diagnostics, HeaderIsExact) {
  EXPECT_STREQ(kDiagnosticsHeader,
               "step,t,dt,h_min,h_max,eta,J,Fh_min,Fh_max,residual,convexity_margin,kappa_max,"
               "mv_lower_slack,mv_upper_slack,J_drift");
}

TEST(Diagnostics, StationaryRunWritesOneRowPerAcceptedStep) {
  auto [g, rule] = build_grid(GridKind::FullS2, {16, 32}, 3);
  const ScalarField one = ScalarField::constant(g, 1.0);
  const ParamSet ps{3, 1, 6, 6, EtaMode::Normalized};
  FlowState s = make_state(one, one, ps, rule);
  StepControl c;
  MonitorSuite m(ps, c);
  m.initialize(s, one, rule);
  std::vector<DiagnosticsRecord> recs;
  for (int i = 0; i < 3; ++i) {
    StepResult r = step(s, one, ps, c, rule);
    recs.push_back(m.observe(s, r.state, one, rule, r.plan.stages));
    s = std::move(r.state);
  }
  const std::string path = temp_path("stationary.csv");
  write_diagnostics(path, recs);
  const auto back = read_diagnostics(path);
  ASSERT_EQ(back.size(), 3u);
  for (const auto& r : back) {
    EXPECT_EQ(r.h_min, 1.0);
    EXPECT_EQ(r.h_max, 1.0);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_NEAR(r.J, 4.0 * std::numbers::pi, 1e-12);
    EXPECT_EQ(r.J_drift, 0.0);
  }
  std::remove(path.c_str());
}

TEST(Diagnostics, SeventeenDigitRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<DiagnosticsRecord> recs(50);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    DiagnosticsRecord& r = recs[i];
    r.step = static_cast<long>(i + 1);
    for (double* v : {&r.t, &r.dt, &r.h_min, &r.h_max, &r.eta, &r.J, &r.Fh_min, &r.Fh_max, &r.residual,
                      &r.convexity_margin, &r.kappa_max, &r.mv_lower_slack, &r.mv_upper_slack, &r.J_drift})
      *v = u(rng) * std::pow(10.0, static_cast<int>(u(rng)) % 40);
  }
  const std::string path = temp_path("roundtrip.csv");
  write_diagnostics(path, recs);
  const auto back = read_diagnostics(path);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].step, recs[i].step);
    EXPECT_EQ(diagnostics_row(back[i]), diagnostics_row(recs[i]));
    EXPECT_EQ(back[i].J_drift, recs[i].J_drift);
    EXPECT_EQ(back[i].t, recs[i].t);
  }
  std::remove(path.c_str());
}

TEST(Diagnostics, UnwritablePathNamed) {
  try {
    DiagnosticsWriter w("/nonexistent-dir/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
}

TEST(State, RoundTripIsExact) {
  auto [g, rule] = build_grid(GridKind::FullS2, {16, 32}, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> v(g->node_count());
  for (double& x : v) x = u(rng);
  const StateFile s = to_state_file(ScalarField(g, v), 0.123456789012345678);
  const StateFile back = parse_state(serialize_state(s));
  EXPECT_EQ(back.grid, s.grid);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(back.values, s.values);
  EXPECT_THROW(parse_state("{\"format\": \"other\"}"), ConfigError);
}

TEST(Mesh, UnitSphereVerticesOnSphere) {
  auto [g, rule] = build_grid(GridKind::FullS2, {16, 32}, 3);
  const std::string obj = export_mesh(ScalarField::constant(g, 1.0));
  std::istringstream in(obj);
  std::string line;
  std::size_t verts = 0, faces = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) {
      double x, y, z;
      std::sscanf(line.c_str(), "v %lf %lf %lf", &x, &y, &z);
      if (verts < g->node_count()) EXPECT_NEAR(std::sqrt(x * x + y * y + z * z), 1.0, 1e-12);
      ++verts;
    } else if (line.rfind("f ", 0) == 0) {
      ++faces;
    }
  }
  EXPECT_EQ(verts, g->node_count() + 2);
  EXPECT_EQ(faces, static_cast<std::size_t>(15 * 32 + 2 * 32));
}

TEST(Mesh, RowMajorOrderAndTranslatedBall) {
  auto [g, rule] = build_grid(GridKind::FullS2, {16, 32}, 3);
  const InitialData d = sample_initial(TranslatedBall{1.0, {0, 0, 0.3}}, g);
  const PointCloud X = embed(d.h, d.exact_gradient.e1, d.exact_gradient.e2);
  const std::string obj = mesh_obj(d.h, X);
  std::istringstream in(obj);
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line) && i < g->node_count()) {
    if (line.rfind("v ", 0) != 0) continue;
    double x, y, z;
    std::sscanf(line.c_str(), "v %lf %lf %lf", &x, &y, &z);
    EXPECT_NEAR(std::sqrt(x * x + y * y + (z - 0.3) * (z - 0.3)), 1.0, 1e-12);
    // Row-major: vertex i is the embedding of node i.
    EXPECT_NEAR(x, X[i][0], 1e-15);
    ++i;
  }
}

TEST(Mesh, AxisymmetricGivesProfileInstead) {
  auto [g, rule] = build_grid(GridKind::Axisymmetric, {16, 0}, 4);
  const ScalarField h = ScalarField::constant(g, 1.5);
  EXPECT_THROW(export_mesh(h), Error);
  const std::string csv = profile_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "theta,h,lambda_meridian,lambda_transverse,rho");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
}

// Every key the serializer writes is declared in the shipped schema.
TEST(Config, SchemaCoversSerializedKeys) {
  const auto schema = nlohmann::json::parse(
      read_text_file((std::filesystem::path(CMFLOW_SOURCE_DIR) / "schema" / "run_config.schema.json").string()));
  RunConfig c = parse_config(kMinimal);
  c.outputs.mesh_path = "m.obj";
  c.outputs.snapshot_every = 5;
  c.outputs.state_path = "s.json";
  c.init.rescale_delta = 0.25;
  const auto j = nlohmann::json::parse(serialize_config(c));
  const auto& props = schema["properties"];
  for (const auto& [section, body] : j.items()) {
    ASSERT_TRUE(props.contains(section)) << section;
    if (section == "f") continue;  // tagged union, checked through oneOf
    for (const auto& [key, value] : body.items())
      EXPECT_TRUE(props[section]["properties"].contains(key)) << section << "." << key;
  }
}
