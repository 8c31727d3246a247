// Command-line front end: run, check-params, check-f, residual, export-mesh.
#include "cmflow/cmflow.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

using namespace cmflow;

constexpr int kUsageError = 64;

std::string config_dir(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

std::string out_path(const std::string& path, const std::string& base) { return resolve_path(path, base); }

std::string snapshot_name(const std::string& state_path, long step) {
  std::filesystem::path p(state_path);
  char tag[32];
  std::snprintf(tag, sizeof tag, ".%08ld", step);
  return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).string();
}

void write_shape(const ScalarField& h, const std::string& path) {
  write_text_file(path, h.grid()->is_full() ? export_mesh(h) : profile_csv(h));
}

int cmd_run(const std::string& cfg_path) {
  const RunConfig cfg = load_config(cfg_path);
  const std::string base = config_dir(cfg_path);
  const Problem pb = make_problem(cfg, base);
  if (pb.rescale_lambda) std::printf("rescaled initial body by lambda = %.12g\n", *pb.rescale_lambda);

  DiagnosticsWriter csv(out_path(cfg.outputs.csv_path, base));
  const auto start = std::chrono::steady_clock::now();
  long last_print = 0;
  const Observer observer = [&](const FlowState& s, const DiagnosticsRecord& r) {
    csv.write(r);
    if (cfg.outputs.snapshot_every && s.step_index % *cfg.outputs.snapshot_every == 0) {
      const std::string stem = cfg.outputs.state_path ? *cfg.outputs.state_path : "state.json";
      write_text_file(snapshot_name(out_path(stem, base), s.step_index), serialize_state(to_state_file(s.h, s.t)));
    }
    if (s.step_index - last_print >= 1000) {
      last_print = s.step_index;
      std::printf("step %ld  t = %.6g  residual = %.3e  Fh in [%.6g, %.6g]\n", s.step_index, s.t,
                  r.residual, r.Fh_min, r.Fh_max);
      std::fflush(stdout);
    }
  };
  const RunResult res = run(pb.h0, pb.f, cfg.params, cfg.control, pb.rule, observer);
  csv.flush();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::printf("%s after %ld steps (%ld rejected), sup|F/h - eta| = %.3e, %.2f s\n", to_string(res.outcome),
              res.steps, res.rejections, res.residual, secs);
  if (!res.error.empty()) std::printf("%s: %s\n", res.error_kind.c_str(), res.error.c_str());

  nlohmann::json rep;
  rep["outcome"] = to_string(res.outcome);
  rep["exit_code"] = res.exit_code();
  rep["steps"] = res.steps;
  rep["rejections"] = res.rejections;
  rep["residual"] = res.residual;
  rep["eta_sup"] = res.eta_sup;
  rep["eta_inf"] = res.eta_inf;
  rep["seconds"] = secs;
  if (pb.rescale_lambda) rep["rescale_lambda"] = *pb.rescale_lambda;
  if (!res.error.empty()) rep["error"] = {{"kind", res.error_kind}, {"message", res.error}};
  nlohmann::json viol = nlohmann::json::array();
  for (const Violation& v : res.violations)
    viol.push_back({{"monitor", v.monitor}, {"step", v.step}, {"excess", v.excess}});
  rep["violations"] = viol;
  if (res.final_state) {
    const FlowState& s = *res.final_state;
    rep["t"] = s.t;
    rep["h_min"] = s.h.min();
    rep["h_max"] = s.h.max();
    rep["elliptic_residual"] = elliptic_residual(s.h, pb.f, cfg.params, cfg.params.c_target).sup;
    if (cfg.outputs.state_path)
      write_text_file(out_path(*cfg.outputs.state_path, base), serialize_state(to_state_file(s.h, s.t)));
    if (cfg.outputs.mesh_path) write_shape(s.h, out_path(*cfg.outputs.mesh_path, base));
  }
  write_text_file(out_path(cfg.outputs.report_path, base), rep.dump(2) + "\n");
  return res.exit_code();
}

int cmd_check_params(const std::string& cfg_path) {
  const RunConfig cfg = load_config(cfg_path, false);
  const RegimeReport r = cfg.params.regime();
  std::printf("params n=%d k=%d p=%.17g q=%.17g eta_mode=%s\n", cfg.params.n, cfg.params.k, cfg.params.p,
              cfg.params.q, to_string(cfg.params.eta_mode));
  std::printf("regime: %s\n", to_string(r.regime));
  if (!r.reason.empty()) std::printf("reason: %s\n", r.reason.c_str());
  if (!r.valid()) return 1;
  if (cfg.params.eta_mode == EtaMode::FixedOne && r.regime != Regime::TheoremWindow) {
    std::printf("fixed_one mode needs k+1 < q-n < p-k-1\n");
    return 1;
  }
  return 0;
}

int cmd_check_f(const std::string& cfg_path) {
  const RunConfig cfg = load_config(cfg_path);
  const AnisotropySpec spec = make_f_spec(cfg, config_dir(cfg_path));
  const ConditionAReport rep =
      condition_A_margin(spec, cfg.params, cfg.check_f.circles, cfg.check_f.samples_per_circle);
  std::fputs(to_text(rep).c_str(), stdout);
  return rep.exit_code();
}

int cmd_residual(const std::string& cfg_path, const std::string& state_path) {
  const RunConfig cfg = load_config(cfg_path, false);
  auto [grid, rule] = build_grid(cfg);
  const AnisotropySpec spec = make_f_spec(cfg, config_dir(cfg_path));
  const ScalarField h = load_field(state_path, grid);
  const Residual r = elliptic_residual(h, eval_f(spec, grid), cfg.params, cfg.params.c_target);
  std::printf("elliptic residual sup|F/h - c| = %.17g (c = %.17g)\n", r.sup, cfg.params.c_target);
  return 0;
}

int cmd_export_mesh(const std::string& cfg_path, const std::string& state_path, const std::string& out) {
  const RunConfig cfg = load_config(cfg_path, false);
  auto [grid, rule] = build_grid(cfg);
  write_shape(load_field(state_path, grid), out);
  std::printf("wrote %s (%s)\n", out.c_str(), grid->is_full() ? "OBJ mesh" : "profile CSV");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic curvature flow of convex hypersurfaces (support-function solver)"};
  app.require_subcommand(1);
  std::string cfg, state, out;

  auto* run_cmd = app.add_subcommand("run", "Run the flow; exit 0 converged, 3 time-capped, 4 aborted");
  run_cmd->add_option("config", cfg, "Run configuration (JSON)")->required();
  auto* params_cmd = app.add_subcommand("check-params", "Classify the exponent regime; exit 0 valid, 1 invalid");
  params_cmd->add_option("config", cfg)->required();
  auto* f_cmd = app.add_subcommand("check-f", "Audit condition (A); exit 0 pass, 1 fail, 2 inconclusive");
  f_cmd->add_option("config", cfg)->required();
  auto* res_cmd = app.add_subcommand("residual", "Elliptic residual of a saved support function");
  res_cmd->add_option("config", cfg)->required();
  res_cmd->add_option("state", state)->required();
  auto* mesh_cmd = app.add_subcommand("export-mesh", "Write an OBJ mesh (full_s2) or profile CSV (axisymmetric)");
  mesh_cmd->add_option("config", cfg)->required();
  mesh_cmd->add_option("state", state)->required();
  mesh_cmd->add_option("out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*run_cmd) return cmd_run(cfg);
    if (*params_cmd) return cmd_check_params(cfg);
    if (*f_cmd) return cmd_check_f(cfg);
    if (*res_cmd) return cmd_residual(cfg, state);
    if (*mesh_cmd) return cmd_export_mesh(cfg, state, out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return *run_cmd ? 4 : kUsageError;
  }
  return kUsageError;
}
