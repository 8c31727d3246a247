#pragma once

#include "cmflow/anisotropy.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/geometry.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cmflow {

struct StepControl {
  double dt_safety = 0.2;
  double dt_min = 1e-12;
  double dt_max = 1e-2;
  double t_max = 100.0;
  long max_steps = 1'000'000;
  double tol_res = 1e-6;
  double tol_invariant = 1e-3;
  /// Upper bound on Runge-Kutta-Chebyshev stages per step; 1 is plain explicit Euler.
  int max_stages = 256;
  double stage_damping = 0.05;

  void validate() const {
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ConfigError("control.dt_safety must lie in (0, 1]");
    if (!(dt_min > 0.0 && dt_min < dt_max)) throw ConfigError("control: need 0 < dt_min < dt_max");
    if (!(t_max > 0.0)) throw ConfigError("control.t_max must be positive");
    if (max_steps < 1) throw ConfigError("control.max_steps must be >= 1");
    if (!(tol_res > 0.0)) throw ConfigError("control.tol_res must be positive");
    if (!(tol_invariant > 0.0)) throw ConfigError("control.tol_invariant must be positive");
    if (max_stages < 1) throw ConfigError("control.max_stages must be >= 1");
    if (!(stage_damping >= 0.0 && stage_damping < 1.0))
      throw ConfigError("control.stage_damping must lie in [0, 1)");
  }

  bool operator==(const StepControl&) const = default;
};

/// h and everything derived from it. Invariant: curvature, speed and eta are exactly
/// what the pipeline produces for h.
struct FlowState {
  double t = 0.0;
  ScalarField h;
  CurvatureData curvature;
  SpeedFields speed;
  double eta = 1.0;
  long step_index = 0;
};

/// eta = \int rho^{q-n} h sigma_k / \int h^p / f in Normalized mode, exactly 1 otherwise.
inline double compute_eta(const ScalarField& h, const CurvatureData& cd, const ScalarField& f,
                          const ParamSet& params, const QuadratureRule& rule) {
  if (params.eta_mode == EtaMode::FixedOne) return 1.0;
  const auto w = rule.weights();
  double num = 0.0;
  double den = 0.0;
  const double er = params.q - params.n;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += w[i] * std::exp(er * detail::checked_log(cd.rho[i], "rho")) * h[i] * cd.sigma_k[i];
    den += w[i] * std::exp(params.p * detail::checked_log(h[i], "h")) / f[i];
  }
  if (!(den > 0.0)) throw Error("compute_eta: non-positive denominator");
  return num / den;
}

inline double compute_eta(const FlowState& s, const ScalarField& f, const ParamSet& params,
                          const QuadratureRule& rule) {
  return compute_eta(s.h, s.curvature, f, params, rule);
}

/// J = \int h^p / f.
inline double functional_J(const ScalarField& h, const ScalarField& f, const ParamSet& params,
                           const QuadratureRule& rule) {
  const auto w = rule.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    s += w[i] * std::exp(params.p * std::log(h[i])) / f[i];
  return s;
}

/// Builds a consistent state; throws NonConvexError if the body is not strictly convex.
inline FlowState make_state(ScalarField h, const ScalarField& f, const ParamSet& params,
                            const QuadratureRule& rule, double t = 0.0, long step_index = 0) {
  FlowState s;
  s.t = t;
  s.step_index = step_index;
  s.curvature = curvature_pipeline(h, params);
  require_convex(s.curvature);
  s.speed = speed_and_ratio(h, f, s.curvature, params);
  s.eta = compute_eta(h, s.curvature, f, params, rule);
  s.h = std::move(h);
  return s;
}

/// sup |F/h - eta|: the stopping residual.
inline double flow_residual(const FlowState& s) {
  double r = 0.0;
  for (double v : s.speed.ratio) r = std::max(r, std::abs(v - s.eta));
  return r;
}

namespace detail {

// Real stability interval [-beta, 0] of the s-stage first-order damped Chebyshev method.
inline double chebyshev_beta(int s, double damping) {
  const double delta = damping / (static_cast<double>(s) * s);
  const double w0 = 1.0 + delta;
  const double a = std::log1p(delta + std::sqrt(delta * (2.0 + delta)));  // acosh(w0)
  double w1;
  if (a == 0.0) {
    w1 = 1.0 / (static_cast<double>(s) * s);
  } else {
    const double ts = std::cosh(s * a);
    const double dts = s * std::sinh(s * a) / std::sinh(a);
    w1 = ts / dts;
  }
  return (1.0 + w0) / w1;
}

}  // namespace detail

struct StepPlan {
  double dt = 0.0;
  int stages = 1;
  double dt_parabolic = 0.0;  // min spacing^2 / max(N * largest eigenvalue of d sigma_k / d b)
  double dt_reaction = 0.0;   // 0.5 / max(|F/h - eta| (|q-n+k+1-p| + 1))
};

/// Time step and stage count. The single-stage step is
///   dt = min(dt_safety * dt_parabolic, dt_safety * dt_reaction, dt_max);
/// when dt_max asks for more, stages are added until the Chebyshev stability interval
/// covers it (or max_stages is reached). `dt_cap` clips the step (e.g. to land on t_max).
inline StepPlan choose_dt(const FlowState& s, const ParamSet& params, const StepControl& control,
                          double dt_cap = std::numeric_limits<double>::infinity()) {
  const CurvatureData& cd = s.curvature;
  double cmax = 0.0;
  double rmax = 0.0;
  const double growth = std::abs(params.ratio_exponent()) + 1.0;
  for (std::size_t i = 0; i < cd.size(); ++i) {
    cmax = std::max(cmax, s.speed.N[i] * cd.max_sigma_grad(i));
    rmax = std::max(rmax, std::abs(s.speed.ratio[i] - s.eta) * growth);
  }
  const double dx = cd.grid->min_spacing();
  StepPlan plan;
  plan.dt_parabolic = cmax > 0.0 ? dx * dx / cmax : std::numeric_limits<double>::infinity();
  plan.dt_reaction = rmax > 0.0 ? 0.5 / rmax : std::numeric_limits<double>::infinity();

  const double base = control.dt_safety * plan.dt_parabolic;
  const double target = std::min({control.dt_safety * plan.dt_reaction, control.dt_max, dt_cap});
  const double beta1 = detail::chebyshev_beta(1, control.stage_damping);
  int stages = 1;
  double limit = base;
  while (limit < target && stages < control.max_stages) {
    ++stages;
    limit = base * detail::chebyshev_beta(stages, control.stage_damping) / beta1;
  }
  plan.stages = stages;
  plan.dt = std::min(target, limit);
  if (plan.dt < control.dt_min && plan.dt < dt_cap)
    throw StiffnessError("required time step " + std::to_string(plan.dt) + " is below dt_min");
  return plan;
}

/// Nodal tendency F - eta h of the support-function evolution.
inline std::vector<double> tendency(const ScalarField& h, const ScalarField& f,
                                    const ParamSet& params, const QuadratureRule& rule) {
  const CurvatureData cd = curvature_pipeline(h, params);
  const SpeedFields sp = speed_and_ratio(h, f, cd, params);
  const double eta = compute_eta(h, cd, f, params, rule);
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sp.F[i] - eta * h[i];
  return out;
}

inline std::vector<double> tendency(const FlowState& s) {
  std::vector<double> out(s.h.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.speed.F[i] - s.eta * s.h[i];
  return out;
}

/// One step of the support-function flow dh/dt = F - eta h with `stages` damped
/// Chebyshev stages (first order). One stage is explicit Euler: h + dt (F - eta h).
/// Throws if an intermediate or final h is not positive; convexity is checked by the caller.
inline ScalarField advance(const FlowState& s, const ScalarField& f, const ParamSet& params,
                           const QuadratureRule& rule, double dt, int stages,
                           double damping = 0.05) {
  const GridPtr& grid = s.h.grid();
  const std::size_t nn = s.h.size();
  const std::vector<double> t0 = tendency(s);
  const auto y0 = s.h.values();

  if (stages == 1) {
    std::vector<double> y(nn);
    for (std::size_t i = 0; i < nn; ++i) y[i] = y0[i] + dt * t0[i];
    return ScalarField(grid, std::move(y));
  }

  const double delta = damping / (static_cast<double>(stages) * stages);
  const double w0 = 1.0 + delta;
  std::vector<double> cheb(stages + 1);
  cheb[0] = 1.0;
  cheb[1] = w0;
  for (int j = 2; j <= stages; ++j) cheb[j] = 2.0 * w0 * cheb[j - 1] - cheb[j - 2];
  const double a = std::log1p(delta + std::sqrt(delta * (2.0 + delta)));
  const double dts = a == 0.0 ? static_cast<double>(stages) * stages
                              : stages * std::sinh(stages * a) / std::sinh(a);
  const double w1 = cheb[stages] / dts;
  auto b = [&](int j) { return 1.0 / cheb[j]; };

  std::vector<double> prev(y0.begin(), y0.end());
  std::vector<double> cur(nn);
  const double mu1 = w1 * b(1);
  for (std::size_t i = 0; i < nn; ++i) cur[i] = y0[i] + mu1 * dt * t0[i];
  std::vector<double> next(nn);
  for (int j = 2; j <= stages; ++j) {
    const double mu = 2.0 * w0 * b(j) / b(j - 1);
    const double nu = -b(j) / b(j - 2);
    const double mut = 2.0 * w1 * b(j) / b(j - 1);
    const std::vector<double> tj = tendency(ScalarField(grid, cur), f, params, rule);
    for (std::size_t i = 0; i < nn; ++i)
      next[i] = y0[i] + mu * (cur[i] - y0[i]) + nu * (prev[i] - y0[i]) + mut * dt * tj[i];
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return ScalarField(grid, std::move(cur));
}

struct StepResult {
  FlowState state;
  StepPlan plan;       // plan of the accepted attempt
  int rejections = 0;
};

inline constexpr int kMaxRejections = 20;

/// Chooses dt, advances, and rebuilds the state. A candidate with non-positive h, a
/// diverging power law or a non-positive convexity margin is rejected and retried with
/// half the step, at most 20 times.
inline StepResult step(const FlowState& s, const ScalarField& f, const ParamSet& params,
                       const StepControl& control, const QuadratureRule& rule,
                       double dt_cap = std::numeric_limits<double>::infinity()) {
  StepPlan plan = choose_dt(s, params, control, dt_cap);
  StepResult out;
  std::size_t bad_node = 0;
  std::string last;
  for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
    try {
      ScalarField h = advance(s, f, params, rule, plan.dt, plan.stages, control.stage_damping);
      out.state = make_state(std::move(h), f, params, rule, s.t + plan.dt, s.step_index + 1);
      out.plan = plan;
      out.rejections = attempt;
      return out;
    } catch (const NonConvexError& e) {
      bad_node = e.node();
      last = e.what();
    } catch (const NonPositiveError& e) {
      bad_node = e.node();
      last = e.what();
    } catch (const DivergenceError& e) {
      last = e.what();
    }
    // Halve and re-plan the stage count for the smaller step.
    StepControl halved = control;
    halved.dt_max = plan.dt * 0.5;
    halved.dt_min = std::min(control.dt_min, halved.dt_max * 0.5);
    plan = choose_dt(s, params, halved, dt_cap);
  }
  throw ConvexityLossError("step rejected " + std::to_string(kMaxRejections) +
                               " times; last failure: " + last,
                           bad_node);
}

/// One row of diagnostics per accepted step.
struct DiagnosticsRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  double eta = 0.0;
  double J = 0.0;
  double Fh_min = 0.0;
  double Fh_max = 0.0;
  double residual = 0.0;  // sup |F/h - 1|
  double convexity_margin = 0.0;
  double kappa_max = 0.0;
  double mv_lower_slack = 0.0;  // \int h sigma_k / (|S| h_min^{k+1}) - 1, >= 0 when the sandwich holds
  double mv_upper_slack = 0.0;  // 1 - \int h sigma_k / (|S| h_max^{k+1})
  double J_drift = 0.0;         // |J - J(0)| / J(0)

  // Not part of the CSV contract.
  int stages = 1;
  double h_decrease_max = 0.0;  // max over nodes of h_prev - h (positive when h decreased)
};

/// Record fields that depend on the state alone (J_drift and h_decrease_max are left 0).
inline DiagnosticsRecord diagnostics(const FlowState& s, const ScalarField& f,
                                     const ParamSet& params, const QuadratureRule& rule) {
  DiagnosticsRecord r;
  r.step = s.step_index;
  r.t = s.t;
  r.h_min = s.h.min();
  r.h_max = s.h.max();
  r.eta = s.eta;
  r.J = functional_J(s.h, f, params, rule);
  const auto& ratio = s.speed.ratio;
  r.Fh_min = *std::min_element(ratio.begin(), ratio.end());
  r.Fh_max = *std::max_element(ratio.begin(), ratio.end());
  for (double v : ratio) r.residual = std::max(r.residual, std::abs(v - 1.0));
  r.convexity_margin = s.curvature.min_margin;
  r.kappa_max = 1.0 / s.curvature.min_margin;

  const auto w = rule.weights();
  double mv = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) mv += w[i] * s.h[i] * s.curvature.sigma_k[i];
  mv /= sphere_area(params.n - 1);
  r.mv_lower_slack = mv / std::pow(r.h_min, params.k + 1) - 1.0;
  r.mv_upper_slack = 1.0 - mv / std::pow(r.h_max, params.k + 1);
  return r;
}

/// Relative quadrature slack allowed in the mixed-volume sandwich.
inline constexpr double kMixedVolumeSlack = 1e-8;

struct Violation {
  std::string monitor;
  long step = 0;
  double excess = 0.0;  // amount beyond the bound (after the tolerance)
};

/// Runtime checks of the a-priori properties of the flow:
///  - Normalized mode: J conserved (relative drift <= tol_invariant);
///  - F/h stays inside the envelope spanned by its initial extremes and the recorded eta,
///    and max(Fh_max - eta, 0) does not grow;
///  - FixedOne mode started with min F/h > 1: min F/h >= 1 and h nodewise non-decreasing;
///  - h_min^{k+1} <= \int h sigma_k / |S^{n-1}| <= h_max^{k+1};
///  - eta finite and positive.
/// A violation is recorded when a bound is exceeded by more than its tolerance; one that
/// exceeds it by more than 10 tol_invariant aborts with InvariantViolation.
class MonitorSuite {
 public:
  MonitorSuite(ParamSet params, StepControl control)
      : params_(params), control_(control) {}

  DiagnosticsRecord initialize(const FlowState& s0, const ScalarField& f, const QuadratureRule& rule) {
    DiagnosticsRecord r = diagnostics(s0, f, params_, rule);
    J0_ = r.J;
    fh_max0_ = r.Fh_max;
    fh_min0_ = r.Fh_min;
    eta_sup_ = eta_inf_ = r.eta;
    envelope_prev_ = std::max(r.Fh_max - r.eta, 0.0);
    monotone_ = params_.eta_mode == EtaMode::FixedOne && r.Fh_min > 1.0;
    initialized_ = true;
    return r;
  }

  /// Record for an accepted step from `prev` to `s`.
  DiagnosticsRecord observe(const FlowState& prev, const FlowState& s, const ScalarField& f,
                            const QuadratureRule& rule, int stages = 1) {
    if (!initialized_) throw Error("MonitorSuite: observe before initialize");
    DiagnosticsRecord r = diagnostics(s, f, params_, rule);
    r.dt = s.t - prev.t;
    r.stages = stages;
    r.J_drift = std::abs(r.J - J0_) / J0_;
    for (std::size_t i = 0; i < s.h.size(); ++i)
      r.h_decrease_max = std::max(r.h_decrease_max, prev.h[i] - s.h[i]);

    const double tol = control_.tol_invariant;
    if (!(std::isfinite(r.eta) && r.eta > 0.0))
      flag("eta_positive", r.step, std::numeric_limits<double>::infinity());
    eta_sup_ = std::max(eta_sup_, r.eta);
    eta_inf_ = std::min(eta_inf_, r.eta);

    if (params_.eta_mode == EtaMode::Normalized) flag("J_conservation", r.step, r.J_drift - tol);

    flag("Fh_upper_envelope", r.step, r.Fh_max - std::max(fh_max0_, eta_sup_) - tol);
    flag("Fh_lower_envelope", r.step, std::min(fh_min0_, eta_inf_) - r.Fh_min - tol);
    const double env = std::max(r.Fh_max - r.eta, 0.0);
    flag("Fh_envelope_contraction", r.step, env - envelope_prev_ - tol);
    envelope_prev_ = env;

    if (monotone_) {
      flag("Fh_min_above_one", r.step, (1.0 - tol) - r.Fh_min);
      flag("h_nondecreasing", r.step, r.h_decrease_max - tol);
    }
    flag("mixed_volume_lower", r.step, -r.mv_lower_slack - kMixedVolumeSlack);
    flag("mixed_volume_upper", r.step, -r.mv_upper_slack - kMixedVolumeSlack);

    for (const Violation& v : pending_)
      if (v.excess > 10.0 * tol)
        throw InvariantViolation("monitor '" + v.monitor + "' violated at step " +
                                 std::to_string(v.step) + " by " + std::to_string(v.excess));
    violations_.insert(violations_.end(), pending_.begin(), pending_.end());
    pending_.clear();
    return r;
  }

  const std::vector<Violation>& violations() const { return violations_; }
  double eta_sup() const { return eta_sup_; }
  double eta_inf() const { return eta_inf_; }
  double J0() const { return J0_; }
  bool monotone_regime() const { return monotone_; }

 private:
  void flag(const char* name, long step, double excess) {
    if (excess > 0.0 || std::isnan(excess)) pending_.push_back({name, step, excess});
  }

  ParamSet params_;
  StepControl control_;
  bool initialized_ = false;
  bool monotone_ = false;
  double J0_ = 0.0;
  double fh_max0_ = 0.0;
  double fh_min0_ = 0.0;
  double eta_sup_ = 0.0;
  double eta_inf_ = 0.0;
  double envelope_prev_ = 0.0;
  std::vector<Violation> pending_;
  std::vector<Violation> violations_;
};

enum class Outcome { Converged, TimeCapped, Aborted };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "Converged";
    case Outcome::TimeCapped: return "TimeCapped";
    case Outcome::Aborted: return "Aborted";
  }
  return "Aborted";
}

struct RunResult {
  Outcome outcome = Outcome::Aborted;
  std::optional<FlowState> final_state;
  double residual = std::numeric_limits<double>::infinity();  // sup |F/h - eta|
  std::string error;                                          // Aborted only
  std::string error_kind;
  long steps = 0;
  long rejections = 0;
  std::vector<Violation> violations;
  double eta_sup = 0.0;
  double eta_inf = 0.0;

  int exit_code() const {
    return outcome == Outcome::Converged ? 0 : outcome == Outcome::TimeCapped ? 3 : 4;
  }
};

using Observer = std::function<void(const FlowState&, const DiagnosticsRecord&)>;

/// Runs the flow until sup |F/h - eta| <= tol_res (Converged), t >= t_max or
/// max_steps (TimeCapped), or an error (Aborted). The last step is clipped to land on t_max.
inline RunResult run(const ScalarField& h0, const ScalarField& f, const ParamSet& params,
                     const StepControl& control, const QuadratureRule& rule,
                     const Observer& observer = {}) {
  control.validate();
  const RegimeReport reg = params.regime();
  if (!reg.valid()) throw ConfigError("invalid parameters: " + reg.reason);
  if (params.eta_mode == EtaMode::FixedOne && reg.regime != Regime::TheoremWindow)
    throw ConfigError("eta_mode fixed_one requires k+1 < q-n < p-k-1");

  RunResult res;
  MonitorSuite monitors(params, control);
  FlowState state;
  try {
    state = make_state(h0, f, params, rule);
  } catch (const Error& e) {
    res.outcome = Outcome::Aborted;
    res.error = e.what();
    res.error_kind = "InitialState";
    return res;
  }
  if (params.eta_mode == EtaMode::FixedOne) {
    const double mn = *std::min_element(state.speed.ratio.begin(), state.speed.ratio.end());
    if (!(mn > 1.0))
      throw ConfigError("fixed_one mode needs min F/h > 1 initially (got " + std::to_string(mn) +
                        "); rescale the initial body first");
  }
  monitors.initialize(state, f, rule);
  res.residual = flow_residual(state);

  auto finish = [&](Outcome o) {
    res.outcome = o;
    res.violations = monitors.violations();
    res.eta_sup = monitors.eta_sup();
    res.eta_inf = monitors.eta_inf();
    res.final_state = std::move(state);
    return res;
  };

  if (res.residual <= control.tol_res) return finish(Outcome::Converged);
  const double t_eps = 1e-12 * std::max(1.0, control.t_max);
  try {
    while (true) {
      if (state.t >= control.t_max - t_eps || state.step_index >= control.max_steps)
        return finish(Outcome::TimeCapped);
      StepResult sr = step(state, f, params, control, rule, control.t_max - state.t);
      res.rejections += sr.rejections;
      const DiagnosticsRecord rec = monitors.observe(state, sr.state, f, rule, sr.plan.stages);
      state = std::move(sr.state);
      ++res.steps;
      if (observer) observer(state, rec);
      res.residual = flow_residual(state);
      if (res.residual <= control.tol_res) {
        if (params.eta_mode == EtaMode::FixedOne) {
          const Residual er = elliptic_residual(state.h, f, params, 1.0);
          if (!(er.sup <= control.tol_res))
            throw InvariantViolation("converged state does not solve the elliptic equation");
        }
        return finish(Outcome::Converged);
      }
    }
  } catch (const Error& e) {
    res.error = e.what();
    if (dynamic_cast<const StiffnessError*>(&e)) res.error_kind = "StiffnessError";
    else if (dynamic_cast<const ConvexityLossError*>(&e)) res.error_kind = "ConvexityLossError";
    else if (dynamic_cast<const InvariantViolation*>(&e)) res.error_kind = "InvariantViolation";
    else res.error_kind = "Error";
    return finish(Outcome::Aborted);
  }
}

inline RunResult run(const ScalarField& h0, const AnisotropySpec& f_spec, const ParamSet& params,
                     const StepControl& control, const QuadratureRule& rule,
                     const Observer& observer = {}) {
  return run(h0, eval_f(f_spec, h0.grid()), params, control, rule, observer);
}

}  // namespace cmflow
