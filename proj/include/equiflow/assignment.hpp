#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "accel.hpp"
#include "costs.hpp"
#include "network.hpp"
#include "paths.hpp"
#include "softpaths.hpp"

namespace equiflow {

enum class Regime { Beckmann, StableDynamics, StochasticBeckmann, StochasticSD };
enum class Method { FrankWolfe, MirrorDescent, Umst };

inline std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::Beckmann: return "beckmann";
    case Regime::StableDynamics: return "sd";
    case Regime::StochasticBeckmann: return "stoch-beckmann";
    case Regime::StochasticSD: return "stoch-sd";
  }
  return "?";
}

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::FrankWolfe: return "fw";
    case Method::MirrorDescent: return "md";
    case Method::Umst: return "umst";
  }
  return "?";
}

inline bool is_stochastic(Regime r) { return r == Regime::StochasticBeckmann || r == Regime::StochasticSD; }
inline bool is_stable_regime(Regime r) { return r == Regime::StableDynamics || r == Regime::StochasticSD; }

struct ModelSpec {
  Regime regime = Regime::Beckmann;
  double gamma = 0.0;
  std::vector<CostModel> models;     // empty: taken from the network's links
  std::map<int, double> pinned_flow;  // stable links whose capacity is replaced by an observed flow
  double eps = 0.0;                   // absolute target; <= 0 means eps_rel times the first primal value
  double eps_rel = 1e-3;
  double eps_feas = 0.0;              // capacity residual target for stable links; <= 0 disables
  double t_max_factor = 100.0;
  double R = 0.0;                     // radius weighting the capacity residual; <= 0 uses a running estimate
  int max_iter = 10000;
  long max_oracle_calls = 0;          // 0: unlimited
  int hop_bound = 0;
  int threads = 0;
  double L0 = 1.0;
  double divergence_factor = 1e3;
  int divergence_window = 50;
  int md_check_every = 10;
};

struct TraceEntry {
  int iter = 0;
  long oracle_calls = 0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double L_est = std::numeric_limits<double>::quiet_NaN();
};

struct EquilibriumReport {
  Regime regime = Regime::Beckmann;
  Method method = Method::Umst;
  std::vector<double> flows;
  std::vector<double> times;
  std::vector<double> free_flow_times;
  std::vector<double> flows_clipped;  // second recovery scheme of mirror descent
  double primal_value = 0.0;
  double dual_value = 0.0;  // lower bound on the primal optimum
  double gap = 0.0;
  double rel_gap = 0.0;
  double primal_initial = 0.0;
  double eps = 0.0;
  double feasibility_residual = 0.0;
  double R_used = 0.0;
  double entropy = 0.0;
  double gamma = 0.0;
  int iterations = 0;
  long oracle_calls = 0;
  long fn_calls = 0;
  long grad_calls = 0;
  bool converged = false;
  double L_est = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceEntry> trace;
  // Frank-Wolfe certificate ingredients, per iteration.
  std::vector<double> fw_bound;
  double fw_L2 = 0.0;
  double fw_R2sq = 0.0;
};

namespace assign_detail {

inline std::vector<CostModel> models_for(const Network& net, const ModelSpec& spec) {
  std::vector<CostModel> m = spec.models.empty() ? link_models(net) : spec.models;
  if (static_cast<int>(m.size()) != net.num_links())
    throw Error(Errc::InvalidArgument, "cost model count differs from link count");
  for (auto [e, f] : spec.pinned_flow) {
    if (e < 0 || e >= net.num_links()) throw Error(Errc::InvalidArgument, "pinned flow on unknown link");
    if (!m[e].is_stable()) throw Error(Errc::UnsupportedForFamily, "pinned flows apply to stable-dynamics links");
    m[e].f_bar = f;
  }
  if (spec.gamma < 0.0) throw Error(Errc::InvalidArgument, "gamma must be non-negative");
  if (is_stochastic(spec.regime) != (spec.gamma > 0.0))
    throw Error(Errc::InvalidArgument, "stochastic regimes need gamma > 0, deterministic ones gamma = 0");
  if (!is_stable_regime(spec.regime))
    for (std::size_t e = 0; e < m.size(); ++e)
      if (m[e].is_stable() && std::isfinite(m[e].f_bar))
        throw Error(Errc::UnsupportedForFamily, "link " + std::to_string(e) + " has stable dynamics in a " +
                                                    std::string(regime_name(spec.regime)) + " model");
  return m;
}

inline std::vector<double> t_max_of(const std::vector<CostModel>& m, double factor) {
  std::vector<double> out(m.size());
  for (std::size_t e = 0; e < m.size(); ++e) out[e] = factor * m[e].t_bar;
  return out;
}

// Value and flows of the dual smooth part: minus total shortest time (gamma = 0)
// or its entropy-smoothed version (gamma > 0).
struct DualOracle {
  const Network& net;
  const TripTable& trips;
  double gamma;
  int hop_bound;
  int threads;
  long calls = 0;

  double eval(const std::vector<double>& t, std::vector<double>* flows) {
    ++calls;
    if (gamma > 0.0) {
      SoftEval s = soft_evaluate(net, t, trips, {gamma, hop_bound, threads});
      if (flows) *flows = std::move(s.flows);
      return s.psi;
    }
    AonResult a = all_or_nothing(net, t, trips, threads);
    if (flows) *flows = std::move(a.flows);
    return -a.cost;
  }
};

// Primal value of a flow: stable links contribute t_bar * f, the capacity
// excess is reported separately.
inline double primal_linearized(const std::vector<CostModel>& m, const std::vector<double>& f, double* residual) {
  double v = 0.0, r2 = 0.0;
  for (std::size_t e = 0; e < m.size(); ++e) {
    if (m[e].is_stable()) {
      v += m[e].t_bar * f[e];
      const double ex = std::max(0.0, f[e] - m[e].f_bar);
      if (std::isfinite(ex)) r2 += ex * ex;
    } else {
      v += sigma(m[e], f[e]);
    }
  }
  if (residual) *residual = std::sqrt(r2);
  return v;
}

inline double initial_primal(const std::vector<CostModel>& m, const std::vector<double>& f0) {
  double v = 0.0;
  bool finite = true;
  for (std::size_t e = 0; e < m.size(); ++e) {
    const double s = sigma(m[e], f0[e]);
    if (!std::isfinite(s)) finite = false;
    v += s;
  }
  if (finite) return v;
  v = 0.0;
  for (std::size_t e = 0; e < m.size(); ++e) v += m[e].t_bar * f0[e];
  return v;
}

inline double resolve_eps(const ModelSpec& spec, double primal0) {
  if (spec.eps > 0.0) return spec.eps;
  return spec.eps_rel * std::abs(primal0);
}

// Largest primal value any feasible flow can have: optimal flows are acyclic,
// so no link carries more than the total demand. Only BPR lets flow pass f_bar.
inline double primal_ceiling(const std::vector<CostModel>& m, double total) {
  double v = 0.0;
  for (const CostModel& c : m) v += sigma(c, c.family == CostFamily::BPR ? total : std::min(c.f_bar, total));
  return v;
}

// Flags infeasible demand: a dual value above every feasible primal value, a
// dual objective that keeps falling far below its start, or iterates pinned at
// the time ceiling while their links stay over capacity.
struct DivergenceWatch {
  double factor;
  int window;
  double ceiling = kInf;
  double initial = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> history;
  int pinned_run = 0;

  void check(double dual_min_value, const std::vector<CostModel>& m, const std::vector<double>& t,
             const std::vector<double>& t_max, const std::vector<double>& fbar) {
    if (-dual_min_value > ceiling * (1.0 + 1e-9) + 1e-9)
      throw Error(Errc::Infeasible, "dual value exceeds the cost of any flow within the capacities");
    if (std::isnan(initial)) initial = dual_min_value;
    history.push_back(dual_min_value);
    if (static_cast<int>(history.size()) > window) {
      bool monotone = true;
      for (std::size_t i = history.size() - window; i < history.size(); ++i)
        if (history[i] > history[i - 1]) monotone = false;
      const double scale = std::max(std::abs(initial), 1e-12);
      if (monotone && dual_min_value < -factor * scale)
        throw Error(Errc::Infeasible, "dual objective keeps decreasing past " + std::to_string(factor) +
                                          " times its initial magnitude: no flow fits within the capacities");
    }
    bool pinned = false;
    for (std::size_t e = 0; e < m.size(); ++e)
      if (m[e].is_stable() && std::isfinite(m[e].f_bar) && t[e] >= t_max[e] * (1.0 - 1e-12) &&
          fbar[e] > m[e].f_bar * (1.0 + 1e-6))
        pinned = true;
    pinned_run = pinned ? pinned_run + 1 : 0;
    if (pinned_run > window)
      throw Error(Errc::Infeasible, "link times sit at the ceiling while their flows exceed capacity: "
                                    "demand cannot be routed within the capacities");
  }
};

}  // namespace assign_detail

// Conditional-gradient method on the Beckmann potential with its primal-dual certificate.
inline EquilibriumReport solve_beckmann_fw(const Network& net, const TripTable& trips, const ModelSpec& spec) {
  using namespace assign_detail;
  const auto models = models_for(net, spec);
  for (std::size_t e = 0; e < models.size(); ++e)
    if (!models[e].has_finite_tau())
      throw Error(Errc::UnsupportedForFamily, "link " + std::to_string(e) + ": the conditional-gradient method needs "
                                                                          "a travel time defined for every flow");
  const int threads = resolve_threads(spec.threads);
  const std::size_t m = models.size();
  EquilibriumReport rep;
  rep.regime = spec.regime;
  rep.method = Method::FrankWolfe;
  rep.free_flow_times = net.free_flow_times();

  long calls = 0;
  auto aon = [&](const std::vector<double>& t) {
    ++calls;
    return all_or_nothing(net, t, trips, threads);
  };
  std::vector<double> f = aon(rep.free_flow_times).flows;
  rep.primal_initial = sum_sigma(models, f);
  const double eps = resolve_eps(spec, rep.primal_initial);
  rep.eps = eps;

  std::vector<double> t(m), fmax = f, y;
  double best_lower = -kInf;
  double L2 = 0.0, R2sq = 0.0;
  int k = 0;
  for (;; ++k) {
    for (std::size_t e = 0; e < m; ++e) t[e] = tau(models[e], f[e]);
    y = aon(t).flows;
    const double Psi = sum_sigma(models, f);
    double lin = 0.0, d2 = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      lin += t[e] * (y[e] - f[e]);
      d2 += (y[e] - f[e]) * (y[e] - f[e]);
      fmax[e] = std::max(fmax[e], f[e]);
    }
    best_lower = std::max(best_lower, Psi + lin);
    R2sq = std::max(R2sq, d2);
    for (std::size_t e = 0; e < m; ++e) L2 = std::max(L2, tau_prime(models[e], fmax[e]));
    rep.fw_bound.push_back(2.0 * L2 * R2sq / (k + 1.0));
    const double gap = Psi - best_lower;
    rep.trace.push_back({k, calls, Psi, best_lower, gap, L2});
    rep.primal_value = Psi;
    rep.dual_value = best_lower;
    rep.gap = gap;
    rep.flows = f;
    rep.times = t;
    rep.iterations = k;
    if (gap <= eps) {
      rep.converged = true;
      break;
    }
    if (k >= spec.max_iter || (spec.max_oracle_calls > 0 && calls >= spec.max_oracle_calls)) break;
    const double step = 2.0 / (k + 2.0);
    for (std::size_t e = 0; e < m; ++e) f[e] = (1.0 - step) * f[e] + step * y[e];
  }
  rep.fw_L2 = L2;
  rep.fw_R2sq = R2sq;
  rep.rel_gap = rep.primal_initial > 0.0 ? rep.gap / rep.primal_initial : 0.0;
  rep.oracle_calls = calls;
  rep.L_est = L2;
  return rep;
}

namespace assign_detail {

// Dual objective pieces at t for a recovered flow f.
struct GapParts {
  double dual_min = 0.0;  // smooth part + sum of conjugates at t
  double primal = 0.0;    // linearized primal + entropy + residual penalty
  double residual = 0.0;
};

// The radius weighting the capacity residual is a running estimate; it certifies
// a capacity excess only once it has stopped growing over the last few checks.
struct RadiusTracker {
  std::vector<double> history;
  int lag = 10;
  double growth = 1e-2;

  bool settled(double R, double residual, bool given) {
    history.push_back(R);
    if (residual <= 0.0 || given) return true;
    if (!(R > 0.0) || static_cast<int>(history.size()) <= lag) return false;
    return R <= (1.0 + growth) * history[history.size() - 1 - static_cast<std::size_t>(lag)];
  }
};

inline GapParts gap_parts(const std::vector<CostModel>& m, double dual_min, const std::vector<double>& f,
                          double entropy_avg, double R) {
  GapParts g;
  g.dual_min = dual_min;
  g.primal = primal_linearized(m, f, &g.residual) + entropy_avg + 3.0 * R * g.residual;
  return g;
}

}  // namespace assign_detail

// Composite mirror descent on the dual with weighted averaging of iterates and flows.
inline EquilibriumReport solve_sd_mirror(const Network& net, const TripTable& trips, const ModelSpec& spec) {
  using namespace assign_detail;
  const auto models = models_for(net, spec);
  const int threads = resolve_threads(spec.threads);
  const std::size_t m = models.size();
  const auto t_max = t_max_of(models, spec.t_max_factor);
  DualOracle oracle{net, trips, spec.gamma, spec.hop_bound, threads};

  EquilibriumReport rep;
  rep.regime = spec.regime;
  rep.method = Method::MirrorDescent;
  rep.gamma = spec.gamma;
  rep.free_flow_times = net.free_flow_times();
  const bool all_stable = std::all_of(models.begin(), models.end(), [](const CostModel& c) { return c.is_stable(); });

  std::vector<double> t = rep.free_flow_times, f;
  std::vector<double> tsum(m, 0.0), fsum(m, 0.0), tavg(m), favg(m), fcap(m);
  for (std::size_t e = 0; e < m; ++e) fcap[e] = models[e].f_bar;
  double S = 0.0, ent_sum = 0.0, M_run = 0.0, R_run = 0.0;
  DivergenceWatch watch{spec.divergence_factor, spec.divergence_window, primal_ceiling(models, trips.total())};
  RadiusTracker radius;
  double eps = 0.0;

  for (int k = 0;; ++k) {
    const double phi = oracle.eval(t, &f);
    if (k == 0) {
      rep.primal_initial = initial_primal(models, f);
      eps = resolve_eps(spec, rep.primal_initial);
      rep.eps = eps;
    }
    double ft = 0.0;
    for (std::size_t e = 0; e < m; ++e) ft += f[e] * t[e];
    const double ent = spec.gamma > 0.0 ? -phi - ft : 0.0;
    const double M = vec::norm2(f);
    M_run = std::max(M_run, M);
    const double Mk = all_stable ? M : M_run;
    const double step = Mk > 0.0 ? eps / (Mk * Mk) : 1.0;
    S += step;
    ent_sum += step * ent;
    for (std::size_t e = 0; e < m; ++e) {
      tsum[e] += step * t[e];
      fsum[e] += step * f[e];
    }
    watch.check(phi + sum_sigma_star(models, t), models, t, t_max, f);
    for (std::size_t e = 0; e < m; ++e) t[e] = prox_step(models[e], step, -step * f[e], t[e], t_max[e]);

    const bool last = k + 1 >= spec.max_iter || (spec.max_oracle_calls > 0 && oracle.calls >= spec.max_oracle_calls);
    if (k % spec.md_check_every != 0 && !last) continue;
    for (std::size_t e = 0; e < m; ++e) {
      tavg[e] = std::max(tsum[e] / S, models[e].t_bar);
      favg[e] = fsum[e] / S;
    }
    R_run = std::max({R_run, std::sqrt(0.5 * vec::dist2(tavg, rep.free_flow_times)),
                      std::sqrt(0.5 * vec::dist2(t, rep.free_flow_times))});
    const double R = spec.R > 0.0 ? spec.R : R_run;
    const double dual_min = oracle.eval(tavg, nullptr) + sum_sigma_star(models, tavg);
    GapParts g = gap_parts(models, dual_min, favg, ent_sum / S, R);
    const double gap = g.primal + g.dual_min;
    rep.trace.push_back({k, oracle.calls, g.primal, -g.dual_min, gap, std::numeric_limits<double>::quiet_NaN()});
    rep.flows = favg;
    rep.times = tavg;
    rep.primal_value = g.primal;
    rep.dual_value = -g.dual_min;
    rep.gap = gap;
    rep.feasibility_residual = g.residual;
    rep.R_used = R;
    rep.entropy = ent_sum / S;
    rep.iterations = k;
    const bool feas_ok = (spec.eps_feas <= 0.0 || g.residual <= spec.eps_feas) &&
                         radius.settled(R, g.residual, spec.R > 0.0);
    if (gap <= eps && feas_ok) {
      rep.converged = true;
      break;
    }
    if (last) break;
  }
  rep.flows_clipped = rep.flows;
  for (std::size_t e = 0; e < m; ++e)
    if (models[e].is_stable()) rep.flows_clipped[e] = std::min(models[e].f_bar, rep.flows[e]);
  rep.rel_gap = rep.primal_initial > 0.0 ? rep.gap / rep.primal_initial : 0.0;
  rep.oracle_calls = oracle.calls;
  return rep;
}

// Universal similar-triangles method on the dual, with flows recovered as the
// alpha-weighted average of oracle flows.
inline EquilibriumReport solve_dual_umst(const Network& net, const TripTable& trips, const ModelSpec& spec) {
  using namespace assign_detail;
  const auto models = models_for(net, spec);
  const int threads = resolve_threads(spec.threads);
  const std::size_t m = models.size();
  const auto t_max = t_max_of(models, spec.t_max_factor);
  DualOracle oracle{net, trips, spec.gamma, spec.hop_bound, threads};

  EquilibriumReport rep;
  rep.regime = spec.regime;
  rep.method = Method::Umst;
  rep.gamma = spec.gamma;
  rep.free_flow_times = net.free_flow_times();

  {
    std::vector<double> f0;
    oracle.eval(rep.free_flow_times, &f0);
    rep.primal_initial = initial_primal(models, f0);
  }
  const double eps = resolve_eps(spec, rep.primal_initial);
  rep.eps = eps;

  CompositeProblem p;
  p.value = [&](const Vec& t) { return oracle.eval(t, nullptr); };
  p.value_grad = [&](const Vec& t, Vec& g) {
    const double v = oracle.eval(t, &g);
    for (double& x : g) x = -x;
    return v;
  };
  p.composite = [&](const Vec& t) { return sum_sigma_star(models, t); };
  p.prox = [&](double w, const Vec& c, Vec& out) {
    out.resize(m);
    for (std::size_t e = 0; e < m; ++e) out[e] = prox_step(models[e], w, 0.0, c[e], t_max[e]);
  };

  std::vector<double> fsum(m, 0.0), fbar(m);
  double ent_sum = 0.0, R_run = 0.0;
  DivergenceWatch watch{spec.divergence_factor, spec.divergence_window, primal_ceiling(models, trips.total())};
  RadiusTracker radius;
  bool done = false;

  AccelOptions o;
  o.L0 = spec.L0;
  o.eps = eps;
  o.max_iter = spec.max_iter;
  o.stop = [&](AccelState& st) {
    // Accepted step: flows at y are minus the gradient.
    double gy = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      fsum[e] -= st.alpha * st.grad_y[e];
      gy += st.grad_y[e] * st.y[e];
    }
    if (spec.gamma > 0.0) ent_sum += st.alpha * (-st.phi_y + gy);
    for (std::size_t e = 0; e < m; ++e) fbar[e] = fsum[e] / st.A;
    R_run = std::max(R_run, std::sqrt(0.5 * vec::dist2(st.x, rep.free_flow_times)));
    const double R = spec.R > 0.0 ? spec.R : R_run;
    GapParts g = gap_parts(models, st.F_x, fbar, ent_sum / st.A, R);
    const double gap = g.primal + g.dual_min;
    st.gap = gap;
    rep.trace.push_back({st.k, oracle.calls, g.primal, -g.dual_min, gap, st.L});
    rep.primal_value = g.primal;
    rep.dual_value = -g.dual_min;
    rep.gap = gap;
    rep.feasibility_residual = g.residual;
    rep.R_used = R;
    rep.entropy = ent_sum / st.A;
    rep.flows = fbar;
    rep.times = st.x;
    rep.iterations = st.k;
    rep.L_est = st.L;
    watch.check(st.F_x, models, st.x, t_max, fbar);
    const bool feas_ok = (spec.eps_feas <= 0.0 || g.residual <= spec.eps_feas) &&
                         radius.settled(R, g.residual, spec.R > 0.0);
    done = gap <= eps && feas_ok;
    return done || (spec.max_oracle_calls > 0 && oracle.calls >= spec.max_oracle_calls);
  };

  AccelResult r = umst_run(p, rep.free_flow_times, o);
  rep.converged = done;
  rep.fn_calls = r.state.fn_calls;
  rep.grad_calls = r.state.grad_calls;
  rep.oracle_calls = oracle.calls;
  rep.rel_gap = rep.primal_initial > 0.0 ? rep.gap / rep.primal_initial : 0.0;
  return rep;
}

// Gap between a dual point t and a flow f under the given model:
// dual objective at t plus (linearized) primal value of f, plus the entropy
// term and the weighted capacity residual.
inline double duality_gap(const Network& net, const TripTable& trips, const ModelSpec& spec,
                          const std::vector<double>& t, const std::vector<double>& f, double entropy = 0.0,
                          double R = 0.0) {
  using namespace assign_detail;
  const auto models = models_for(net, spec);
  DualOracle oracle{net, trips, spec.gamma, spec.hop_bound, resolve_threads(spec.threads)};
  const double dual_min = oracle.eval(t, nullptr) + sum_sigma_star(models, t);
  GapParts g = gap_parts(models, dual_min, f, entropy, R);
  return g.primal + g.dual_min;
}

// Predicted arithmetic cost of the dual method for each regime cell
// (constant factors omitted). S sources, H hop bound, n links, d total demand.
inline double predicted_operations(Regime regime, double S, double H, double n, double d, double R2, double gamma,
                                   double eps, double omega = 0.0) {
  if (is_stochastic(regime)) return S * H * n * std::sqrt(H * d * R2 / (gamma * eps));
  if (omega > 0.0) return S * H * n * d / eps * std::sqrt(H * R2 * omega);  // regularized at gamma*
  return S * n * std::log(std::max(n, 2.0)) * H * d * d * R2 / (eps * eps);
}

}  // namespace equiflow
