#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "equiflow/equiflow.hpp"
#include "equiflow/report.hpp"

using namespace equiflow;

namespace {

struct SolveArgs {
  std::string net, trips, regime = "beckmann", method, family = "bpr", out, trace;
  double eps = 0.0, eps_rel = 1e-3, eps_feas = 0.0, gamma = 0.0, t_max_factor = 100.0, R = 0.0;
  int max_iter = 1000000, hop_bound = 0, threads = 0;
  long max_calls = 0;
};

struct MatrixArgs {
  std::string costs, origins, dests, out;
  double beta = 1.0, tol = 1e-8, target = 0.0;
  int max_sweeps = 1000, max_outer = 20;
};

struct MultistageArgs {
  std::string net, trips, out;
  double beta = 1.0, gamma = 0.0, eps = 1e-3, t_max_factor = 100.0;
  int max_iter = 20000, threads = 0;
};

struct ModalArgs {
  ModalParams p;
  double x0 = 0.5, tol = 1e-3;
  int max_iter = 100;
  std::string trace;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::InvalidArgument, "cannot write " + path);
  return os;
}

Regime parse_regime(const std::string& s) {
  if (s == "beckmann") return Regime::Beckmann;
  if (s == "sd") return Regime::StableDynamics;
  if (s == "stoch-beckmann") return Regime::StochasticBeckmann;
  if (s == "stoch-sd") return Regime::StochasticSD;
  throw Error(Errc::InvalidArgument, "unknown regime " + s);
}

CostFamily parse_family(const std::string& s) {
  if (s == "bpr") return CostFamily::BPR;
  if (s == "logbarrier") return CostFamily::LogBarrier;
  if (s == "inversebarrier") return CostFamily::InverseBarrier;
  throw Error(Errc::InvalidArgument, "unknown cost family " + s);
}

int run_solve(const SolveArgs& a) {
  const Regime regime = parse_regime(a.regime);
  NetParseOptions po;
  po.family = is_stable_regime(regime) ? CostFamily::StableDynamics : parse_family(a.family);
  Network net = read_tntp_net(a.net, po);
  if (a.hop_bound > 0) net.set_hop_bound(a.hop_bound);
  TripTable trips = read_tntp_trips(a.trips, net.num_nodes());
  validate(net, trips);

  std::string method = a.method.empty() ? (regime == Regime::Beckmann ? "fw" : "umst") : a.method;
  ModelSpec spec;
  spec.regime = regime;
  spec.gamma = a.gamma;
  spec.eps = a.eps;
  spec.eps_rel = a.eps_rel;
  spec.eps_feas = a.eps_feas;
  spec.t_max_factor = a.t_max_factor;
  spec.R = a.R;
  spec.max_iter = a.max_iter;
  spec.max_oracle_calls = a.max_calls;
  spec.threads = a.threads;

  EquilibriumReport rep;
  if (method == "fw") {
    if (regime != Regime::Beckmann) throw Error(Errc::InvalidArgument, "method fw needs the beckmann regime");
    rep = solve_beckmann_fw(net, trips, spec);
  } else if (method == "md") {
    rep = solve_sd_mirror(net, trips, spec);
  } else if (method == "umst") {
    rep = solve_dual_umst(net, trips, spec);
  } else {
    throw Error(Errc::InvalidArgument, "unknown method " + method);
  }

  const std::string text = to_json(rep, net).dump(2) + "\n";
  if (a.out.empty()) std::cout << text;
  else open_out(a.out) << text;
  if (!a.trace.empty()) {
    auto os = open_out(a.trace);
    write_trace_csv(os, rep);
  }
  std::fprintf(stderr, "gap=%.10g relative_gap=%.10g iterations=%d oracle_calls=%ld converged=%s\n", rep.gap,
               rep.rel_gap, rep.iterations, rep.oracle_calls, rep.converged ? "yes" : "no");
  return 0;
}

int run_trip_matrix(const MatrixArgs& a) {
  Matrix C = read_matrix_csv(a.costs);
  auto L = read_vector_csv(a.origins);
  auto W = read_vector_csv(a.dests);
  BalancingOptions bo;
  bo.tol = a.tol;
  bo.max_sweeps = a.max_sweeps;
  BalancingResult r = balancing_run(C, a.beta, L, W, bo);
  if (a.out.empty()) write_matrix_csv(std::cout, r.d);
  else {
    auto os = open_out(a.out);
    write_matrix_csv(os, r.d);
  }
  std::fprintf(stderr, "sweeps=%d residual=%.3e mean_cost=%.10g\n", r.sweeps, r.residual, mean_cost(r.d, C));
  return 0;
}

int run_calibrate(const MatrixArgs& a) {
  Matrix C = read_matrix_csv(a.costs);
  auto L = read_vector_csv(a.origins);
  auto W = read_vector_csv(a.dests);
  HymanOptions ho;
  ho.max_outer = a.max_outer;
  HymanResult r = hyman_calibrate(C, L, W, a.target, ho);
  std::printf("beta=%.12g average_cost=%.12g iterations=%d\n", r.beta, r.average_cost, r.iterations);
  if (!a.out.empty()) {
    auto os = open_out(a.out);
    write_matrix_csv(os, r.balanced.d);
  }
  std::fprintf(stderr, "outer_iterations=%d bisection_steps=%d\n", r.iterations, r.bisection_steps);
  return 0;
}

// Marginals and capacities are normalized by the total demand of the trips file.
int run_multistage(const MultistageArgs& a) {
  NetParseOptions po;
  po.family = CostFamily::StableDynamics;
  Network net = read_tntp_net(a.net, po);
  TripTable trips = read_tntp_trips(a.trips, net.num_nodes());
  const double total = trips.total();
  if (!(total > 0.0)) throw Error(Errc::InvalidArgument, "trips file carries no demand");
  std::vector<double> out_sum(static_cast<std::size_t>(net.num_nodes()), 0.0), in_sum = out_sum;
  for (const OD& od : trips.pairs()) {
    out_sum[od.origin] += od.demand;
    in_sum[od.dest] += od.demand;
  }
  MultistageSpec s;
  for (int v = 0; v < net.num_nodes(); ++v) {
    if (out_sum[v] > 0) {
      s.origins.push_back(v);
      s.L.push_back(out_sum[v] / total);
    }
    if (in_sum[v] > 0) {
      s.destinations.push_back(v);
      s.W.push_back(in_sum[v] / total);
    }
  }
  s.capacity = net.capacities();
  for (double& c : s.capacity) c /= total;
  s.beta = a.beta;
  s.gamma = a.gamma;
  s.eps = a.eps;
  s.max_iter = a.max_iter;
  s.t_max_factor = a.t_max_factor;
  s.threads = a.threads;
  MultistageReport r = solve_multistage(net, s);
  const std::string text = to_json(r, net, s).dump(2) + "\n";
  if (a.out.empty()) std::cout << text;
  else open_out(a.out) << text;
  std::fprintf(stderr, "gap=%.10g iterations=%d oracle_calls=%ld converged=%s\n", r.gap, r.iterations,
               r.oracle_calls, r.converged ? "yes" : "no");
  return 0;
}

int run_modal(const ModalArgs& a) {
  ModalResult r = fixed_point(a.p, a.x0, a.tol, a.max_iter);
  std::printf("x*=%.6f iterations=%d contraction=%.6f\n", r.x, r.iterations, r.contraction);
  if (!r.contraction_verified)
    std::fprintf(stderr, "warning: the split map is not a contraction for these parameters\n");
  if (!a.trace.empty()) {
    auto os = open_out(a.trace);
    write_trace_csv(os, r);
  }
  return r.converged ? 0 : 1;
}

int run_validate(const std::string& net_path, const std::string& trips_path) {
  Network net = read_tntp_net(net_path);
  TripTable trips = read_tntp_trips(trips_path, net.num_nodes());
  Diagnostics d = validate(net, trips);
  std::printf("nodes=%d links=%d od_pairs=%zu total_demand=%.10g dangling_nodes=%zu\n", net.num_nodes(),
              net.num_links(), d.od_pairs, d.total_demand, d.dangling_nodes.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic equilibrium and demand models"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Compute a traffic equilibrium");
  solve->add_option("--net", sa.net, "TNTP network file")->required();
  solve->add_option("--trips", sa.trips, "TNTP trips file")->required();
  solve->add_option("--regime", sa.regime, "beckmann | sd | stoch-beckmann | stoch-sd");
  solve->add_option("--method", sa.method, "fw | md | umst");
  solve->add_option("--family", sa.family, "bpr | logbarrier | inversebarrier (beckmann regimes)");
  solve->add_option("--eps", sa.eps, "Absolute gap target");
  solve->add_option("--eps-rel", sa.eps_rel, "Gap target relative to the first primal value");
  solve->add_option("--eps-feas", sa.eps_feas, "Capacity residual target");
  solve->add_option("--gamma", sa.gamma, "Route-choice temperature");
  solve->add_option("--max-iter", sa.max_iter, "Iteration limit");
  solve->add_option("--max-calls", sa.max_calls, "Oracle call limit");
  solve->add_option("--t-max-factor", sa.t_max_factor, "Time ceiling as a multiple of free-flow time");
  solve->add_option("--R", sa.R, "Radius weighting the capacity residual");
  solve->add_option("--hop-bound", sa.hop_bound, "Maximum links per route for smoothed costs");
  solve->add_option("--threads", sa.threads, "Oracle threads (default EQUIFLOW_THREADS or 1)");
  solve->add_option("--out", sa.out, "JSON report path (stdout if omitted)");
  solve->add_option("--trace", sa.trace, "CSV gap trace path");

  MatrixArgs ma;
  auto* tm = app.add_subcommand("trip-matrix", "Balance an entropy trip matrix");
  tm->add_option("--costs", ma.costs, "Cost matrix CSV")->required();
  tm->add_option("--origins", ma.origins, "Origin totals CSV")->required();
  tm->add_option("--dests", ma.dests, "Destination totals CSV")->required();
  tm->add_option("--beta", ma.beta, "Cost sensitivity");
  tm->add_option("--tol", ma.tol, "Marginal residual tolerance");
  tm->add_option("--max-sweeps", ma.max_sweeps, "Sweep limit");
  tm->add_option("--out", ma.out, "Output CSV (stdout if omitted)");

  MatrixArgs ca;
  auto* cb = app.add_subcommand("calibrate-beta", "Fit beta to a target average trip cost");
  cb->add_option("--costs", ca.costs, "Cost matrix CSV")->required();
  cb->add_option("--origins", ca.origins, "Origin totals CSV")->required();
  cb->add_option("--dests", ca.dests, "Destination totals CSV")->required();
  cb->add_option("--target", ca.target, "Target average cost")->required();
  cb->add_option("--max-outer", ca.max_outer, "Outer iteration limit");
  cb->add_option("--out", ca.out, "Calibrated trip matrix CSV");

  MultistageArgs msa;
  auto* ms = app.add_subcommand("multistage", "Joint trip distribution and stable-dynamics assignment");
  ms->add_option("--net", msa.net, "TNTP network file")->required();
  ms->add_option("--trips", msa.trips, "TNTP trips file giving the marginals")->required();
  ms->add_option("--beta", msa.beta, "Cost sensitivity");
  ms->add_option("--gamma", msa.gamma, "Route-choice temperature");
  ms->add_option("--eps", msa.eps, "Outer gap target");
  ms->add_option("--max-iter", msa.max_iter, "Outer iteration limit");
  ms->add_option("--t-max-factor", msa.t_max_factor, "Time ceiling as a multiple of free-flow time");
  ms->add_option("--threads", msa.threads, "Oracle threads");
  ms->add_option("--out", msa.out, "JSON report path (stdout if omitted)");

  ModalArgs mo;
  auto* md = app.add_subcommand("modal-split", "Day-to-day car/transit split fixed point");
  md->add_option("--a", mo.p.a, "Car fixed cost");
  md->add_option("--b1", mo.p.b1, "Transit fare");
  md->add_option("--b2", mo.p.b2, "Transit time");
  md->add_option("--t0", mo.p.T0, "Free car time");
  md->add_option("--gamma", mo.p.gamma, "Congestion coefficient");
  md->add_option("--eta", mo.p.eta, "Exponent of the share law");
  md->add_option("--p-min", mo.p.p_min, "Lower bound of the time value");
  md->add_option("--p-max", mo.p.p_max, "Upper bound of the time value");
  md->add_option("--x0", mo.x0, "Initial car share");
  md->add_option("--tol", mo.tol, "Step tolerance");
  md->add_option("--max-iter", mo.max_iter, "Iteration limit");
  md->add_option("--trace", mo.trace, "CSV trace of the shares");

  std::string vnet, vtrips;
  auto* val = app.add_subcommand("validate", "Check network and trips files");
  val->add_option("--net", vnet, "TNTP network file")->required();
  val->add_option("--trips", vtrips, "TNTP trips file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve) return run_solve(sa);
    if (*tm) return run_trip_matrix(ma);
    if (*cb) return run_calibrate(ca);
    if (*ms) return run_multistage(msa);
    if (*md) return run_modal(mo);
    if (*val) return run_validate(vnet, vtrips);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::Infeasible ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
