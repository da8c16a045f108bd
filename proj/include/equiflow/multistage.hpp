#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "accel.hpp"
#include "demand.hpp"
#include "network.hpp"
#include "paths.hpp"
#include "softpaths.hpp"

namespace equiflow {

// Two-stage model: an entropy trip distribution over route costs on top of a
// capacity-constrained (stable dynamics) assignment. Marginals L, W sum to one
// and capacities are in the same normalized units.
struct MultistageSpec {
  std::vector<int> origins;       // node ids of the rows
  std::vector<int> destinations;  // node ids of the columns
  std::vector<double> L, W;
  std::vector<double> capacity;   // per link; empty uses link capacities
  double beta = 1.0;
  double gamma = 0.0;             // 0: shortest times, > 0: smoothed times
  double eps = 1e-3;
  int max_iter = 20000;
  double t_max_factor = 100.0;
  int hop_bound = 0;
  int threads = 0;
  double L0 = 1.0;
  int max_sweeps = 100000;
};

struct InnerOracleResult {
  double value = 0.0;     // Phi(x~, t) - 2 delta
  double Phi = 0.0;       // dual objective at the current balancing multipliers
  std::vector<double> grad;
  std::vector<double> loaded;  // link flows of the normalized trip matrix
  Matrix trips;                // normalized trip matrix
  Matrix cost;                 // route costs between rows and columns
  std::vector<double> lambda, mu;
  int sweeps = 0;
  double delta = 0.0;
};

namespace multistage_detail {

inline std::vector<double> capacities(const Network& net, const MultistageSpec& s) {
  if (!s.capacity.empty()) {
    if (static_cast<int>(s.capacity.size()) != net.num_links())
      throw Error(Errc::InvalidArgument, "capacity vector size differs from link count");
    return s.capacity;
  }
  return net.capacities();
}

inline TripTable to_trips(const MultistageSpec& s, const Matrix& x) {
  TripTable t;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      if (x(i, j) > 0.0) t.add(s.origins[i], s.destinations[j], x(i, j));
  return t;
}

// Route costs (before scaling by beta) between every row and column.
inline Matrix route_costs(const Network& net, const MultistageSpec& s, const std::vector<double>& t) {
  Matrix C(s.origins.size(), s.destinations.size());
  const int H = s.hop_bound > 0 ? s.hop_bound : net.hop_bound();
  parallel_for(s.origins.size(), resolve_threads(s.threads), [&](std::size_t i) {
    const int o = s.origins[i];
    if (s.gamma > 0.0) {
      SoftTables T = forward_tables(net, t, s.gamma, H, o);
      for (std::size_t j = 0; j < s.destinations.size(); ++j) {
        const int d = s.destinations[j];
        C(i, j) = d == o ? 0.0 : -T.b[H][d];
      }
    } else {
      ShortestPathTree tree = dijkstra(net, t, o, true);
      for (std::size_t j = 0; j < s.destinations.size(); ++j) C(i, j) = tree.dist[s.destinations[j]];
    }
  });
  return C;
}

}  // namespace multistage_detail

// Inexact first-order information for the outer problem in t: balance the trip
// matrix for the route costs at t until the inner stopping rule holds for delta,
// then return (Phi - 2 delta, gradient at the approximate multipliers).
inline InnerOracleResult inner_oracle(const Network& net, const MultistageSpec& s, const std::vector<double>& t,
                                      double delta, const std::vector<double>& lambda0 = {},
                                      const std::vector<double>& mu0 = {}) {
  using namespace multistage_detail;
  check_nonnegative(t);
  const auto cap = capacities(net, s);
  InnerOracleResult r;
  r.delta = delta;
  r.cost = route_costs(net, s, t);
  BalancingOptions bo;
  bo.delta = delta;
  bo.max_sweeps = s.max_sweeps;
  bo.lambda0 = lambda0;
  bo.mu0 = mu0;
  BalancingResult b = balancing_run(r.cost, s.beta, s.L, s.W, bo);
  r.lambda = b.lambda;
  r.mu = b.mu;
  r.sweeps = b.sweeps;

  // Phi = log sum exp(-beta C + lambda + mu) - <lambda, L> - <mu, W> + beta <cap, t - t_bar>
  const double total = b.d.sum();
  double Phi = std::log(total);
  for (std::size_t i = 0; i < s.L.size(); ++i) Phi -= b.lambda[i] * s.L[i];
  for (std::size_t j = 0; j < s.W.size(); ++j) Phi -= b.mu[j] * s.W[j];
  const std::size_t m = static_cast<std::size_t>(net.num_links());
  for (std::size_t e = 0; e < m; ++e)
    if (std::isfinite(cap[e])) Phi += s.beta * cap[e] * (t[e] - net.link(static_cast<int>(e)).free_flow_time);
  r.Phi = Phi;
  r.value = Phi - 2.0 * delta;

  r.trips = b.d;
  for (double& v : r.trips.data) v /= total;
  TripTable tt = to_trips(s, r.trips);
  if (s.gamma > 0.0) r.loaded = soft_evaluate(net, t, tt, {s.gamma, s.hop_bound, s.threads}).flows;
  else r.loaded = all_or_nothing(net, t, tt, resolve_threads(s.threads)).flows;
  r.grad.assign(m, 0.0);
  for (std::size_t e = 0; e < m; ++e)
    r.grad[e] = std::isfinite(cap[e]) ? s.beta * (cap[e] - r.loaded[e]) : -s.beta * r.loaded[e];
  return r;
}

struct MultistageReport {
  std::vector<double> times;
  std::vector<double> flows;
  Matrix trips;
  std::vector<double> gap_trace;
  std::vector<double> delta_trace;
  std::vector<int> sweep_trace;
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  long oracle_calls = 0;
  bool converged = false;
};

// Outer accelerated method in t over [t_bar, t_max] with the inexact oracle
// and a decreasing accuracy schedule delta_k = eps / (8 (k + 1)).
inline MultistageReport solve_multistage(const Network& net, const MultistageSpec& s) {
  using namespace multistage_detail;
  if (s.origins.size() != s.L.size() || s.destinations.size() != s.W.size())
    throw Error(Errc::InvalidArgument, "marginal sizes differ from origin/destination lists");
  const auto cap = capacities(net, s);
  const std::size_t m = static_cast<std::size_t>(net.num_links());
  std::vector<double> lo(m), hi(m);
  for (std::size_t e = 0; e < m; ++e) {
    lo[e] = net.link(static_cast<int>(e)).free_flow_time;
    hi[e] = std::isfinite(cap[e]) ? s.t_max_factor * lo[e] : lo[e];
  }

  MultistageReport rep;
  std::vector<double> lam, mu;
  double cur_delta = s.eps / 8.0;
  int cur_k = 0;
  auto schedule = [&](int k) {
    cur_k = k;
    cur_delta = s.eps / (8.0 * (k + 1));
    return 6.0 * cur_delta;
  };
  auto call = [&](const Vec& t) {
    InnerOracleResult r = inner_oracle(net, s, t, cur_delta, lam, mu);
    lam = r.lambda;
    mu = r.mu;
    rep.oracle_calls++;
    rep.sweep_trace.push_back(r.sweeps);
    rep.delta_trace.push_back(cur_delta);
    return r;
  };

  CompositeProblem p;
  p.value = [&](const Vec& t) { return call(t).value; };
  p.value_grad = [&](const Vec& t, Vec& g) {
    InnerOracleResult r = call(t);
    g = std::move(r.grad);
    return r.value;
  };
  p.prox = [&](double, const Vec& c, Vec& out) {
    out.resize(m);
    for (std::size_t e = 0; e < m; ++e) out[e] = std::clamp(c[e], lo[e], hi[e]);
  };

  AccelOptions o;
  o.L0 = s.L0;
  o.eps = s.eps;
  o.max_iter = s.max_iter;
  o.stop = [&](AccelState& st) {
    // Lower bound from the accumulated linear models, minimized over the box.
    double lb = st.c0;
    for (std::size_t e = 0; e < m; ++e) lb += std::min(st.lin[e] * lo[e], st.lin[e] * hi[e]);
    lb /= st.A;
    const double upper = st.F_x + 6.0 * st.delta;
    st.gap = upper - lb;
    rep.gap_trace.push_back(st.gap);
    rep.gap = st.gap;
    rep.value = st.F_x;
    rep.iterations = st.k;
    return st.gap <= s.eps;
  };

  AccelResult r = umst_inexact_run(p, lo, o, schedule);
  rep.converged = r.converged;
  rep.times = r.state.x;
  InnerOracleResult fin = inner_oracle(net, s, rep.times, s.eps / (8.0 * (cur_k + 1)), lam, mu);
  rep.flows = fin.loaded;
  rep.trips = fin.trips;
  return rep;
}

}  // namespace equiflow
