#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace equiflow {

using Vec = std::vector<double>;

namespace vec {
inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}
// out = (wa * a + wb * b) / (wa + wb)
inline void blend(double wa, const Vec& a, double wb, const Vec& b, Vec& out) {
  const double s = wa + wb;
  out.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (wa * a[i] + wb * b[i]) / s;
}
inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
}  // namespace vec

// min over Q of Phi(x) + h(x) with Phi convex and smooth (or Hoelder continuous),
// h convex and prox-friendly. prox(w, c, out) must return argmin_Q w*h(x) + |x - c|^2 / 2.
struct CompositeProblem {
  std::function<double(const Vec&)> value;
  std::function<double(const Vec&, Vec&)> value_grad;
  std::function<double(const Vec&)> composite;
  std::function<void(double, const Vec&, Vec&)> prox;

  double h(const Vec& x) const { return composite ? composite(x) : 0.0; }
  void prox_of(double w, const Vec& c, Vec& out) const {
    if (prox) prox(w, c, out);
    else out = c;
  }
};

struct TraceRow {
  int k = 0;
  double A = 0.0;
  double L = 0.0;
  double F = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  long fn_calls = 0;
  long grad_calls = 0;
};

struct AccelState {
  int k = 0;
  double A = 0.0;
  double alpha = 0.0;
  double L = 0.0;
  Vec x, u, y, grad_y;  // y and grad_y belong to the last accepted step
  double phi_y = 0.0;
  double Phi_x = 0.0;  // smooth part at x
  double F_x = 0.0;    // Phi(x) + h(x)
  long fn_calls = 0;
  long grad_calls = 0;
  // Estimate-sequence bookkeeping: phi_k(x) = |x - y0|^2/2 + c0 + <lin, x>
  //   + mu/2 (A|x|^2 - 2<ysum, x>) + A h(x).
  Vec y0, lin, ysum;
  double c0 = 0.0;
  double mu = 0.0;
  double phi_star = 0.0;  // phi_k(u_k)
  double slack = 0.0;     // accumulated additive slack of the acceptance tests
  double delta = 0.0;     // oracle error used in the last step
  double gap = std::numeric_limits<double>::quiet_NaN();  // optional, set by stop callbacks
  std::vector<TraceRow> trace;
};

struct AccelOptions {
  double L0 = 1.0;
  double mu = 0.0;    // strong convexity of Phi
  double eps = 0.0;   // additive slack of the line-search test
  int max_iter = 1000;
  double stall_factor = 1e12;
  double grad_map_tol = 0.0;  // fallback stop: L*|x - y| <= tol
  std::function<double(int)> delta;               // inexact-oracle error at step k
  std::function<bool(AccelState&)> stop;          // return true to stop
  bool adaptive = true;
};

struct AccelResult {
  AccelState state;
  bool converged = false;
  int iterations = 0;
  const Vec& x() const { return state.x; }
  double F() const { return state.F_x; }
};

// alpha solving L alpha^2 = (A + alpha)(1 + A mu).
inline double alpha_next(double A, double L, double mu = 0.0) {
  const double s = 1.0 + A * mu;
  return s / (2.0 * L) + std::sqrt(s * s / (4.0 * L * L) + A * s / L);
}

namespace accel_detail {

inline double phi_at(const AccelState& st, const CompositeProblem& p, const Vec& x) {
  double v = 0.5 * vec::dist2(x, st.y0) + st.c0 + vec::dot(st.lin, x) + st.A * p.h(x);
  if (st.mu > 0.0) v += 0.5 * st.mu * (st.A * vec::dot(x, x) - 2.0 * vec::dot(st.ysum, x));
  return v;
}

// argmin of the estimate function with weight A over the given sums.
inline void argmin_phi(const CompositeProblem& p, const Vec& y0, const Vec& lin, const Vec& ysum, double A, double mu,
                       Vec& out) {
  const double S = 1.0 + mu * A;
  Vec c(y0.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (y0[i] - lin[i] + mu * ysum[i]) / S;
  p.prox_of(A / S, c, out);
}

inline void record(AccelState& st) {
  st.trace.push_back({st.k, st.A, st.L, st.F_x, st.gap, st.fn_calls, st.grad_calls});
}

}  // namespace accel_detail

// Similar-triangles method. adaptive=false keeps L fixed (basic method),
// adaptive=true runs the universal backtracking on L.
inline AccelResult accel_run(const CompositeProblem& p, const Vec& start, const AccelOptions& o) {
  using namespace accel_detail;
  AccelResult res;
  AccelState& st = res.state;
  st.mu = o.mu;
  st.y0 = start;
  const std::size_t n = start.size();
  const double L_cap = o.L0 * o.stall_factor;
  auto delta_at = [&](int k) { return o.delta ? o.delta(k) : 0.0; };

  double L = o.L0;
  Vec gy(n), x(n), u(n);
  const double phi_y0 = p.value_grad(st.y0, gy);
  st.fn_calls++;
  st.grad_calls++;
  const double d0 = delta_at(0);
  for (;;) {
    const double a0 = 1.0 / L;
    Vec lin(n), ysum(n);
    for (std::size_t i = 0; i < n; ++i) {
      lin[i] = a0 * gy[i];
      ysum[i] = a0 * st.y0[i];
    }
    argmin_phi(p, st.y0, lin, ysum, a0, o.mu, u);
    x = u;
    const double Phi_x = p.value(x);
    st.fn_calls++;
    const double model = phi_y0 + vec::dot(gy, x) - vec::dot(gy, st.y0) + 0.5 * L * vec::dist2(x, st.y0);
    if (o.adaptive && Phi_x > model + 0.5 * o.eps + d0) {
      L *= 2.0;
      if (L > L_cap) throw Error(Errc::LineSearchStall, "L estimate exceeded " + std::to_string(L_cap));
      continue;
    }
    st.A = st.alpha = a0;
    st.L = L;
    st.x = x;
    st.u = u;
    st.y = st.y0;
    st.grad_y = gy;
    st.phi_y = phi_y0;
    st.Phi_x = Phi_x;
    st.F_x = Phi_x + p.h(x);
    st.lin = std::move(lin);
    st.ysum = std::move(ysum);
    st.c0 = a0 * (phi_y0 - vec::dot(gy, st.y0) + 0.5 * o.mu * vec::dot(st.y0, st.y0));
    st.delta = d0;
    st.slack = a0 * (0.5 * o.eps + d0);
    st.phi_star = phi_at(st, p, st.u);
    break;
  }
  st.k = 0;
  st.gap = std::numeric_limits<double>::quiet_NaN();
  if (o.stop && o.stop(st)) {
    record(st);
    res.converged = true;
    return res;
  }
  record(st);

  Vec y(n), lin2(n), ysum2(n), u2(n), x2(n);
  for (int k = 1; k <= o.max_iter; ++k) {
    if (o.adaptive) L = st.L / 2.0;
    const double dk = delta_at(k);
    // Under strong convexity A grows geometrically and can overflow; the iterate is exact by then.
    if (!std::isfinite(alpha_next(st.A, L, o.mu) * (1.0 + o.mu * st.A) * 4.0)) {
      res.converged = true;
      break;
    }
    for (;;) {
      const double alpha = alpha_next(st.A, L, o.mu);
      const double A2 = st.A + alpha;
      vec::blend(alpha, st.u, st.A, st.x, y);
      const double phi_y = p.value_grad(y, gy);
      st.fn_calls++;
      st.grad_calls++;
      for (std::size_t i = 0; i < n; ++i) {
        lin2[i] = st.lin[i] + alpha * gy[i];
        ysum2[i] = st.ysum[i] + alpha * y[i];
      }
      argmin_phi(p, st.y0, lin2, ysum2, A2, o.mu, u2);
      vec::blend(alpha, u2, st.A, st.x, x2);
      const double Phi_x = p.value(x2);
      st.fn_calls++;
      if (o.adaptive) {
        double lin_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) lin_diff += gy[i] * (x2[i] - y[i]);
        const double model = phi_y + lin_diff + 0.5 * L * vec::dist2(x2, y) + alpha / (2.0 * A2) * o.eps + dk;
        if (Phi_x > model) {
          L *= 2.0;
          if (L > L_cap) throw Error(Errc::LineSearchStall, "L estimate exceeded " + std::to_string(L_cap));
          continue;
        }
      }
      st.c0 += alpha * (phi_y - vec::dot(gy, y) + 0.5 * o.mu * vec::dot(y, y));
      st.lin.swap(lin2);
      st.ysum.swap(ysum2);
      st.u.swap(u2);
      st.x.swap(x2);
      st.y = y;
      st.grad_y = gy;
      st.phi_y = phi_y;
      st.alpha = alpha;
      st.A = A2;
      st.L = L;
      st.Phi_x = Phi_x;
      st.F_x = Phi_x + p.h(st.x);
      st.delta = dk;
      st.slack += 0.5 * alpha * o.eps + A2 * dk;
      st.phi_star = phi_at(st, p, st.u);
      break;
    }
    st.k = k;
    st.gap = std::numeric_limits<double>::quiet_NaN();
    res.iterations = k;
    bool done = o.stop && o.stop(st);
    if (!done && o.grad_map_tol > 0.0 && st.L * std::sqrt(vec::dist2(st.x, st.y)) <= o.grad_map_tol) done = true;
    record(st);
    if (done) {
      res.converged = true;
      break;
    }
  }
  return res;
}

// Basic method with a known Lipschitz constant, N steps after the initial one.
inline AccelResult mst_run(const CompositeProblem& p, const Vec& start, double L, int N) {
  AccelOptions o;
  o.L0 = L;
  o.max_iter = N;
  o.adaptive = false;
  return accel_run(p, start, o);
}

inline AccelResult mst_strongly_convex_run(const CompositeProblem& p, const Vec& start, double L, double mu, int N) {
  AccelOptions o;
  o.L0 = L;
  o.mu = mu;
  o.max_iter = N;
  o.adaptive = false;
  return accel_run(p, start, o);
}

inline AccelResult umst_run(const CompositeProblem& p, const Vec& start, AccelOptions o) {
  o.adaptive = true;
  return accel_run(p, start, o);
}

// Same iteration with an inexact oracle whose error at step k is delta(k);
// the error enters each acceptance test additively.
inline AccelResult umst_inexact_run(const CompositeProblem& p, const Vec& start, AccelOptions o,
                                    std::function<double(int)> delta) {
  o.adaptive = true;
  o.delta = std::move(delta);
  return accel_run(p, start, o);
}

struct RestartResult {
  Vec x;
  int stage_length = 0;
  std::vector<double> stage_F;  // F after each stage
  long fn_calls = 0;
  long grad_calls = 0;
};

// Restarted basic method: stages of ceil(sqrt(8 L omega / mu)) steps, each
// restarted from the previous stage's output.
inline RestartResult restart_run(const CompositeProblem& p, const Vec& start, double L, double mu, int stages,
                                 double omega = 1.0) {
  if (!(mu > 0.0)) throw Error(Errc::InvalidArgument, "restarts need a positive strong convexity constant");
  RestartResult r;
  r.stage_length = static_cast<int>(std::ceil(std::sqrt(8.0 * L * omega / mu)));
  r.x = start;
  for (int s = 0; s < stages; ++s) {
    AccelResult a = mst_run(p, r.x, L, r.stage_length);
    r.x = a.state.x;
    r.stage_F.push_back(a.state.F_x);
    r.fn_calls += a.state.fn_calls;
    r.grad_calls += a.state.grad_calls;
  }
  return r;
}

}  // namespace equiflow
