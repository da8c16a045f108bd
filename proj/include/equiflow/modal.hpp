#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace equiflow {

// Daily modal split between car and public transport. x is the car share,
// T(x) = T0 + gamma x^4 the car trip time, and the comparison factor
// p(x) = (a - b1) / (b2 - T(x)) feeds back through x(p) = p^(-eta).
struct ModalParams {
  double a = 60.0;
  double b1 = 50.0;
  double b2 = 75.0;
  double T0 = 70.0;
  double gamma = 2.0;
  double eta = 1.0;
  double p_min = 1.0;
  double p_max = 30.0;
};

inline double car_time(const ModalParams& q, double x) { return q.T0 + q.gamma * std::pow(x, 4); }

// Throws ConditionViolated naming the first failing well-posedness condition.
inline void check_conditions(const ModalParams& q) {
  auto fail = [](const std::string& what) { throw Error(Errc::ConditionViolated, what); };
  if (!(q.b1 < q.a)) fail("public fixed cost b1 must be below car fixed cost a");
  if (!(car_time(q, 1.0) < q.b2)) fail("car time at full share T0 + gamma must stay below b2");
  if (!(q.p_min > 0.0 && q.p_min <= 1.0 && q.p_max >= q.p_min)) fail("need 0 < p_min <= 1 <= p_max");
  if (!(q.a - q.b1 < q.p_max * (q.b2 - car_time(q, 1.0)))) fail("a + p_max T(1) must be below b1 + p_max b2");
  if (!(q.a - q.b1 > q.p_min * (q.b2 - q.T0))) fail("a + p_min T(0) must exceed b1 + p_min b2");
  if (q.eta == 1.0 && !(4.0 * q.gamma < q.a - q.b1)) fail("contraction needs 4 gamma < a - b1");
  if (!(q.eta > 0.0)) fail("eta must be positive");
}

inline double split_map(const ModalParams& q, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::InvalidArgument, "car share must lie in [0, 1]");
  const double slack = q.b2 - car_time(q, x);
  if (!(slack > 0.0)) throw Error(Errc::ConditionViolated, "car time reached b2");
  const double p = (q.a - q.b1) / slack;
  return std::clamp(std::pow(p, -q.eta), 0.0, 1.0);
}

// Lipschitz constant of the map on [0, 1]: exact for eta = 1, sampled otherwise.
inline double contraction_factor(const ModalParams& q) {
  if (q.eta == 1.0) return 4.0 * q.gamma / (q.a - q.b1);
  double best = 0.0;
  const int n = 2000;
  double prev = split_map(q, 0.0);
  for (int i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double cur = split_map(q, x);
    best = std::max(best, std::abs(cur - prev) * n);
    prev = cur;
  }
  return best;
}

struct ModalResult {
  double x = 0.0;
  int iterations = 0;  // map evaluations
  bool converged = false;
  double contraction = 0.0;
  bool contraction_verified = false;  // false means the run carries no convergence guarantee
  std::vector<double> trace;          // x_0, x_1, ...
};

// Iterates x_{k+1} = split_map(x_k) until |x_{k+1} - x_k| <= tol.
inline ModalResult fixed_point(const ModalParams& q, double x0, double tol = 1e-3, int max_iter = 100) {
  check_conditions(q);
  ModalResult r;
  r.contraction = contraction_factor(q);
  r.contraction_verified = r.contraction < 1.0;
  double x = std::clamp(x0, 0.0, 1.0);
  r.trace.push_back(x);
  for (int k = 1; k <= max_iter; ++k) {
    const double nx = split_map(q, x);
    r.trace.push_back(nx);
    r.iterations = k;
    const double step = std::abs(nx - x);
    x = nx;
    if (step <= tol) {
      r.converged = true;
      break;
    }
  }
  r.x = x;
  return r;
}

}  // namespace equiflow
