#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "network.hpp"

namespace equiflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kInfCap = kInf;

// Per-link cost model. For BPR mu = 1/power; barrier families take mu directly.
struct CostModel {
  CostFamily family = CostFamily::BPR;
  double t_bar = 1.0;
  double f_bar = 1.0;
  double rho = 0.15;
  double mu = 0.25;

  static CostModel bpr(double t_bar, double f_bar, double rho, double mu) {
    return {CostFamily::BPR, t_bar, f_bar, rho, mu};
  }
  static CostModel stable(double t_bar, double f_bar) { return {CostFamily::StableDynamics, t_bar, f_bar, 0.0, 0.0}; }
  static CostModel log_barrier(double t_bar, double f_bar, double mu) {
    return {CostFamily::LogBarrier, t_bar, f_bar, 0.0, mu};
  }
  static CostModel inverse_barrier(double t_bar, double f_bar, double mu) {
    return {CostFamily::InverseBarrier, t_bar, f_bar, 0.0, mu};
  }

  static CostModel from_link(const Link& l) {
    switch (l.family) {
      case CostFamily::BPR:
        if (l.rho == 0.0) return stable(l.free_flow_time, kInfCap);
        return bpr(l.free_flow_time, l.capacity, l.rho, 1.0 / l.power);
      case CostFamily::StableDynamics: return stable(l.free_flow_time, l.capacity);
      case CostFamily::LogBarrier: return log_barrier(l.free_flow_time, l.capacity, l.rho);
      case CostFamily::InverseBarrier: return inverse_barrier(l.free_flow_time, l.capacity, l.rho);
    }
    return {};
  }

  bool is_stable() const { return family == CostFamily::StableDynamics; }
  // Has a single-valued, differentiable travel-time function on [0, inf).
  bool has_finite_tau() const { return family == CostFamily::BPR || (is_stable() && std::isinf(f_bar)); }
};

inline std::vector<CostModel> link_models(const Network& net) {
  std::vector<CostModel> m;
  m.reserve(static_cast<std::size_t>(net.num_links()));
  for (const Link& l : net.links()) m.push_back(CostModel::from_link(l));
  return m;
}

namespace costs_detail {
[[noreturn]] inline void domain(const char* what, double x) {
  throw Error(Errc::DomainViolation, std::string(what) + " evaluated at " + std::to_string(x));
}
inline void check_flow(double f) {
  if (!(f >= 0.0)) domain("flow", f);
}
// Convex combinations of points at t_bar may round a few ulps below it.
inline double check_time(const CostModel& m, double t) {
  if (!(t >= m.t_bar - 1e-12 * std::max(1.0, m.t_bar))) domain("time below free-flow", t);
  return std::max(t, m.t_bar);
}
}  // namespace costs_detail

inline double tau(const CostModel& m, double f) {
  costs_detail::check_flow(f);
  switch (m.family) {
    case CostFamily::BPR: return m.t_bar * (1.0 + m.rho * std::pow(f / m.f_bar, 1.0 / m.mu));
    case CostFamily::StableDynamics:
      if (std::isinf(m.f_bar)) return m.t_bar;
      throw Error(Errc::UnsupportedForFamily, "travel time is set-valued under stable dynamics");
    case CostFamily::LogBarrier:
      if (f >= m.f_bar) costs_detail::domain("log-barrier flow at capacity", f);
      return m.t_bar * (1.0 - m.mu * std::log1p(-f / m.f_bar));
    case CostFamily::InverseBarrier:
      if (f >= m.f_bar) costs_detail::domain("inverse-barrier flow at capacity", f);
      return m.t_bar * (1.0 + m.mu * f / (m.f_bar - f));
  }
  return 0.0;
}

inline double tau_prime(const CostModel& m, double f) {
  costs_detail::check_flow(f);
  switch (m.family) {
    case CostFamily::BPR: {
      const double p = 1.0 / m.mu;
      return m.t_bar * m.rho * p * std::pow(f / m.f_bar, p - 1.0) / m.f_bar;
    }
    case CostFamily::StableDynamics:
      if (std::isinf(m.f_bar)) return 0.0;
      throw Error(Errc::UnsupportedForFamily, "travel time is set-valued under stable dynamics");
    case CostFamily::LogBarrier:
      if (f >= m.f_bar) costs_detail::domain("log-barrier flow at capacity", f);
      return m.t_bar * m.mu / (m.f_bar - f);
    case CostFamily::InverseBarrier:
      if (f >= m.f_bar) costs_detail::domain("inverse-barrier flow at capacity", f);
      return m.t_bar * m.mu * m.f_bar / ((m.f_bar - f) * (m.f_bar - f));
  }
  return 0.0;
}

// Integral of tau from 0 to f; +inf outside the flow domain of bounded families.
inline double sigma(const CostModel& m, double f) {
  costs_detail::check_flow(f);
  switch (m.family) {
    case CostFamily::BPR:
      return m.t_bar * f + m.t_bar * m.rho * m.f_bar * m.mu / (1.0 + m.mu) * std::pow(f / m.f_bar, 1.0 + 1.0 / m.mu);
    case CostFamily::StableDynamics: return f <= m.f_bar ? m.t_bar * f : kInf;
    case CostFamily::LogBarrier: {
      if (f > m.f_bar) return kInf;
      const double a = 1.0 - f / m.f_bar;
      const double alna = a > 0.0 ? a * std::log(a) : 0.0;
      return m.t_bar * f + m.t_bar * m.mu * (f + m.f_bar * alna);
    }
    case CostFamily::InverseBarrier:
      if (f >= m.f_bar) return kInf;
      return m.t_bar * (1.0 - m.mu) * f - m.t_bar * m.mu * m.f_bar * std::log1p(-f / m.f_bar);
  }
  return 0.0;
}

// Convex conjugate restricted to t >= t_bar.
inline double sigma_star(const CostModel& m, double t) {
  t = costs_detail::check_time(m, t);
  const double s = t - m.t_bar;
  switch (m.family) {
    case CostFamily::BPR:
      if (s == 0.0) return 0.0;
      return m.f_bar * std::pow(s / (m.t_bar * m.rho), m.mu) * s / (1.0 + m.mu);
    case CostFamily::StableDynamics:
      if (s == 0.0) return 0.0;
      return m.f_bar * s;
    case CostFamily::LogBarrier:
      return s * m.f_bar - m.f_bar * m.t_bar * m.mu * (-std::expm1(-s / (m.t_bar * m.mu)));
    case CostFamily::InverseBarrier:
      return s * m.f_bar + m.t_bar * m.f_bar * m.mu * std::log(m.t_bar * m.mu / (t - (1.0 - m.mu) * m.t_bar));
  }
  return 0.0;
}

// Flow induced by time t (inverse of tau); equals f_bar on stable links.
inline double sigma_star_prime(const CostModel& m, double t) {
  t = costs_detail::check_time(m, t);
  const double s = t - m.t_bar;
  switch (m.family) {
    case CostFamily::BPR: return s == 0.0 ? 0.0 : m.f_bar * std::pow(s / (m.t_bar * m.rho), m.mu);
    case CostFamily::StableDynamics: return m.f_bar;
    case CostFamily::LogBarrier: return m.f_bar * (-std::expm1(-s / (m.t_bar * m.mu)));
    case CostFamily::InverseBarrier: return m.f_bar * s / (t - (1.0 - m.mu) * m.t_bar);
  }
  return 0.0;
}

inline double sigma_star_second(const CostModel& m, double t) {
  const double s = t - m.t_bar;
  switch (m.family) {
    case CostFamily::BPR:
      if (s <= 0.0) return kInf;
      return m.f_bar * m.mu * std::pow(s / (m.t_bar * m.rho), m.mu - 1.0) / (m.t_bar * m.rho);
    case CostFamily::StableDynamics: return 0.0;
    case CostFamily::LogBarrier: return m.f_bar / (m.t_bar * m.mu) * std::exp(-s / (m.t_bar * m.mu));
    case CostFamily::InverseBarrier: {
      const double q = t - (1.0 - m.mu) * m.t_bar;
      return m.f_bar * m.t_bar * m.mu / (q * q);
    }
  }
  return 0.0;
}

inline double default_t_max(const CostModel& m) { return 100.0 * m.t_bar; }

// argmin over t in [t_bar, t_max] of g*t + A*sigma_star(t) + (t - c)^2 / 2.
inline double prox_step(const CostModel& m, double A, double g, double c, double t_max = -1.0) {
  if (t_max < 0.0) t_max = default_t_max(m);
  const double lo0 = m.t_bar;
  const double hi0 = std::max(t_max, m.t_bar);
  const double target = c - g;
  if (A == 0.0) return std::clamp(target, lo0, hi0);
  if (m.is_stable()) {
    if (std::isinf(m.f_bar)) return lo0;
    return std::clamp(target - A * m.f_bar, lo0, hi0);
  }
  auto D = [&](double t) { return A * sigma_star_prime(m, t) + t - target; };
  if (D(lo0) >= 0.0) return lo0;
  if (D(hi0) <= 0.0) return hi0;
  double lo = lo0, hi = hi0;
  double t = std::clamp(target, lo, hi);
  for (int it = 0; it < 300; ++it) {
    const double d = D(t);
    if (d == 0.0) return t;
    if (d < 0.0) lo = t;
    else hi = t;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(t))) break;
    const double dd = 1.0 + A * sigma_star_second(m, t);
    double next = t - d / dd;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    else if (std::abs(next - t) <= 1e-13 * std::max(1.0, std::abs(t))) return next;
    t = next;
  }
  return 0.5 * (lo + hi);
}

inline double sum_sigma(const std::vector<CostModel>& models, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t e = 0; e < models.size(); ++e) s += sigma(models[e], f[e]);
  return s;
}

inline double sum_sigma_star(const std::vector<CostModel>& models, const std::vector<double>& t) {
  double s = 0.0;
  for (std::size_t e = 0; e < models.size(); ++e) s += sigma_star(models[e], t[e]);
  return s;
}

}  // namespace equiflow
