#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "network.hpp"
#include "parallel.hpp"
#include "paths.hpp"

namespace equiflow {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// gamma * log(exp(x/gamma) + exp(y/gamma)) without overflow.
inline double soft_max2(double x, double y, double gamma) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double m = std::max(x, y);
  return m + gamma * std::log1p(std::exp(-std::abs(x - y) / gamma));
}

struct SoftConfig {
  double gamma = 1.0;
  int hop_bound = 0;  // 0 means the network default
  int threads = 1;
};

// Level tables of the smoothed Bellman-Ford recursion from one source.
// a[l][j]: soft maximum of minus walk time over walks with exactly l links,
// b[l][j]: the same over walks with 1..l links.
struct SoftTables {
  int source = -1;
  double gamma = 1.0;
  std::vector<std::vector<double>> a, b;
};

namespace softpaths_detail {
inline bool usable(const Network& net, int k, int level, int source) {
  return level == 0 ? k == source : net.is_through(k);
}
}  // namespace softpaths_detail

inline SoftTables forward_tables(const Network& net, const std::vector<double>& t, double gamma, int H, int source) {
  if (!(gamma > 0.0)) throw Error(Errc::InvalidArgument, "smoothing parameter must be positive");
  const std::size_t n = static_cast<std::size_t>(net.num_nodes());
  SoftTables T;
  T.source = source;
  T.gamma = gamma;
  T.a.assign(static_cast<std::size_t>(H) + 1, std::vector<double>(n, kNegInf));
  T.b.assign(static_cast<std::size_t>(H) + 1, std::vector<double>(n, kNegInf));
  T.a[0][source] = 0.0;
  for (int l = 1; l <= H; ++l) {
    const auto& prev = T.a[l - 1];
    auto& cur = T.a[l];
    for (std::size_t j = 0; j < n; ++j) {
      double mx = kNegInf;
      for (int e : net.in_links(static_cast<int>(j))) {
        const int k = net.link(e).tail;
        if (prev[k] == kNegInf || !softpaths_detail::usable(net, k, l - 1, source)) continue;
        mx = std::max(mx, prev[k] - t[e]);
      }
      if (mx == kNegInf) continue;
      double s = 0.0;
      for (int e : net.in_links(static_cast<int>(j))) {
        const int k = net.link(e).tail;
        if (prev[k] == kNegInf || !softpaths_detail::usable(net, k, l - 1, source)) continue;
        s += std::exp((prev[k] - t[e] - mx) / gamma);
      }
      cur[j] = mx + gamma * std::log(s);
    }
    for (std::size_t j = 0; j < n; ++j) T.b[l][j] = soft_max2(T.b[l - 1][j], cur[j], gamma);
  }
  return T;
}

struct SoftEval {
  double psi = 0.0;             // gamma * psi(t / gamma), close to minus total shortest time
  std::vector<double> flows;    // minus the gradient of psi
  double entropy = 0.0;         // gamma * sum x log(x / d) over walk flows, <= 0
};

// Flow of one source's demands through the soft recursion (reverse accumulation).
inline void soft_backward(const Network& net, const std::vector<double>& t, const SoftTables& T,
                          const std::vector<std::pair<int, double>>& demands, std::vector<double>& flows) {
  const int H = static_cast<int>(T.a.size()) - 1;
  const double g = T.gamma;
  const std::size_t n = static_cast<std::size_t>(net.num_nodes());
  std::vector<double> bbar(n, 0.0), abar(n, 0.0), abar_prev(n, 0.0);
  for (auto [dst, d] : demands) bbar[dst] += d;
  for (int l = H; l >= 1; --l) {
    std::fill(abar_prev.begin(), abar_prev.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (bbar[j] == 0.0) continue;
      const double bl = T.b[l][j];
      if (T.a[l][j] != kNegInf) abar[j] += bbar[j] * std::exp((T.a[l][j] - bl) / g);
      bbar[j] = T.b[l - 1][j] == kNegInf ? 0.0 : bbar[j] * std::exp((T.b[l - 1][j] - bl) / g);
    }
    const auto& prev = T.a[l - 1];
    for (std::size_t j = 0; j < n; ++j) {
      if (abar[j] == 0.0) continue;
      const double al = T.a[l][j];
      for (int e : net.in_links(static_cast<int>(j))) {
        const int k = net.link(e).tail;
        if (prev[k] == kNegInf || !softpaths_detail::usable(net, k, l - 1, T.source)) continue;
        const double w = abar[j] * std::exp((prev[k] - t[e] - al) / g);
        flows[e] += w;
        abar_prev[k] += w;
      }
    }
    std::swap(abar, abar_prev);
  }
}

inline SoftEval soft_evaluate(const Network& net, const std::vector<double>& t, const TripTable& trips,
                              const SoftConfig& cfg) {
  check_nonnegative(t);
  const int H = cfg.hop_bound > 0 ? cfg.hop_bound : net.hop_bound();
  const std::vector<int> origins = trips.origins();
  const std::size_t m = static_cast<std::size_t>(net.num_links());
  std::vector<std::vector<double>> part(origins.size());
  std::vector<double> val(origins.size(), 0.0);
  parallel_for(origins.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const int o = origins[i];
    const auto dests = trips.from(o);
    SoftTables T = forward_tables(net, t, cfg.gamma, H, o);
    double v = 0.0;
    for (auto [dst, d] : dests) {
      if (T.b[H][dst] == kNegInf)
        throw Error(Errc::UnreachableDestination, "no walk of at most " + std::to_string(H) + " links from " +
                                                      std::to_string(net.original_id(o)) + " to " +
                                                      std::to_string(net.original_id(dst)));
      v += d * T.b[H][dst];
    }
    val[i] = v;
    part[i].assign(m, 0.0);
    soft_backward(net, t, T, dests, part[i]);
  });
  SoftEval r;
  r.flows.assign(m, 0.0);
  for (std::size_t i = 0; i < origins.size(); ++i) {
    r.psi += val[i];
    for (std::size_t e = 0; e < m; ++e) r.flows[e] += part[i][e];
  }
  double ft = 0.0;
  for (std::size_t e = 0; e < m; ++e) ft += r.flows[e] * t[e];
  r.entropy = -r.psi - ft;
  return r;
}

inline double psi(const Network& net, const std::vector<double>& t, const TripTable& trips, const SoftConfig& cfg) {
  return soft_evaluate(net, t, trips, cfg).psi;
}

// Link flows of the logit walk assignment, i.e. minus the gradient of psi.
inline std::vector<double> grad_psi(const Network& net, const std::vector<double>& t, const TripTable& trips,
                                    const SoftConfig& cfg) {
  return soft_evaluate(net, t, trips, cfg).flows;
}

// gamma * sum x log(x / d), computed as -psi(t) - <f(t), t>.
inline double entropy_of_iterate(const Network& net, const std::vector<double>& t, const TripTable& trips,
                                 const SoftConfig& cfg) {
  return soft_evaluate(net, t, trips, cfg).entropy;
}

// log of the number of walks with 1..H links between each listed pair, in trips.pairs() order.
inline std::vector<double> log_walk_counts(const Network& net, const TripTable& trips, int H = 0) {
  if (H <= 0) H = net.hop_bound();
  std::vector<double> zero(static_cast<std::size_t>(net.num_links()), 0.0);
  std::vector<double> out;
  for (int o : trips.origins()) {
    SoftTables T = forward_tables(net, zero, 1.0, H, o);
    for (auto [dst, d] : trips.from(o)) out.push_back(T.b[H][dst]);
  }
  return out;
}

// Regularization level that keeps the entropy bias at half of eps.
inline double gamma_star(const Network& net, const TripTable& trips, double eps, int H = 0) {
  const auto logs = log_walk_counts(net, trips, H);
  double s = 0.0;
  std::size_t i = 0;
  for (const OD& od : trips.pairs()) s += od.demand * logs[i++];
  return s > 0.0 ? eps / (2.0 * s) : kInf;
}

}  // namespace equiflow
