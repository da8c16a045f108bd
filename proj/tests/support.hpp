#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "equiflow/equiflow.hpp"

namespace testing_support {

using namespace equiflow;

inline Link link(int tail, int head, double t, double cap, CostFamily fam = CostFamily::BPR, double rho = 0.15,
                 double power = 4.0) {
  Link l;
  l.tail = tail;
  l.head = head;
  l.free_flow_time = t;
  l.capacity = cap;
  l.family = fam;
  l.rho = rho;
  l.power = power;
  return l;
}

// Nodes 0,1,2 stand for 1,2,3. Links: 1->3 (60), 1->2 (15), 2->3 (30), capacity 2000.
inline Network braess(CostFamily fam = CostFamily::StableDynamics) {
  return Network(3, {link(0, 2, 60, 2000, fam), link(0, 1, 15, 2000, fam), link(1, 2, 30, 2000, fam)});
}

inline TripTable braess_trips() {
  TripTable t;
  t.add(0, 2, 1500);
  t.add(1, 2, 1500);
  return t;
}

// Two parallel links 0->1 ("up" then "down").
inline Network two_links(double t_up, double t_down, double c_up, double c_down, CostFamily fam, double rho = 0.15,
                         double power = 4.0) {
  return Network(2, {link(0, 1, t_up, c_up, fam, rho, power), link(0, 1, t_down, c_down, fam, rho, power)});
}

inline TripTable single(int o, int d, double demand) {
  TripTable t;
  t.add(o, d, demand);
  return t;
}

// Random strongly connected graph: a ring plus extra random links.
inline Network random_network(std::mt19937& rng, int n, int extra, CostFamily fam = CostFamily::BPR) {
  std::uniform_real_distribution<double> tt(1.0, 10.0), cap(5.0, 50.0);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::vector<Link> links;
  for (int v = 0; v < n; ++v) links.push_back(link(v, (v + 1) % n, tt(rng), cap(rng), fam));
  for (int i = 0; i < extra; ++i) {
    int a = node(rng), b = node(rng);
    if (a == b) continue;
    links.push_back(link(a, b, tt(rng), cap(rng), fam));
  }
  return Network(n, std::move(links));
}

inline TripTable random_trips(std::mt19937& rng, int n, int pairs, double lo = 1.0, double hi = 30.0) {
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_real_distribution<double> dem(lo, hi);
  TripTable t;
  while (static_cast<int>(t.size()) < pairs) {
    int a = node(rng), b = node(rng);
    if (a != b) t.add(a, b, dem(rng));
  }
  return t;
}

// All simple paths from o to d as link lists, by depth-first search.
inline std::vector<std::vector<int>> simple_paths(const Network& net, int o, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::vector<char> on(static_cast<std::size_t>(net.num_nodes()), 0);
  std::function<void(int)> dfs = [&](int v) {
    if (v == d) {
      out.push_back(cur);
      return;
    }
    on[v] = 1;
    for (int e = 0; e < net.num_links(); ++e) {
      const Link& l = net.link(e);
      if (l.tail != v || on[l.head]) continue;
      cur.push_back(e);
      dfs(l.head);
      cur.pop_back();
    }
    on[v] = 0;
  };
  dfs(o);
  return out;
}

// All walks from o to d with 1..H links, as link lists.
inline std::vector<std::vector<int>> walks(const Network& net, int o, int d, int H) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int v) {
    if (!cur.empty() && v == d) out.push_back(cur);
    if (static_cast<int>(cur.size()) == H) return;
    for (int e = 0; e < net.num_links(); ++e) {
      const Link& l = net.link(e);
      if (l.tail != v) continue;
      cur.push_back(e);
      rec(l.head);
      cur.pop_back();
    }
  };
  rec(o);
  return out;
}

inline double path_cost(const std::vector<int>& p, const std::vector<double>& t) {
  double s = 0.0;
  for (int e : p) s += t[e];
  return s;
}

// gamma * log sum exp(-cost / gamma) computed directly.
inline double soft_min_neg(const std::vector<double>& costs, double gamma) {
  double mx = -1e300;
  for (double c : costs) mx = std::max(mx, -c / gamma);
  double s = 0.0;
  for (double c : costs) s += std::exp(-c / gamma - mx);
  return gamma * (mx + std::log(s));
}

// Minimum of a unimodal function on [a, b] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Root of a monotone function on [a, b] by bisection.
inline double bisect(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  double fa = f(a);
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0 ? num / den : num;
}

}  // namespace testing_support
