#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "network.hpp"
#include "parallel.hpp"

namespace equiflow {

struct ShortestPathTree {
  int source = -1;
  std::vector<double> dist;
  std::vector<int> parent_link;  // -1 at the source and at unreached nodes
  std::vector<int> order;        // nodes in settling order
};

inline void check_nonnegative(const std::vector<double>& t) {
  for (std::size_t e = 0; e < t.size(); ++e)
    if (!(t[e] >= 0.0)) throw Error(Errc::NegativeWeight, "link " + std::to_string(e) + " has time " + std::to_string(t[e]));
}

// Binary-heap Dijkstra. Among equal tentative distances the lower node id settles first.
inline ShortestPathTree dijkstra(const Network& net, const std::vector<double>& t, int source, bool checked = false) {
  if (!checked) check_nonnegative(t);
  const int n = net.num_nodes();
  ShortestPathTree tree;
  tree.source = source;
  tree.dist.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  tree.parent_link.assign(static_cast<std::size_t>(n), -1);
  tree.order.reserve(static_cast<std::size_t>(n));
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  tree.dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (done[v]) continue;
    done[v] = 1;
    tree.order.push_back(v);
    if (v != source && !net.is_through(v)) continue;
    for (int e : net.out_links(v)) {
      const int w = net.link(e).head;
      const double nd = d + t[e];
      if (nd < tree.dist[w]) {
        tree.dist[w] = nd;
        tree.parent_link[w] = e;
        heap.emplace(nd, w);
      }
    }
  }
  return tree;
}

// Adds demands routed along the tree to `flows` with one reverse sweep.
inline void load_tree(const Network& net, const ShortestPathTree& tree,
                      const std::vector<std::pair<int, double>>& demands, std::vector<double>& flows) {
  std::vector<double> acc(static_cast<std::size_t>(net.num_nodes()), 0.0);
  for (auto [dst, d] : demands) {
    if (d == 0.0) continue;
    if (!std::isfinite(tree.dist[dst]))
      throw Error(Errc::UnreachableDestination, "node " + std::to_string(net.original_id(dst)) +
                                                    " unreachable from " + std::to_string(net.original_id(tree.source)));
    acc[dst] += d;
  }
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const int v = *it;
    const int e = tree.parent_link[v];
    if (e < 0 || acc[v] == 0.0) continue;
    flows[e] += acc[v];
    acc[net.link(e).tail] += acc[v];
  }
}

struct AonResult {
  std::vector<double> flows;
  double cost = 0.0;  // sum of demand times shortest travel time
};

// All-or-nothing loading. Per-origin results are summed in sorted origin order.
inline AonResult all_or_nothing(const Network& net, const std::vector<double>& t, const TripTable& trips,
                                int threads = 1) {
  check_nonnegative(t);
  const std::vector<int> origins = trips.origins();
  const std::size_t m = static_cast<std::size_t>(net.num_links());
  std::vector<std::vector<double>> part(origins.size());
  std::vector<double> cost(origins.size(), 0.0);
  parallel_for(origins.size(), threads, [&](std::size_t i) {
    const int o = origins[i];
    auto dests = trips.from(o);
    ShortestPathTree tree = dijkstra(net, t, o, true);
    part[i].assign(m, 0.0);
    load_tree(net, tree, dests, part[i]);
    double c = 0.0;
    for (auto [dst, d] : dests) c += d * tree.dist[dst];
    cost[i] = c;
  });
  AonResult r;
  r.flows.assign(m, 0.0);
  for (std::size_t i = 0; i < origins.size(); ++i) {
    for (std::size_t e = 0; e < m; ++e) r.flows[e] += part[i][e];
    r.cost += cost[i];
  }
  return r;
}

// Shortest travel time for every listed pair, in trips.pairs() order.
inline std::vector<double> od_times(const Network& net, const std::vector<double>& t, const TripTable& trips,
                                    int threads = 1) {
  check_nonnegative(t);
  const std::vector<int> origins = trips.origins();
  std::vector<std::vector<double>> part(origins.size());
  parallel_for(origins.size(), threads, [&](std::size_t i) {
    ShortestPathTree tree = dijkstra(net, t, origins[i], true);
    for (auto [dst, d] : trips.from(origins[i])) part[i].push_back(tree.dist[dst]);
  });
  std::vector<double> out;
  for (auto& p : part) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace equiflow
