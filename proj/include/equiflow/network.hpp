#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace equiflow {

enum class CostFamily { BPR, StableDynamics, LogBarrier, InverseBarrier };
enum class Mode { Private, Public, Any };

inline std::string_view family_name(CostFamily f) {
  switch (f) {
    case CostFamily::BPR: return "bpr";
    case CostFamily::StableDynamics: return "stable";
    case CostFamily::LogBarrier: return "logbarrier";
    case CostFamily::InverseBarrier: return "inversebarrier";
  }
  return "?";
}

struct Link {
  int tail = 0;
  int head = 0;
  double free_flow_time = 1.0;
  double capacity = 1.0;
  CostFamily family = CostFamily::BPR;
  // BPR: tau = t(1 + rho (f/c)^power). Barrier families read rho as their mu.
  double rho = 0.15;
  double power = 4.0;
  Mode mode = Mode::Private;
  double length = 0.0;
  double speed = 0.0;
  double toll = 0.0;
  int link_type = 1;
};

// Directed multigraph on dense node ids 0..n-1 with forward and backward stars.
class Network {
 public:
  Network() = default;

  Network(int num_nodes, std::vector<Link> links, std::vector<char> through = {})
      : n_(num_nodes), links_(std::move(links)), through_(std::move(through)) {
    if (n_ < 0) throw Error(Errc::InvalidArgument, "negative node count");
    if (through_.empty()) through_.assign(static_cast<std::size_t>(n_), 1);
    if (static_cast<int>(through_.size()) != n_)
      throw Error(Errc::InvalidArgument, "through mask size differs from node count");
    for (std::size_t e = 0; e < links_.size(); ++e) {
      const Link& l = links_[e];
      if (l.tail < 0 || l.tail >= n_ || l.head < 0 || l.head >= n_)
        throw Error(Errc::UnknownNode, "link " + std::to_string(e) + " references a node outside 0.." +
                                           std::to_string(n_ - 1));
      if (l.tail == l.head) throw Error(Errc::SelfLoop, "link " + std::to_string(e) + " is a self-loop");
    }
    build_stars();
  }

  int num_nodes() const noexcept { return n_; }
  int num_links() const noexcept { return static_cast<int>(links_.size()); }
  const Link& link(int e) const { return links_[static_cast<std::size_t>(e)]; }
  const std::vector<Link>& links() const noexcept { return links_; }

  std::span<const int> out_links(int v) const {
    return {out_idx_.data() + out_off_[v], out_idx_.data() + out_off_[v + 1]};
  }
  std::span<const int> in_links(int v) const {
    return {in_idx_.data() + in_off_[v], in_idx_.data() + in_off_[v + 1]};
  }

  // Non-through nodes may start or end a route but never appear inside one.
  bool is_through(int v) const { return through_[static_cast<std::size_t>(v)] != 0; }
  const std::vector<char>& through_mask() const noexcept { return through_; }

  int hop_bound() const { return hop_bound_ > 0 ? hop_bound_ : std::max(1, n_ - 1); }
  void set_hop_bound(int h) { hop_bound_ = h; }

  // Ids as they appeared in the input file (1-based for TNTP).
  long original_id(int v) const {
    return original_ids_.empty() ? v + 1 : original_ids_[static_cast<std::size_t>(v)];
  }
  void set_original_ids(std::vector<long> ids) { original_ids_ = std::move(ids); }

  std::vector<double> free_flow_times() const {
    std::vector<double> t(links_.size());
    for (std::size_t e = 0; e < links_.size(); ++e) t[e] = links_[e].free_flow_time;
    return t;
  }
  std::vector<double> capacities() const {
    std::vector<double> c(links_.size());
    for (std::size_t e = 0; e < links_.size(); ++e) c[e] = links_[e].capacity;
    return c;
  }

 private:
  void build_stars() {
    auto fill = [&](auto endpoint, std::vector<int>& off, std::vector<int>& idx) {
      off.assign(static_cast<std::size_t>(n_) + 1, 0);
      for (const Link& l : links_) ++off[static_cast<std::size_t>(endpoint(l)) + 1];
      std::partial_sum(off.begin(), off.end(), off.begin());
      idx.assign(links_.size(), 0);
      std::vector<int> pos(off.begin(), off.end() - 1);
      for (std::size_t e = 0; e < links_.size(); ++e) idx[pos[endpoint(links_[e])]++] = static_cast<int>(e);
    };
    fill([](const Link& l) { return l.tail; }, out_off_, out_idx_);
    fill([](const Link& l) { return l.head; }, in_off_, in_idx_);
  }

  int n_ = 0;
  std::vector<Link> links_;
  std::vector<char> through_;
  std::vector<int> out_off_{0}, out_idx_, in_off_{0}, in_idx_;
  std::vector<long> original_ids_;
  int hop_bound_ = 0;
};

struct OD {
  int origin = 0;
  int dest = 0;
  double demand = 0.0;
};

// Sparse origin-destination demands. Entries are kept sorted by (origin, dest),
// with zero and diagonal pairs removed and duplicates summed.
class TripTable {
 public:
  TripTable() = default;

  void add(int origin, int dest, double demand) {
    if (!(demand >= 0.0) || !std::isfinite(demand))
      throw Error(Errc::NegativeDemand, "demand " + std::to_string(demand) + " for pair (" +
                                            std::to_string(origin) + "," + std::to_string(dest) + ")");
    if (demand == 0.0 || origin == dest) return;
    raw_[{origin, dest}] += demand;
    dirty_ = true;
  }

  const std::vector<OD>& pairs() const {
    if (dirty_) {
      cache_.clear();
      for (const auto& [k, d] : raw_) cache_.push_back({k.first, k.second, d});
      dirty_ = false;
    }
    return cache_;
  }

  std::size_t size() const { return raw_.size(); }
  bool empty() const { return raw_.empty(); }

  double total() const {
    double s = 0.0;
    for (const auto& [k, d] : raw_) s += d;
    return s;
  }

  double demand(int origin, int dest) const {
    auto it = raw_.find({origin, dest});
    return it == raw_.end() ? 0.0 : it->second;
  }

  // Sorted distinct origins.
  std::vector<int> origins() const {
    std::vector<int> o;
    for (const auto& [k, d] : raw_)
      if (o.empty() || o.back() != k.first) o.push_back(k.first);
    return o;
  }

  // (dest, demand) list for one origin.
  std::vector<std::pair<int, double>> from(int origin) const {
    std::vector<std::pair<int, double>> out;
    for (auto it = raw_.lower_bound({origin, std::numeric_limits<int>::min()});
         it != raw_.end() && it->first.first == origin; ++it)
      out.emplace_back(it->first.second, it->second);
    return out;
  }

  int max_node() const {
    int m = -1;
    for (const auto& [k, d] : raw_) m = std::max({m, k.first, k.second});
    return m;
  }

 private:
  std::map<std::pair<int, int>, double> raw_;
  mutable std::vector<OD> cache_;
  mutable bool dirty_ = false;
};

// Breadth-first reachability honouring non-through nodes.
inline std::vector<char> reachable_from(const Network& net, int source) {
  std::vector<char> seen(static_cast<std::size_t>(net.num_nodes()), 0);
  std::deque<int> q{source};
  seen[source] = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    if (v != source && !net.is_through(v)) continue;
    for (int e : net.out_links(v)) {
      int w = net.link(e).head;
      if (!seen[w]) {
        seen[w] = 1;
        q.push_back(w);
      }
    }
  }
  return seen;
}

struct Diagnostics {
  std::vector<std::pair<int, int>> unreachable;
  std::vector<int> dangling_nodes;  // nodes with no incident link
  double total_demand = 0.0;
  std::size_t od_pairs = 0;
};

inline Diagnostics diagnose(const Network& net, const TripTable& trips) {
  Diagnostics d;
  d.total_demand = trips.total();
  d.od_pairs = trips.size();
  if (trips.max_node() >= net.num_nodes())
    throw Error(Errc::UnknownNode, "trip table references node " + std::to_string(trips.max_node() + 1) +
                                       " beyond the network");
  for (int o : trips.origins()) {
    auto seen = reachable_from(net, o);
    for (auto [dst, dem] : trips.from(o))
      if (!seen[dst]) d.unreachable.emplace_back(o, dst);
  }
  for (int v = 0; v < net.num_nodes(); ++v)
    if (net.out_links(v).empty() && net.in_links(v).empty()) d.dangling_nodes.push_back(v);
  return d;
}

// Throws UnreachableOD listing every failing pair; otherwise returns diagnostics.
inline Diagnostics validate(const Network& net, const TripTable& trips) {
  Diagnostics d = diagnose(net, trips);
  if (!d.unreachable.empty()) {
    std::string msg = std::to_string(d.unreachable.size()) + " unreachable pair(s):";
    for (auto [o, t] : d.unreachable)
      msg += " (" + std::to_string(net.original_id(o)) + "," + std::to_string(net.original_id(t)) + ")";
    throw Error(Errc::UnreachableOD, msg);
  }
  return d;
}

// Union graph of a private and a public network over one node set.
// Node v maps to private copy v, public copy n+v, and gateway 2n+v. Gateways are
// the only places demand enters or leaves and they are never passed through.
struct MultimodalNetwork {
  Network net;
  int base_nodes = 0;
  int private_node(int v) const { return v; }
  int public_node(int v) const { return base_nodes + v; }
  int gateway(int v) const { return 2 * base_nodes + v; }

  TripTable map_trips(const TripTable& t) const {
    TripTable out;
    for (const OD& od : t.pairs()) out.add(gateway(od.origin), gateway(od.dest), od.demand);
    return out;
  }
};

inline Link connector(int tail, int head, double time) {
  Link l;
  l.tail = tail;
  l.head = head;
  l.free_flow_time = time;
  l.capacity = std::numeric_limits<double>::infinity();
  l.family = CostFamily::StableDynamics;
  l.mode = Mode::Any;
  return l;
}

// transfer_time < 0 or infinite disables mid-route mode changes.
inline MultimodalNetwork expand_multimodal(const Network& priv, const Network& pub, double transfer_time = -1.0) {
  if (priv.num_nodes() != pub.num_nodes())
    throw Error(Errc::IdSpaceMismatch, "private network has " + std::to_string(priv.num_nodes()) +
                                           " nodes, public has " + std::to_string(pub.num_nodes()));
  const int n = priv.num_nodes();
  MultimodalNetwork mm;
  mm.base_nodes = n;
  std::vector<Link> links;
  for (Link l : priv.links()) {
    l.mode = Mode::Private;
    links.push_back(l);
  }
  for (Link l : pub.links()) {
    l.tail += n;
    l.head += n;
    l.mode = Mode::Public;
    links.push_back(l);
  }
  const bool transfers = transfer_time >= 0.0 && std::isfinite(transfer_time);
  for (int v = 0; v < n; ++v) {
    links.push_back(connector(2 * n + v, v, 0.0));
    links.push_back(connector(2 * n + v, n + v, 0.0));
    links.push_back(connector(v, 2 * n + v, 0.0));
    links.push_back(connector(n + v, 2 * n + v, 0.0));
    if (transfers) {
      links.push_back(connector(v, n + v, transfer_time));
      links.push_back(connector(n + v, v, transfer_time));
    }
  }
  std::vector<char> through(static_cast<std::size_t>(3 * n), 1);
  for (int v = 0; v < n; ++v) through[2 * n + v] = 0;
  mm.net = Network(3 * n, std::move(links), std::move(through));
  std::vector<long> ids(static_cast<std::size_t>(3 * n));
  for (int v = 0; v < n; ++v) ids[v] = ids[n + v] = ids[2 * n + v] = priv.original_id(v);
  mm.net.set_original_ids(std::move(ids));
  return mm;
}

}  // namespace equiflow
