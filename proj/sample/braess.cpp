// Solves the three-node Braess-type network shipped in data/ under the
// Beckmann and stable-dynamics regimes and prints the link flows.
#include <cstdio>

#include "equiflow/equiflow.hpp"

using namespace equiflow;

#ifndef EQUIFLOW_DATA_DIR
#define EQUIFLOW_DATA_DIR "data"
#endif

static void print(const char* title, const Network& net, const EquilibriumReport& r) {
  std::printf("%s: gap %.3e after %ld iterations\n", title, r.gap, static_cast<long>(r.iterations));
  for (int e = 0; e < net.num_links(); ++e) {
    const Link& l = net.link(e);
    std::printf("  %ld -> %ld  flow %9.2f  time %8.3f\n", static_cast<long>(net.original_id(l.tail)),
                static_cast<long>(net.original_id(l.head)),
                r.flows[e], r.times[e]);
  }
}

int main() {
  const std::string dir = EQUIFLOW_DATA_DIR;
  TripTable trips = read_tntp_trips(dir + "/braess_trips.tntp", 3);

  Network bpr = read_tntp_net(dir + "/braess_net.tntp");
  ModelSpec spec;
  spec.eps_rel = 1e-5;
  print("beckmann / frank-wolfe", bpr, solve_beckmann_fw(bpr, trips, spec));

  NetParseOptions sd;
  sd.family = CostFamily::StableDynamics;
  Network stable = read_tntp_net(dir + "/braess_net.tntp", sd);
  spec.regime = Regime::StableDynamics;
  spec.eps_rel = 1e-3;
  spec.max_iter = 1000000;  // nonsmooth dual: needs far more steps than the BPR run
  print("stable dynamics / umst", stable, solve_dual_umst(stable, trips, spec));
  return 0;
}
