#pragma once

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "assignment.hpp"
#include "modal.hpp"
#include "multistage.hpp"

namespace equiflow {

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json to_json(const EquilibriumReport& r, const Network& net) {
  using nlohmann::json;
  json links = json::array();
  for (int e = 0; e < net.num_links(); ++e) {
    const Link& l = net.link(e);
    json j;
    j["from"] = net.original_id(l.tail);
    j["to"] = net.original_id(l.head);
    j["flow"] = json_number(r.flows[e]);
    j["time"] = json_number(r.times[e]);
    j["queue_delay"] = json_number(r.times[e] - r.free_flow_times[e]);
    if (!r.flows_clipped.empty()) j["flow_clipped"] = json_number(r.flows_clipped[e]);
    links.push_back(std::move(j));
  }
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iter", t.iter}, {"oracle_calls", t.oracle_calls}, {"primal", json_number(t.primal)},
                     {"dual", json_number(t.dual)}, {"gap", json_number(t.gap)}, {"L_est", json_number(t.L_est)}});
  json out;
  out["schema"] = 1;
  out["regime"] = std::string(regime_name(r.regime));
  out["method"] = std::string(method_name(r.method));
  out["gamma"] = r.gamma;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  out["oracle_calls"] = r.oracle_calls;
  out["primal_value"] = json_number(r.primal_value);
  out["dual_value"] = json_number(r.dual_value);
  out["gap"] = json_number(r.gap);
  out["relative_gap"] = json_number(r.rel_gap);
  out["eps"] = json_number(r.eps);
  if (is_stable_regime(r.regime)) {
    out["feasibility_residual"] = json_number(r.feasibility_residual);
    out["R_estimate"] = json_number(r.R_used);
  }
  out["links"] = std::move(links);
  out["trace"] = std::move(trace);
  return out;
}

inline void write_trace_csv(std::ostream& os, const EquilibriumReport& r) {
  os.precision(17);
  os << "iter,oracle_calls,primal,dual,gap,L_est\n";
  for (const auto& t : r.trace)
    os << t.iter << "," << t.oracle_calls << "," << t.primal << "," << t.dual << "," << t.gap << "," << t.L_est << "\n";
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os.precision(17);
  os << "k,A_k,L_est,F,gap\n";
  for (const auto& t : rows) os << t.k << "," << t.A << "," << t.L << "," << t.F << "," << t.gap << "\n";
}

inline nlohmann::json matrix_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < M.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < M.cols; ++j) row.push_back(json_number(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const MultistageReport& r, const Network& net, const MultistageSpec& s) {
  using nlohmann::json;
  json out;
  out["schema"] = 1;
  out["beta"] = s.beta;
  out["gamma"] = s.gamma;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  out["oracle_calls"] = r.oracle_calls;
  out["gap"] = json_number(r.gap);
  json links = json::array();
  for (int e = 0; e < net.num_links(); ++e) {
    const Link& l = net.link(e);
    links.push_back({{"from", net.original_id(l.tail)},
                     {"to", net.original_id(l.head)},
                     {"time", json_number(r.times[e])},
                     {"queue_delay", json_number(r.times[e] - l.free_flow_time)},
                     {"flow", json_number(r.flows[e])}});
  }
  out["links"] = std::move(links);
  json o = json::array(), d = json::array();
  for (int v : s.origins) o.push_back(net.original_id(v));
  for (int v : s.destinations) d.push_back(net.original_id(v));
  out["origins"] = std::move(o);
  out["destinations"] = std::move(d);
  out["trip_matrix"] = matrix_json(r.trips);
  json g = json::array();
  for (double v : r.gap_trace) g.push_back(json_number(v));
  out["gap_trace"] = std::move(g);
  out["delta_trace"] = r.delta_trace;
  out["sweep_trace"] = r.sweep_trace;
  return out;
}

inline void write_trace_csv(std::ostream& os, const ModalResult& r) {
  os.precision(17);
  os << "k,x\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) os << k << "," << r.trace[k] << "\n";
}

}  // namespace equiflow
