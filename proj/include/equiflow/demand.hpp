#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace equiflow {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double v = 0.0) : rows(r), cols(c), data(r * c, v) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }
};

namespace demand_detail {

inline double lse(const double* v, std::size_t n, std::size_t stride = 1) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i * stride]);
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i * stride] - mx);
  return mx + std::log(s);
}

// Max-flow on the bipartite support graph; true when the finite-cost pattern can carry both marginals.
inline bool support_feasible(const Matrix& C, const std::vector<double>& L, const std::vector<double>& W) {
  const std::size_t r = C.rows, c = C.cols;
  const std::size_t N = r + c + 2, s = r + c, t = r + c + 1;
  std::vector<std::vector<double>> cap(N, std::vector<double>(N, 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    cap[s][i] = L[i];
    total += L[i];
  }
  for (std::size_t j = 0; j < c; ++j) cap[r + j][t] = W[j];
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (std::isfinite(C(i, j))) cap[i][r + j] = total;
  double flow = 0.0;
  const double tiny = 1e-12 * std::max(1.0, total);
  for (;;) {
    std::vector<int> prev(N, -1);
    prev[s] = static_cast<int>(s);
    std::deque<std::size_t> q{s};
    while (!q.empty() && prev[t] < 0) {
      std::size_t v = q.front();
      q.pop_front();
      for (std::size_t w = 0; w < N; ++w)
        if (prev[w] < 0 && cap[v][w] > tiny) {
          prev[w] = static_cast<int>(v);
          q.push_back(w);
        }
    }
    if (prev[t] < 0) break;
    double aug = std::numeric_limits<double>::infinity();
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(prev[v])) aug = std::min(aug, cap[prev[v]][v]);
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(prev[v])) {
      cap[prev[v]][v] -= aug;
      cap[v][prev[v]] += aug;
    }
    flow += aug;
  }
  return flow >= total * (1.0 - 1e-9);
}

inline void check_marginals(const Matrix& C, const std::vector<double>& L, const std::vector<double>& W) {
  if (L.size() != C.rows || W.size() != C.cols)
    throw Error(Errc::DegenerateMarginals, "marginal sizes do not match the cost matrix");
  for (double v : L)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::DegenerateMarginals, "origin totals must be positive");
  for (double v : W)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::DegenerateMarginals, "destination totals must be positive");
  const double sl = std::accumulate(L.begin(), L.end(), 0.0);
  const double sw = std::accumulate(W.begin(), W.end(), 0.0);
  if (std::abs(sl - sw) > 1e-9 * std::max(sl, sw))
    throw Error(Errc::DegenerateMarginals, "origin and destination totals differ");
  for (double v : C.data)
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw Error(Errc::InvalidArgument, "cost matrix has NaN or -inf entries");
  bool any_inf = std::any_of(C.data.begin(), C.data.end(), [](double v) { return std::isinf(v); });
  if (any_inf && !support_feasible(C, L, W))
    throw Error(Errc::DegenerateMarginals, "finite-cost pattern cannot carry the marginals");
}

}  // namespace demand_detail

struct BalancingOptions {
  double tol = 1e-8;  // relative L1 residual of both marginals
  int max_sweeps = 1000;
  std::vector<double> lambda0, mu0;  // warm start
  bool throw_on_failure = true;
  // When positive, replaces tol: stop once r*|(lambda, mu)| <= delta/2 and r <= delta,
  // with r the Euclidean residual of both marginals.
  double delta = 0.0;
};

struct BalancingResult {
  Matrix d;
  std::vector<double> lambda, mu;
  int sweeps = 0;
  double residual = 0.0;     // relative L1
  double residual_l2 = 0.0;  // absolute Euclidean
  std::vector<double> residual_trace;
  std::vector<double> hilbert_trace;  // span of the change in mu per sweep
  bool converged = false;
};

// Entropy trip matrix d_ij = exp(-beta C_ij + lambda_i + mu_j) with given row
// and column totals, by alternating exact row and column fits in log space.
// Infinite costs give zero entries. The gauge is fixed by sum(lambda) = 0.
inline BalancingResult balancing_run(const Matrix& C, double beta, const std::vector<double>& L,
                                     const std::vector<double>& W, const BalancingOptions& opt = {}) {
  using demand_detail::lse;
  demand_detail::check_marginals(C, L, W);
  const std::size_t r = C.rows, c = C.cols;
  Matrix K(r, c);
  for (std::size_t k = 0; k < K.data.size(); ++k)
    K.data[k] = std::isinf(C.data[k]) ? -std::numeric_limits<double>::infinity() : -beta * C.data[k];
  std::vector<double> logL(r), logW(c);
  for (std::size_t i = 0; i < r; ++i) logL[i] = std::log(L[i]);
  for (std::size_t j = 0; j < c; ++j) logW[j] = std::log(W[j]);
  const double total = std::accumulate(L.begin(), L.end(), 0.0);

  BalancingResult res;
  res.lambda = opt.lambda0.size() == r ? opt.lambda0 : std::vector<double>(r, 0.0);
  res.mu = opt.mu0.size() == c ? opt.mu0 : std::vector<double>(c, 0.0);
  std::vector<double> buf(std::max(r, c)), mu_old(c);

  double r2 = 0.0;
  auto residual = [&] {
    double s = 0.0, q = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) buf[j] = K(i, j) + res.mu[j];
      const double dev = std::exp(res.lambda[i] + lse(buf.data(), c)) - L[i];
      s += std::abs(dev);
      q += dev * dev;
    }
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t i = 0; i < r; ++i) buf[i] = K(i, j) + res.lambda[i];
      const double dev = std::exp(res.mu[j] + lse(buf.data(), r)) - W[j];
      s += std::abs(dev);
      q += dev * dev;
    }
    r2 = std::sqrt(q);
    return s / total;
  };
  auto done = [&] {
    if (opt.delta > 0.0) {
      double n2 = 0.0;
      for (double v : res.lambda) n2 += v * v;
      for (double v : res.mu) n2 += v * v;
      return r2 * std::sqrt(n2) <= 0.5 * opt.delta && r2 <= opt.delta;
    }
    return res.residual <= opt.tol;
  };

  res.residual = residual();
  for (int sweep = 1; sweep <= opt.max_sweeps && !done(); ++sweep) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) buf[j] = K(i, j) + res.mu[j];
      res.lambda[i] = logL[i] - lse(buf.data(), c);
    }
    mu_old = res.mu;
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t i = 0; i < r; ++i) buf[i] = K(i, j) + res.lambda[i];
      res.mu[j] = logW[j] - lse(buf.data(), r);
    }
    const double shift = std::accumulate(res.lambda.begin(), res.lambda.end(), 0.0) / static_cast<double>(r);
    for (double& v : res.lambda) v -= shift;
    for (double& v : res.mu) v += shift;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t j = 0; j < c; ++j) {
      const double dlt = (res.mu[j] - shift) - mu_old[j];
      lo = std::min(lo, dlt);
      hi = std::max(hi, dlt);
    }
    res.hilbert_trace.push_back(hi - lo);
    res.sweeps = sweep;
    res.residual = residual();
    res.residual_trace.push_back(res.residual);
  }
  res.converged = done();
  res.residual_l2 = r2;
  if (!res.converged && opt.throw_on_failure)
    throw Error(Errc::NoConvergence, "balancing residual " + std::to_string(res.residual) + " after " +
                                         std::to_string(res.sweeps) + " sweeps");
  res.d = Matrix(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      res.d(i, j) = std::isinf(K(i, j)) ? 0.0 : std::exp(K(i, j) + res.lambda[i] + res.mu[j]);
  return res;
}

// Sum of d_ij C_ij over entries carrying demand.
inline double mean_cost(const Matrix& d, const Matrix& C) {
  double s = 0.0;
  for (std::size_t k = 0; k < d.data.size(); ++k)
    if (d.data[k] > 0.0) s += d.data[k] * C.data[k];
  return s;
}

struct HymanOptions {
  double tol = 1e-9;  // relative accuracy of the matched average cost
  int max_outer = 20;
  BalancingOptions balancing{1e-12, 5000, {}, {}, true};
};

struct HymanResult {
  double beta = 0.0;
  double average_cost = 0.0;
  BalancingResult balanced;
  int iterations = 0;
  int bisection_steps = 0;
  std::vector<std::pair<double, double>> trace;  // (beta, average cost)
};

// Finds beta whose entropy matrix has average trip cost equal to target.
// Secant steps on beta with a bisection fallback when the secant misbehaves.
inline HymanResult hyman_calibrate(const Matrix& C, const std::vector<double>& L, const std::vector<double>& W,
                                   double target, const HymanOptions& opt = {}) {
  demand_detail::check_marginals(C, L, W);
  if (!(target > 0.0)) throw Error(Errc::TargetUnattainable, "target average cost must be positive");
  const double total = std::accumulate(L.begin(), L.end(), 0.0);

  BalancingOptions bo = opt.balancing;
  HymanResult res;
  auto eval = [&](double beta) {
    BalancingResult b = balancing_run(C, beta, L, W, bo);
    bo.lambda0 = b.lambda;
    bo.mu0 = b.mu;
    const double avg = mean_cost(b.d, C) / total;
    res.trace.emplace_back(beta, avg);
    return std::make_pair(avg, std::move(b));
  };

  // Limits of the average cost as beta -> 0 and a lower bound on its beta -> inf limit.
  const double c_sup = eval(0.0).first;
  res.trace.clear();
  double lb_rows = 0.0, lb_cols = 0.0;
  for (std::size_t i = 0; i < C.rows; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < C.cols; ++j) m = std::min(m, C(i, j));
    lb_rows += L[i] * m;
  }
  for (std::size_t j = 0; j < C.cols; ++j) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < C.rows; ++i) m = std::min(m, C(i, j));
    lb_cols += W[j] * m;
  }
  const double c_inf_lb = std::max(lb_rows, lb_cols) / total;
  if (target >= c_sup * (1.0 - 1e-12))
    throw Error(Errc::TargetUnattainable, "target " + std::to_string(target) + " is not below the beta->0 average " +
                                              std::to_string(c_sup));
  if (target <= c_inf_lb)
    throw Error(Errc::TargetUnattainable, "target " + std::to_string(target) + " is below the least attainable average " +
                                              std::to_string(c_inf_lb));

  // Bracket: average cost decreases in beta.
  double b_lo = 0.0, b_hi = std::numeric_limits<double>::infinity();
  auto close = [&](double avg) { return std::abs(avg - target) <= opt.tol * target; };
  auto note = [&](double beta, double avg) {
    if (avg > target) b_lo = std::max(b_lo, beta);
    else b_hi = std::min(b_hi, beta);
  };

  double beta_prev = 1.0 / target;
  auto [c_prev, bal_prev] = eval(beta_prev);
  note(beta_prev, c_prev);
  res.iterations = 1;
  if (close(c_prev)) {
    res.beta = beta_prev;
    res.average_cost = c_prev;
    res.balanced = std::move(bal_prev);
    return res;
  }
  double beta = beta_prev * c_prev / target;
  const double beta_cap = 1e8 / target;
  for (int m = 2; m <= opt.max_outer; ++m) {
    auto [cm, bal] = eval(beta);
    note(beta, cm);
    res.iterations = m;
    if (close(cm)) {
      res.beta = beta;
      res.average_cost = cm;
      res.balanced = std::move(bal);
      return res;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (cm != c_prev) next = ((target - c_prev) * beta + (cm - target) * beta_prev) / (cm - c_prev);
    const bool ok = std::isfinite(next) && next > b_lo && next < b_hi;
    if (!ok) {
      ++res.bisection_steps;
      if (std::isinf(b_hi)) next = std::max(2.0 * b_lo, 2.0 * beta);
      else if (b_lo == 0.0) next = 0.5 * b_hi;
      else next = std::sqrt(b_lo * b_hi);
    }
    if (next > beta_cap && std::isinf(b_hi))
      throw Error(Errc::TargetUnattainable, "average cost stays above target " + std::to_string(target) +
                                                " for beta up to " + std::to_string(next));
    beta_prev = beta;
    c_prev = cm;
    beta = next;
  }
  throw Error(Errc::NoConvergence, "beta calibration did not reach the target in " + std::to_string(opt.max_outer) +
                                       " evaluations");
}

// CSV helpers. Accepts "inf" for unreachable pairs.
inline Matrix read_matrix_csv(std::istream& in) {
  Matrix M;
  std::string line;
  std::vector<double> vals;
  std::size_t cols = 0, rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t b = cell.find_first_not_of(" \t\r"), e = cell.find_last_not_of(" \t\r");
      cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "row " + std::to_string(rows + 1) + ": not a number: '" + cell + "'");
      }
      ++k;
    }
    if (rows == 0) cols = k;
    else if (k != cols) throw Error(Errc::FieldCountMismatch, "row " + std::to_string(rows + 1) + " has " +
                                                                  std::to_string(k) + " columns, expected " +
                                                                  std::to_string(cols));
    ++rows;
  }
  M.rows = rows;
  M.cols = cols;
  M.data = std::move(vals);
  return M;
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
  return read_matrix_csv(in);
}

// A single row or a single column.
inline std::vector<double> read_vector_csv(const std::string& path) {
  Matrix M = read_matrix_csv(path);
  if (M.rows != 1 && M.cols != 1) throw Error(Errc::FieldCountMismatch, path + " is not a vector");
  return M.data;
}

inline void write_matrix_csv(std::ostream& out, const Matrix& M) {
  out.precision(17);
  for (std::size_t i = 0; i < M.rows; ++i) {
    for (std::size_t j = 0; j < M.cols; ++j) out << (j ? "," : "") << M(i, j);
    out << "\n";
  }
}

}  // namespace equiflow
