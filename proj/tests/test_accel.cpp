#include <gtest/gtest.h>

#include "support.hpp"

using namespace equiflow;
using namespace testing_support;

namespace {

// f(x) = 1/2 sum lam_i (x_i - c_i)^2
CompositeProblem quadratic(std::vector<double> lam, std::vector<double> c) {
  CompositeProblem p;
  auto val = [lam, c](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * lam[i] * (x[i] - c[i]) * (x[i] - c[i]);
    return s;
  };
  p.value = val;
  p.value_grad = [lam, c, val](const Vec& x, Vec& g) {
    g.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = lam[i] * (x[i] - c[i]);
    return val(x);
  };
  return p;
}

void soft_threshold(double w, const Vec& c, Vec& out) {
  out.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = std::copysign(std::max(std::abs(c[i]) - w, 0.0), c[i]);
}

// f(x) = sum_i |x_i - c_i| with a subgradient oracle.
CompositeProblem l1(std::vector<double> c) {
  CompositeProblem p;
  auto val = [c](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - c[i]);
    return s;
  };
  p.value = val;
  p.value_grad = [c, val](const Vec& x, Vec& g) {
    g.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > c[i] ? 1.0 : (x[i] < c[i] ? -1.0 : 0.0);
    return val(x);
  };
  return p;
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int iterations_to(const CompositeProblem& p, const Vec& start, double fstar, double eps) {
  AccelOptions o;
  o.eps = eps;
  o.max_iter = 10000000;
  o.stop = [&](AccelState& st) { return st.F_x - fstar <= eps; };
  return umst_run(p, start, o).iterations;
}

}  // namespace

TEST(AlphaNext, Recurrence) {
  EXPECT_NEAR(alpha_next(1.0, 1.0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
  for (double L : {0.5, 3.0, 100.0})
    for (double A : {0.0, 0.7, 12.0}) {
      EXPECT_NEAR(alpha_next(A, L), 1.0 / (2 * L) + std::sqrt(1.0 / (4 * L * L) + A / L), 1e-12);
      const double a = alpha_next(A, L, 0.3);
      EXPECT_NEAR(L * a * a, (A + a) * (1 + 0.3 * A), 1e-9 * L * a * a);
    }
}

TEST(Mst, WeightsGrowQuadratically) {
  for (double L : {0.25, 1.0, 40.0}) {
    AccelResult r = mst_run(quadratic({L, L / 3}, {1.0, -2.0}), {0.0, 0.0}, L, 200);
    ASSERT_EQ(r.state.trace.size(), 201u);
    for (const TraceRow& row : r.state.trace) EXPECT_GE(row.A, (row.k + 1.0) * (row.k + 1.0) / (4.0 * L));
  }
}

TEST(Mst, OneDimensionalQuadraticBound) {
  AccelResult r = mst_run(quadratic({1.0}, {0.0}), {1.0}, 1.0, 10);
  EXPECT_LE(r.state.F_x, 4.0 * 0.5 / 121.0);
  for (const TraceRow& row : r.state.trace) EXPECT_LE(row.F, 4.0 * 0.5 / ((row.k + 1.0) * (row.k + 1.0)) + 1e-15);
}

TEST(Mst, CompositeSoftThreshold) {
  CompositeProblem p = quadratic({1.0}, {2.0});
  p.composite = [](const Vec& x) { return std::abs(x[0]); };
  p.prox = soft_threshold;
  AccelResult r = mst_run(p, {-3.0}, 1.0, 200);
  EXPECT_NEAR(r.state.x[0], 1.0, 1e-6);
}

TEST(Mst, StartAtOptimumStaysThere) {
  AccelResult r = mst_run(quadratic({2.0, 5.0}, {1.0, 3.0}), {1.0, 3.0}, 5.0, 20);
  for (const TraceRow& row : r.state.trace) EXPECT_LE(row.F, 1e-28);
  EXPECT_NEAR(r.state.x[0], 1.0, 1e-15);
  EXPECT_NEAR(r.state.x[1], 3.0, 1e-15);
}

TEST(Mst, EstimateFunctionCertificate) {
  // A_k F(x_k) <= min phi_k at every step (exact oracle, eps = 0).
  CompositeProblem p = quadratic({4.0, 1.0, 0.1}, {1.0, -1.0, 3.0});
  AccelOptions o;
  o.L0 = 4.0;
  o.adaptive = false;
  o.max_iter = 100;
  int checked = 0;
  o.stop = [&](AccelState& st) {
    EXPECT_LE(st.A * st.F_x, st.phi_star + 1e-9 * std::max(1.0, std::abs(st.phi_star)));
    ++checked;
    return false;
  };
  accel_run(p, {0, 0, 0}, o);
  EXPECT_EQ(checked, 101);
}

TEST(Mst, GapBoundOnRandomQuadratics) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0), c(-5, 5);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> lam(20), cc(20);
    for (auto& v : lam) v = u(rng);
    for (auto& v : cc) v = c(rng);
    const double L = *std::max_element(lam.begin(), lam.end());
    AccelResult r = mst_run(quadratic(lam, cc), Vec(20, 0.0), L, 300);
    const double R2 = 0.5 * vec::dist2(cc, Vec(20, 0.0));
    for (const TraceRow& row : r.state.trace)
      EXPECT_LE(row.F, 4.0 * L * R2 / ((row.k + 1.0) * (row.k + 1.0)) * (1 + 1e-12));
  }
}

TEST(StronglyConvex, ReducesToBasicMethodWhenMuIsZero) {
  CompositeProblem p = quadratic({3.0, 0.5}, {1.0, 2.0});
  AccelResult a = mst_run(p, {0, 0}, 3.0, 50);
  AccelResult b = mst_strongly_convex_run(p, {0, 0}, 3.0, 0.0, 50);
  EXPECT_EQ(a.state.x, b.state.x);
}

TEST(StronglyConvex, LinearRate) {
  // Each step multiplies A by at least 1 + sqrt(mu / L); F - F* <= |x* - y0|^2 / (2 A_N).
  for (double kappa : {1.0, 100.0}) {
    const double L = 1.0, mu = 1.0 / kappa;
    std::vector<double> lam{L, mu, 0.5 * (L + mu)};
    Vec c{1.0, -2.0, 0.5};
    AccelResult r = mst_strongly_convex_run(quadratic(lam, c), Vec(3, 0.0), L, mu, 400);
    const double D2 = vec::dist2(c, Vec(3, 0.0));
    const auto& tr = r.state.trace;
    for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_GE(tr[k].A, tr[k - 1].A * (1 + std::sqrt(mu / L)) * (1 - 1e-12));
    for (const TraceRow& row : tr) {
      const double bound = D2 / 2.0 * L * std::pow(1 + std::sqrt(mu / L), -row.k);
      EXPECT_LE(row.F, bound * (1 + 1e-9) + 1e-300);
    }
  }
}

TEST(StronglyConvex, GapHalvesEveryTwoStepsWhenWellConditioned) {
  AccelResult r = mst_strongly_convex_run(quadratic({1.0}, {0.0}), {1.0}, 1.0, 1.0, 30);
  const auto& tr = r.state.trace;
  for (std::size_t k = 4; k + 2 < tr.size(); ++k)
    if (tr[k].F > 1e-300) EXPECT_LE(tr[k + 2].F, 0.5 * tr[k].F);
}

TEST(StronglyConvex, IterationsWithinPrediction) {
  const double L = 1.0, mu = 0.01, target = 1e-8;
  std::vector<double> lam{L, mu};
  Vec c{1.0, 1.0};
  AccelResult r = mst_strongly_convex_run(quadratic(lam, c), {0, 0}, L, mu, 2000);
  int hit = -1;
  for (const TraceRow& row : r.state.trace)
    if (row.F <= target) {
      hit = row.k;
      break;
    }
  const double D2 = vec::dist2(c, {0, 0});
  const int predicted = static_cast<int>(std::ceil(std::log(D2 * L / (2.0 * target)) / std::log(1 + std::sqrt(mu / L))));
  ASSERT_GE(hit, 0);
  EXPECT_LE(hit, predicted + 1);
}

TEST(Restart, StageLengthAndHalving) {
  CompositeProblem p = quadratic({1.0}, {0.0});
  RestartResult r = restart_run(p, {1.0}, 1.0, 1.0, 5);
  EXPECT_EQ(r.stage_length, 3);
  double prev = 0.5;  // F at the start
  for (double F : r.stage_F) {
    EXPECT_LE(F, prev / 4.0 + 1e-300);
    prev = F;
  }
}

TEST(Restart, DistanceHalvesPerStage) {
  const double L = 1.0, mu = 0.05;
  std::vector<double> lam{L, mu, 0.3};
  Vec c{2.0, -1.0, 4.0};
  CompositeProblem p = quadratic(lam, c);
  Vec x{0, 0, 0};
  double d2 = vec::dist2(x, c);
  for (int s = 0; s < 6; ++s) {
    RestartResult r = restart_run(p, x, L, mu, 1);
    const double nd2 = vec::dist2(r.x, c);
    EXPECT_LE(nd2, 0.5 * d2 * (1 + 1e-12));
    x = r.x;
    d2 = nd2;
  }
}

TEST(Restart, AtOptimumIsANoOp) {
  RestartResult r = restart_run(quadratic({1.0, 2.0}, {3.0, 4.0}), {3.0, 4.0}, 2.0, 1.0, 3);
  EXPECT_NEAR(r.x[0], 3.0, 1e-14);
  EXPECT_NEAR(r.x[1], 4.0, 1e-14);
}

TEST(Restart, Composite) {
  CompositeProblem p = quadratic({1.0, 1.0}, {2.0, -0.5});
  p.composite = [](const Vec& x) { return std::abs(x[0]) + std::abs(x[1]); };
  p.prox = soft_threshold;
  RestartResult r = restart_run(p, {0, 0}, 1.0, 1.0, 12);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 0.0, 1e-6);
}

TEST(Umst, AcceptanceInequalityHoldsAtEveryStep) {
  CompositeProblem p = l1({0.3, -1.2, 2.0});
  p.composite = [](const Vec& x) { return 0.1 * vec::dot(x, x); };
  p.prox = [](double w, const Vec& c, Vec& out) {
    out.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] / (1 + 0.2 * w);
  };
  AccelOptions o;
  o.eps = 1e-3;
  o.max_iter = 300;
  o.stop = [&](AccelState& st) {
    if (st.k == 0) return false;
    double lin = 0.0;
    for (std::size_t i = 0; i < st.x.size(); ++i) lin += st.grad_y[i] * (st.x[i] - st.y[i]);
    const double model = st.phi_y + lin + 0.5 * st.L * vec::dist2(st.x, st.y) + st.alpha / (2 * st.A) * o.eps;
    EXPECT_LE(st.Phi_x, model + 1e-12);
    EXPECT_LE(st.A * st.F_x, st.phi_star + st.slack + 1e-9 * std::max(1.0, std::abs(st.phi_star)));
    return false;
  };
  umst_run(p, {5, 5, 5}, o);
}

TEST(Umst, EvaluationsPerIteration) {
  CompositeProblem p = quadratic({1.0, 0.1, 0.01}, {1, 2, 3});
  AccelOptions o;
  o.eps = 1e-6;
  o.max_iter = 500;
  AccelResult r = umst_run(p, {0, 0, 0}, o);
  EXPECT_EQ(r.iterations, 500);
  EXPECT_LE(static_cast<double>(r.state.fn_calls) / 500.0, 4.5);
  EXPECT_LE(static_cast<double>(r.state.grad_calls) / 500.0, 2.5);
}

TEST(Umst, NonsmoothIterationBound) {
  // Without smoothness the iteration count is at most of order (M R / eps)^2,
  // with M the subgradient norm and R the distance to the minimizer.
  const int n = 200;
  Vec c(n);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : c) v = u(rng);
  CompositeProblem p = l1(c);
  const double M2 = n, R2 = vec::dist2(c, Vec(n, 0.0));
  std::vector<double> lx, ly;
  for (double eps : {0.4, 0.2, 0.1, 0.05}) {
    const int it = iterations_to(p, Vec(n, 0.0), 0.0, eps);
    EXPECT_LE(it, 8.0 * M2 * R2 / (eps * eps));
    lx.push_back(std::log(1 / eps));
    ly.push_back(std::log(it));
  }
  EXPECT_LE(slope(lx, ly), 2.3);
}

TEST(Umst, SmoothScaling) {
  // Iterations grow like eps^-1/2 on a smooth function.
  const int n = 400;
  std::vector<double> lam(n);
  Vec c(n, 1.0);
  for (int i = 0; i < n; ++i) lam[i] = 1.0 / ((i + 1.0) * (i + 1.0));
  CompositeProblem p = quadratic(lam, c);
  std::vector<double> lx, ly;
  for (double eps : {1e-2, 3e-3, 1e-3, 3e-4}) {
    lx.push_back(std::log(1 / eps));
    ly.push_back(std::log(iterations_to(p, Vec(n, 0.0), 0.0, eps)));
  }
  const double s = slope(lx, ly);
  EXPECT_GE(s, 0.3);
  EXPECT_LE(s, 0.7);
}

TEST(Inexact, ZeroErrorReproducesExactRun) {
  CompositeProblem p = quadratic({2.0, 0.3}, {1.0, -1.0});
  AccelOptions o;
  o.eps = 1e-4;
  o.max_iter = 60;
  AccelResult a = umst_run(p, {0, 0}, o);
  AccelResult b = umst_inexact_run(p, {0, 0}, o, [](int) { return 0.0; });
  EXPECT_EQ(a.state.x, b.state.x);
  EXPECT_EQ(a.state.fn_calls, b.state.fn_calls);
}

TEST(Inexact, NoisyOracleStaysWithinSlack) {
  // Strongly convex quadratic with F~ = f - d0 and gradient noise |xi| <= sqrt(2 d0 mu):
  // a (2 d0, 2L) oracle. Then f(x_N) - f* <= |x* - y0|^2 / (2 A_N) + slack / A_N + d0.
  const double mu = 0.5, L = 2.0, d0 = 1e-4;
  std::vector<double> lam{mu, L, 1.0};
  Vec c{1.0, -2.0, 3.0};
  CompositeProblem exact = quadratic(lam, c);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  CompositeProblem p;
  p.value = [&](const Vec& x) { return exact.value(x) - d0; };
  p.value_grad = [&](const Vec& x, Vec& g) {
    const double v = exact.value_grad(x, g);
    Vec xi(3);
    for (auto& z : xi) z = nd(rng);
    const double s = std::sqrt(2 * d0 * mu) / vec::norm2(xi);
    for (std::size_t i = 0; i < 3; ++i) g[i] += s * xi[i];
    return v - d0;
  };
  AccelOptions o;
  o.max_iter = 200;
  AccelResult r = umst_inexact_run(p, {0, 0, 0}, o, [&](int) { return 2 * d0; });
  const double f = exact.value(r.state.x);
  const double bound = vec::dist2(c, {0, 0, 0}) / (2 * r.state.A) + r.state.slack / r.state.A + d0;
  EXPECT_LE(f, bound);
  EXPECT_LE(f, 10 * d0);
}

TEST(Inexact, ErrorScaledByIterationCountKeepsGapWithinTwiceEps) {
  const double eps = 1e-5;
  const int N = 300;
  CompositeProblem p = quadratic({1.0, 0.2}, {3.0, 1.0});
  AccelOptions o;
  o.max_iter = N;
  o.eps = eps;
  AccelResult r = umst_inexact_run(p, {0, 0}, o, [&](int) { return eps / N; });
  EXPECT_LE(r.state.F_x, 2 * eps);
}

TEST(Umst, StallIsReported) {
  CompositeProblem p;
  p.value = [](const Vec& x) { return std::isfinite(x[0]) ? 1e300 * std::abs(x[0] - 1) : 0.0; };
  p.value_grad = [](const Vec& x, Vec& g) {
    g = {0.0};
    return x[0] == 0.0 ? 0.0 : 1e300;
  };
  AccelOptions o;
  o.max_iter = 5;
  o.stall_factor = 1e6;
  try {
    umst_run(p, {0.0}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LineSearchStall);
  }
}
