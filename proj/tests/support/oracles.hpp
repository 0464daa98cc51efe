#pragma once

// Reference implementations used to check the library. Each one uses a
// different algorithm from the code it checks and shares none of its code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

// Literal double loop over (positive, negative) pairs.
inline double auc_all_pairs(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// ---- SVM dual ---------------------------------------------------------------

struct DualProblem {
  std::vector<std::vector<double>> q;  // y_i y_j k(x_i, x_j)
  std::vector<int> y;
  double c = 1.0;
};

inline DualProblem make_dual(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c,
                             double gamma) {
  DualProblem p;
  const std::size_t n = x.size();
  p.q.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) d2 += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      p.q[i][j] = y[i] * y[j] * std::exp(-gamma * d2);
    }
  }
  p.y = y;
  p.c = c;
  return p;
}

// sum(alpha) - 1/2 alpha' Q alpha
inline double dual_objective(const DualProblem& p, std::span<const double> alpha) {
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) quad += alpha[i] * p.q[i][j] * alpha[j];
  }
  return lin - 0.5 * quad;
}

// Euclidean projection onto {0 <= a <= C, y'a = 0}. a_i = clip(v_i - lambda y_i)
// and h(lambda) = sum y_i a_i is piecewise linear and non-increasing, so the
// root is found exactly between two sorted breakpoints.
inline std::vector<double> project(std::span<const double> v, std::span<const int> y, double c) {
  const std::size_t n = v.size();
  auto at = [&](double lambda) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(v[i] - lambda * y[i], 0.0, c);
    return a;
  };
  auto h = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += y[i] * std::clamp(v[i] - lambda * y[i], 0.0, c);
    return s;
  };
  std::vector<double> bp;
  for (std::size_t i = 0; i < n; ++i) {
    bp.push_back(y[i] * v[i]);
    bp.push_back(y[i] * (v[i] - c));
  }
  std::sort(bp.begin(), bp.end());
  double lo = bp.front();
  double hlo = h(lo);
  if (hlo <= 0.0) return at(lo);
  for (std::size_t k = 1; k < bp.size(); ++k) {
    const double hi = bp[k];
    const double hhi = h(hi);
    if (hhi <= 0.0) {
      if (hhi == 0.0) return at(hi);
      return at(lo + (hi - lo) * hlo / (hlo - hhi));
    }
    lo = hi;
    hlo = hhi;
  }
  return at(bp.back());
}

// m(alpha) - M(alpha): the largest first-order KKT violation of the dual.
inline double max_kkt_violation(const DualProblem& p, std::span<const double> alpha) {
  const std::size_t n = alpha.size();
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double g = -1.0;
    for (std::size_t j = 0; j < n; ++j) g += p.q[i][j] * alpha[j];
    const double v = -p.y[i] * g;
    const bool in_up = (p.y[i] == 1 && alpha[i] < p.c) || (p.y[i] == -1 && alpha[i] > 0.0);
    const bool in_low = (p.y[i] == 1 && alpha[i] > 0.0) || (p.y[i] == -1 && alpha[i] < p.c);
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  return up - low;
}

// Accelerated projected gradient with function-value restarts. Stops once
// the iterate's first-order optimality residual is below `tol`.
inline std::vector<double> solve_dual_pg(const DualProblem& p, double tol = 1e-10, int max_iter = 2000000,
                                         int* iterations = nullptr) {
  const std::size_t n = p.y.size();
  auto mul = [&](std::span<const double> a) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += p.q[i][j] * a[j];
    return out;
  };
  // Largest eigenvalue by power iteration.
  std::vector<double> v(n, 1.0);
  double lmax = 1.0;
  for (int it = 0; it < 500; ++it) {
    auto w = mul(v);
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    lmax = norm;
  }
  const double step = 1.0 / (lmax * 1.05);

  auto f = [&](std::span<const double> a) { return -dual_objective(p, a); };
  std::vector<double> x(n, 0.0);
  std::vector<double> z = x;
  double t = 1.0;
  double fx = f(x);
  for (int it = 0; it < max_iter; ++it) {
    if (iterations) *iterations = it + 1;
    auto g = mul(z);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = z[i] - step * (g[i] - 1.0);
    auto xn = project(u, p.y, p.c);
    const double fn = f(xn);
    if (fn > fx && t > 1.0) {
      // objective went up: drop the momentum and retry from x
      t = 1.0;
      z = x;
      continue;
    }
    double move = 0.0;
    for (std::size_t i = 0; i < n; ++i) move = std::max(move, std::abs(xn[i] - x[i]));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = xn[i] + (t - 1.0) / tn * (xn[i] - x[i]);
    x = std::move(xn);
    fx = fn;
    t = tn;
    if (move == 0.0) break;
    if (it % 25 == 0 && max_kkt_violation(p, x) <= tol) break;
  }
  return x;
}

// ---- Platt ------------------------------------------------------------------

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Negative log-likelihood of p = 1 / (1 + exp(a f + b)) against smoothed targets.
inline double platt_nll(std::span<const double> f, std::span<const int> y, double a, double b) {
  double npos = 0, nneg = 0;
  for (int v : y) (v == 1 ? npos : nneg) += 1;
  const double tp = (npos + 1) / (npos + 2);
  const double tn = 1 / (nneg + 2);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = y[i] == 1 ? tp : tn;
    const double z = a * f[i] + b;
    // -log p = softplus(z); -log(1 - p) = softplus(-z)
    s += t * softplus(z) + (1 - t) * softplus(-z);
  }
  return s;
}

struct AB {
  double a = 0;
  double b = 0;
};

// Exhaustive grid over (a, b), re-centred and shrunk each round.
inline AB platt_grid(std::span<const double> f, std::span<const int> y) {
  AB best{-1.0, 0.0};
  double wa = 50.0, wb = 50.0;
  const int steps = 100;
  for (int round = 0; round < 24; ++round) {
    AB centre = best;
    double best_v = platt_nll(f, y, best.a, best.b);
    for (int i = 0; i <= steps; ++i) {
      const double a = centre.a - wa + 2 * wa * i / steps;
      for (int j = 0; j <= steps; ++j) {
        const double b = centre.b - wb + 2 * wb * j / steps;
        const double v = platt_nll(f, y, a, b);
        if (v < best_v) {
          best_v = v;
          best = {a, b};
        }
      }
    }
    wa /= 4;
    wb /= 4;
  }
  return best;
}

// ---- Mann-Whitney -----------------------------------------------------------

inline double u_statistic(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a)
    for (double z : b) u += x > z ? 1.0 : (x == z ? 0.5 : 0.0);
  return u;
}

// Two-sided exact p: every way of choosing which |a| of the pooled values
// belong to the first sample is equally likely under the null.
inline double mann_whitney_enumerate(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const double u_obs = u_statistic(a, b);
  double total = 0, le = 0, ge = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    std::vector<double> x, z;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : z).push_back(pooled[i]);
    const double u = u_statistic(x, z);
    total += 1;
    if (u <= u_obs + 1e-9) le += 1;
    if (u >= u_obs - 1e-9) ge += 1;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Monte Carlo permutation p-value, two-sided on |U - mean|.
inline double mann_whitney_permutation(std::span<const double> a, std::span<const double> b, int permutations,
                                       std::uint64_t seed) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  // midranks by counting
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) less += 1;
      else if (pooled[j] == pooled[i]) equal += 1;
    }
    rank[i] = less + (equal + 1) / 2;
  }
  const double na = static_cast<double>(a.size());
  const double mean = na * static_cast<double>(b.size()) / 2;
  auto u_of = [&](const std::vector<double>& r) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += r[i];
    return s - na * (na + 1) / 2;
  };
  const double dev = std::abs(u_of(rank) - mean);
  std::mt19937_64 gen(seed);
  int hits = 0;
  std::vector<double> r = rank;
  for (int k = 0; k < permutations; ++k) {
    std::shuffle(r.begin(), r.end(), gen);
    if (std::abs(u_of(r) - mean) >= dev - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / permutations;
}

}  // namespace oracle
