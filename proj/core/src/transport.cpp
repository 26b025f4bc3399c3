#include "mfl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "mfl/kahan.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kMassGrid = std::int64_t(1) << 40;

double dist2(const PointCloud& a, std::size_t i, const PointCloud& b, std::size_t j) {
  const double* x = a.point(i);
  const double* y = b.point(j);
  double r2 = 0.0;
  for (int c = 0; c < a.dim; ++c) {
    double d = x[c] - y[c];
    r2 += d * d;
  }
  return r2;
}

// |x-y|^p from the squared distance; log-space for general p to avoid
// overflow for large exponents.
double cost_pow(double r2, double p) {
  if (r2 == 0.0) return 0.0;
  if (p == 2.0) return r2;
  if (p == 1.0) return std::sqrt(r2);
  return std::exp(0.5 * p * std::log(r2));
}

double value_from_mean(double mean_cost, double p) {
  if (mean_cost <= 0.0) return 0.0;
  return std::exp(std::log(mean_cost) / p);
}

// Rounds weights to the common 2^40 integer grid; the leftover grid mass is
// assigned to the entries with the largest fractional parts (ties by index).
std::vector<std::int64_t> to_integer_masses(const std::vector<double>& w) {
  const std::size_t m = w.size();
  std::vector<std::int64_t> out(m);
  std::vector<std::pair<double, std::size_t>> frac(m);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double scaled = w[i] * static_cast<double>(kMassGrid);
    double fl = std::floor(scaled);
    out[i] = static_cast<std::int64_t>(fl);
    frac[i] = {scaled - fl, i};
    total += out[i];
  }
  std::int64_t rem = kMassGrid - total;
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t k = 0; k < rem; ++k) ++out[frac[static_cast<std::size_t>(k) % m].second];
  return out;
}

}  // namespace

bool PointCloud::uniform_weights(double tol) const {
  if (m == 0) return false;
  double w0 = 1.0 / static_cast<double>(m);
  for (double w : weights)
    if (std::abs(w - w0) > tol) return false;
  return true;
}

void PointCloud::validate() const {
  if (m == 0 || dim <= 0) throw std::invalid_argument("point cloud: empty");
  if (points.size() != m * static_cast<std::size_t>(dim))
    throw std::invalid_argument("point cloud: points size mismatch");
  if (weights.size() != m) throw std::invalid_argument("point cloud: weights size mismatch");
  KahanSum s;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("point cloud: negative weight");
    s.add(w);
  }
  if (std::abs(s.value() - 1.0) > 1e-12)
    throw std::invalid_argument("point cloud: weights do not sum to 1");
}

PointCloud uniform_cloud(int dim, std::vector<double> points) {
  PointCloud c;
  c.dim = dim;
  c.m = points.size() / static_cast<std::size_t>(dim);
  c.points = std::move(points);
  c.weights.assign(c.m, 1.0 / static_cast<double>(c.m));
  return c;
}

// ---------------------------------------------------------------------------
// Dense Jonker-Volgenant linear assignment.
// ---------------------------------------------------------------------------

namespace {

// Gauss-Seidel auction with epsilon scaling on integer-scaled costs. Dense
// Jonker-Volgenant degrades badly on geometric cost matrices at a few
// thousand points; the auction stays near-quadratic there. The assignment is
// optimal for the integer costs (final epsilon below the integer resolution),
// which perturbs the optimum by at most 2^-40 relatively; the reported total
// is evaluated with the original costs.
double solve_assignment_auction(std::size_t n_, const std::vector<double>& cost,
                                std::vector<int>& rowsol) {
  const std::int64_t n = static_cast<std::int64_t>(n_);
  double max_cost = 0.0;
  for (double c : cost) max_cost = std::max(max_cost, c);
  rowsol.assign(n_, -1);
  if (max_cost <= 0.0) {
    // all costs are zero (identical clouds): any assignment is optimal
    for (std::int64_t i = 0; i < n; ++i) rowsol[i] = static_cast<int>(i);
    return 0.0;
  }
  const double scale =
      static_cast<double>(std::int64_t(1) << 40) / max_cost * static_cast<double>(n + 1);
  std::vector<std::int64_t> benefit(cost.size());
  for (std::size_t e = 0; e < cost.size(); ++e)
    benefit[e] = -static_cast<std::int64_t>(std::llround(cost[e] * scale));

  const std::int64_t c_big = (std::int64_t(1) << 40) * (n + 1);
  std::vector<std::int64_t> price(n_, 0);
  std::vector<int> colsol(n_);
  std::vector<int> stack(n_);

  for (std::int64_t eps = std::max<std::int64_t>(1, c_big / 4);; eps = std::max<std::int64_t>(1, eps / 5)) {
    std::fill(rowsol.begin(), rowsol.end(), -1);
    std::fill(colsol.begin(), colsol.end(), -1);
    std::int64_t top = 0;
    for (std::int64_t i = n - 1; i >= 0; --i) stack[top++] = static_cast<int>(i);
    while (top > 0) {
      const int i = stack[--top];
      const std::int64_t* b = benefit.data() + static_cast<std::size_t>(i) * n_;
      std::int64_t v1 = std::numeric_limits<std::int64_t>::min(), v2 = v1;
      int j1 = -1;
      for (std::int64_t j = 0; j < n; ++j) {
        std::int64_t v = b[j] - price[j];
        if (v > v1) {
          v2 = v1;
          v1 = v;
          j1 = static_cast<int>(j);
        } else if (v > v2) {
          v2 = v;
        }
      }
      price[j1] += v1 - v2 + eps;
      const int i0 = colsol[j1];
      if (i0 >= 0) {
        rowsol[i0] = -1;
        stack[top++] = i0;
      }
      rowsol[i] = j1;
      colsol[j1] = i;
    }
    if (eps == 1) break;
  }

  KahanSum acc;
  for (std::size_t i = 0; i < n_; ++i)
    acc.add(cost[i * n_ + static_cast<std::size_t>(rowsol[i])]);
  return acc.value();
}

}  // namespace

double solve_assignment(std::size_t n_, const std::vector<double>& cost,
                        std::vector<int>& rowsol) {
  if (n_ > 256) return solve_assignment_auction(n_, cost, rowsol);
  const int n = static_cast<int>(n_);
  auto C = [&](int i, int j) -> double { return cost[static_cast<std::size_t>(i) * n + j]; };
  rowsol.assign(n, -1);
  std::vector<int> colsol(n, -1), free_rows(n), collist(n), pred(n), matches(n, 0);
  std::vector<double> v(n, 0.0), d(n, 0.0);

  // column reduction
  for (int j = n - 1; j >= 0; --j) {
    double minv = C(0, j);
    int imin = 0;
    for (int i = 1; i < n; ++i)
      if (C(i, j) < minv) {
        minv = C(i, j);
        imin = i;
      }
    v[j] = minv;
    if (++matches[imin] == 1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    }
  }

  // reduction transfer
  int numfree = 0;
  for (int i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows[numfree++] = i;
    } else if (matches[i] == 1) {
      int j1 = rowsol[i];
      double minv = kInf;
      for (int j = 0; j < n; ++j)
        if (j != j1) minv = std::min(minv, C(i, j) - v[j]);
      v[j1] -= minv;
    }
  }

  // augmenting row reduction, two passes
  for (int loop = 0; loop < 2 && numfree > 0; ++loop) {
    int k = 0;
    int prevnumfree = numfree;
    numfree = 0;
    while (k < prevnumfree) {
      int i = free_rows[k++];
      double umin = C(i, 0) - v[0];
      double usubmin = kInf;
      int j1 = 0, j2 = -1;
      for (int j = 1; j < n; ++j) {
        double h = C(i, j) - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            j2 = j1;
            umin = h;
            j1 = j;
          }
        }
      }
      int i0 = colsol[j1];
      if (umin < usubmin) {
        v[j1] -= usubmin - umin;
      } else if (i0 >= 0) {
        j1 = j2;
        i0 = colsol[j1];
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (i0 >= 0) {
        if (umin < usubmin)
          free_rows[--k] = i0;
        else
          free_rows[numfree++] = i0;
      }
    }
  }

  // augmentation (Dijkstra over columns) for the remaining free rows
  for (int f = 0; f < numfree; ++f) {
    int freerow = free_rows[f];
    for (int j = 0; j < n; ++j) {
      d[j] = C(freerow, j) - v[j];
      pred[j] = freerow;
      collist[j] = j;
    }
    int low = 0, up = 0, last = -1, endofpath = -1;
    double minv = 0.0;
    bool unassigned = false;
    do {
      if (up == low) {
        last = low - 1;
        minv = d[collist[up++]];
        for (int k = up; k < n; ++k) {
          int j = collist[k];
          double h = d[j];
          if (h <= minv) {
            if (h < minv) {
              up = low;
              minv = h;
            }
            collist[k] = collist[up];
            collist[up++] = j;
          }
        }
        for (int k = low; k < up; ++k) {
          int j = collist[k];
          if (colsol[j] < 0) {
            endofpath = j;
            unassigned = true;
            break;
          }
        }
      }
      if (!unassigned) {
        int j1 = collist[low++];
        int i = colsol[j1];
        double u1 = C(i, j1) - v[j1] - minv;
        for (int k = up; k < n; ++k) {
          int j = collist[k];
          double h = C(i, j) - v[j] - u1;
          if (h < d[j]) {
            d[j] = h;
            pred[j] = i;
            if (h == minv) {
              if (colsol[j] < 0) {
                endofpath = j;
                unassigned = true;
                break;
              }
              collist[k] = collist[up];
              collist[up++] = j;
            }
          }
        }
      }
    } while (!unassigned);
    for (int k = 0; k <= last; ++k) {
      int j1 = collist[k];
      v[j1] += d[j1] - minv;
    }
    int i;
    do {
      i = pred[endofpath];
      colsol[endofpath] = i;
      int j1 = endofpath;
      endofpath = rowsol[i];
      rowsol[i] = j1;
    } while (i != freerow);
  }

  KahanSum acc;
  for (int i = 0; i < n; ++i) acc.add(C(i, rowsol[i]));
  return acc.value();
}

// ---------------------------------------------------------------------------
// W_p
// ---------------------------------------------------------------------------

namespace {

TransportResult wasserstein_assignment(const PointCloud& a, const PointCloud& b, double p) {
  const std::size_t m = a.m;
  std::vector<double> cost(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = cost_pow(dist2(a, i, b, j), p);
  std::vector<int> rowsol;
  double total = solve_assignment(m, cost, rowsol);
  TransportResult r;
  r.p = p;
  r.value = value_from_mean(total / static_cast<double>(m), p);
  r.optimal = true;
  double mass = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    r.plan.push_back({i, static_cast<std::size_t>(rowsol[i]), mass});
  return r;
}

// Successive shortest paths with potentials on the complete bipartite
// transportation graph. Supplies/demands are integers on the 2^40 grid and the
// arc costs are rounded to a 2^40 integer grid as well, so the search runs in
// exact arithmetic and always terminates (floating-point costs can leave
// residual cycles of cost -epsilon, which stall Dijkstra). The reported value
// is evaluated with the unrounded costs over the optimal plan; the rounding
// perturbs the optimum by at most 2^-40 relatively.
TransportResult wasserstein_flow(const PointCloud& a, const PointCloud& b, double p) {
  const std::size_t m = a.m, k = b.m;
  const std::size_t nn = m + k;
  std::vector<std::int64_t> supply = to_integer_masses(a.weights);
  std::vector<std::int64_t> demand = to_integer_masses(b.weights);

  std::vector<double> cost(m * k);
  double max_cost = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double c = cost_pow(dist2(a, i, b, j), p);
      cost[i * k + j] = c;
      max_cost = std::max(max_cost, c);
    }
  const double cost_scale =
      max_cost > 0.0 ? static_cast<double>(std::int64_t(1) << 40) / max_cost : 0.0;
  std::vector<std::int64_t> icost(m * k);
  for (std::size_t e = 0; e < m * k; ++e)
    icost[e] = static_cast<std::int64_t>(std::llround(cost[e] * cost_scale));

  constexpr std::int64_t kInfInt = std::numeric_limits<std::int64_t>::max() / 4;

  // flow stored densely; backward arcs exist where flow > 0
  std::vector<std::int64_t> flow(m * k, 0);
  std::vector<std::int64_t> pot(nn, 0);
  std::vector<std::int64_t> dd(nn);
  std::vector<int> pred(nn);
  std::vector<std::int64_t> rem_s = supply, rem_d = demand;
  std::int64_t remaining = kMassGrid;

  while (remaining > 0) {
    std::fill(dd.begin(), dd.end(), kInfInt);
    std::fill(pred.begin(), pred.end(), -1);
    using QE = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    for (std::size_t i = 0; i < m; ++i)
      if (rem_s[i] > 0) {
        dd[i] = 0;
        pq.push({0, i});
      }
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > dd[u]) continue;
      if (u < m) {
        const std::size_t i = u;
        for (std::size_t j = 0; j < k; ++j) {
          std::int64_t w = icost[i * k + j] + pot[i] - pot[m + j];
          if (dd[i] + w < dd[m + j]) {
            dd[m + j] = dd[i] + w;
            pred[m + j] = static_cast<int>(i);
            pq.push({dd[m + j], m + j});
          }
        }
      } else {
        const std::size_t j = u - m;
        for (std::size_t i = 0; i < m; ++i) {
          if (flow[i * k + j] <= 0) continue;
          std::int64_t w = -icost[i * k + j] + pot[m + j] - pot[i];
          if (dd[m + j] + w < dd[i]) {
            dd[i] = dd[m + j] + w;
            pred[i] = static_cast<int>(m + j);
            pq.push({dd[i], i});
          }
        }
      }
    }
    // cheapest reachable sink with remaining demand
    std::size_t best = nn;
    for (std::size_t j = 0; j < k; ++j)
      if (rem_d[j] > 0 && dd[m + j] < kInfInt && (best == nn || dd[m + j] < dd[best]))
        best = m + j;
    if (best == nn) throw std::runtime_error("wasserstein_p: infeasible transport instance");

    // bottleneck along the predecessor path
    std::int64_t push = rem_d[best - m];
    for (std::size_t u = best; pred[u] >= 0;) {
      std::size_t pu = static_cast<std::size_t>(pred[u]);
      if (u >= m) {
        // forward arc pu -> u, infinite capacity
      } else {
        push = std::min(push, flow[u * k + (pu - m)]);
      }
      if (pred[pu] < 0 && pu < m) push = std::min(push, rem_s[pu]);
      u = pu;
    }
    // apply
    for (std::size_t u = best; pred[u] >= 0;) {
      std::size_t pu = static_cast<std::size_t>(pred[u]);
      if (u >= m)
        flow[pu * k + (u - m)] += push;
      else
        flow[u * k + (pu - m)] -= push;
      if (pred[pu] < 0 && pu < m) rem_s[pu] -= push;
      u = pu;
    }
    rem_d[best - m] -= push;
    remaining -= push;
    for (std::size_t u = 0; u < nn; ++u)
      if (dd[u] < kInfInt) pot[u] += std::min(dd[u], dd[best]);
  }

  TransportResult r;
  r.p = p;
  KahanSum total;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (flow[i * k + j] > 0) {
        double mass = static_cast<double>(flow[i * k + j]) / static_cast<double>(kMassGrid);
        r.plan.push_back({i, j, mass});
        total.add(mass * cost[i * k + j]);
      }
  r.value = value_from_mean(total.value(), p);
  r.optimal = true;
  return r;
}

}  // namespace

TransportResult wasserstein_p(const PointCloud& a, const PointCloud& b, double p) {
  if (a.dim != b.dim) throw std::invalid_argument("wasserstein_p: dimension mismatch");
  if (!(p >= 1.0) || std::isinf(p))
    throw std::invalid_argument("wasserstein_p: p must be finite and >= 1");
  a.validate();
  b.validate();
  if (a.m == b.m && a.uniform_weights() && b.uniform_weights())
    return wasserstein_assignment(a, b, p);
  return wasserstein_flow(a, b, p);
}

// ---------------------------------------------------------------------------
// W_inf (bottleneck)
// ---------------------------------------------------------------------------

namespace {

// Kuhn augmenting-path matching over edges with cost <= thr.
bool feasible_matching(std::size_t m, const std::vector<double>& d2, double thr2,
                       std::vector<int>& rowsol) {
  std::vector<int> colsol(m, -1);
  rowsol.assign(m, -1);
  std::vector<char> seen(m);
  std::function<bool(std::size_t)> try_row = [&](std::size_t i) -> bool {
    for (std::size_t j = 0; j < m; ++j) {
      if (seen[j] || d2[i * m + j] > thr2) continue;
      seen[j] = 1;
      if (colsol[j] < 0 || try_row(static_cast<std::size_t>(colsol[j]))) {
        colsol[j] = static_cast<int>(i);
        rowsol[i] = static_cast<int>(j);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!try_row(i)) return false;
  }
  return true;
}

}  // namespace

TransportResult wasserstein_inf(const PointCloud& a, const PointCloud& b) {
  if (a.dim != b.dim) throw std::invalid_argument("wasserstein_inf: dimension mismatch");
  a.validate();
  b.validate();
  if (a.m != b.m || !a.uniform_weights() || !b.uniform_weights())
    throw std::invalid_argument(
        "wasserstein_inf: requires equal-size uniform clouds; resample the caller side");
  const std::size_t m = a.m;
  std::vector<double> d2(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) d2[i * m + j] = dist2(a, i, b, j);
  std::vector<double> levels = d2;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<int> rowsol, best_sol;
  std::size_t lo = 0, hi = levels.size() - 1;
  // the largest level is always feasible (complete bipartite graph)
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (feasible_matching(m, d2, levels[mid], rowsol)) {
      hi = mid;
      best_sol = rowsol;
    } else {
      lo = mid + 1;
    }
  }
  if (best_sol.empty()) feasible_matching(m, d2, levels[lo], best_sol);

  TransportResult r;
  r.p = kInf;
  r.value = std::sqrt(levels[lo]);
  r.optimal = true;
  double mass = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    r.plan.push_back({i, static_cast<std::size_t>(best_sol[i]), mass});
  return r;
}

// ---------------------------------------------------------------------------
// Oracles and surrogates
// ---------------------------------------------------------------------------

double brute_force_wasserstein(const PointCloud& a, const PointCloud& b, double p) {
  if (a.dim != b.dim) throw std::invalid_argument("brute_force_wasserstein: dimension mismatch");
  if (a.m != b.m || !a.uniform_weights() || !b.uniform_weights())
    throw std::invalid_argument("brute_force_wasserstein: equal-size uniform clouds only");
  if (a.m > 8) throw std::invalid_argument("brute_force_wasserstein: m <= 8 (factorial blow-up)");
  const std::size_t m = a.m;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  const bool inf_p = std::isinf(p);
  do {
    double v;
    if (inf_p) {
      v = 0.0;
      for (std::size_t i = 0; i < m; ++i) v = std::max(v, dist2(a, i, b, perm[i]));
      v = std::sqrt(v);
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += cost_pow(dist2(a, i, b, perm[i]), p);
      v = value_from_mean(s / static_cast<double>(m), p);
    }
    best = std::min(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ReferenceEstimate wasserstein_vs_reference(const PointCloud& empirical,
                                           const PointCloud& reference, double p,
                                           int repeats, std::uint64_t seed) {
  if (empirical.dim != reference.dim)
    throw std::invalid_argument("wasserstein_vs_reference: dimension mismatch");
  const std::size_t m = empirical.m, M = reference.m;
  if (M < m) throw std::invalid_argument("wasserstein_vs_reference: reference smaller than cloud");
  repeats = std::max(1, repeats);
  if (M == m) repeats = 1;

  ReferenceEstimate est;
  est.floor = std::pow(static_cast<double>(std::min(m, M)), -1.0 / empirical.dim);
  std::vector<std::size_t> idx(M);
  for (int rep = 0; rep < repeats; ++rep) {
    std::iota(idx.begin(), idx.end(), 0);
    if (M > m) {
      auto rng = make_rng(seed, 0x5AB5A + static_cast<std::uint64_t>(rep));
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (M - i));
        std::swap(idx[i], idx[j]);
      }
    }
    PointCloud sub;
    sub.dim = reference.dim;
    sub.m = m;
    sub.points.resize(m * static_cast<std::size_t>(sub.dim));
    for (std::size_t i = 0; i < m; ++i)
      for (int c = 0; c < sub.dim; ++c)
        sub.points[i * sub.dim + c] = reference.point(idx[i])[c];
    sub.weights.assign(m, 1.0 / static_cast<double>(m));
    double v = std::isinf(p) ? wasserstein_inf(empirical, sub).value
                             : wasserstein_assignment(empirical, sub, p).value;
    est.values.push_back(v);
  }
  std::vector<double> sorted = est.values;
  std::sort(sorted.begin(), sorted.end());
  est.value = sorted[sorted.size() / 2];
  return est;
}

std::string plan_to_csv(const TransportResult& r, const PointCloud& a, const PointCloud& b) {
  std::string out = "i,j,mass,distance\n";
  for (const auto& e : r.plan) {
    out += std::to_string(e.i) + "," + std::to_string(e.j) + "," + std::to_string(e.mass) + "," +
           std::to_string(std::sqrt(dist2(a, e.i, b, e.j))) + "\n";
  }
  return out;
}

}  // namespace mfl
