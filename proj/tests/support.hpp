#pragma once

// Random fixtures and independently coded reference solvers shared by the
// unit tests and the acceptance runner. Nothing here calls the solver under
// test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "subsvm/energy.hpp"
#include "subsvm/graphdata.hpp"
#include "subsvm/maxflow.hpp"
#include "subsvm/model.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Distinct unordered pairs, at most `max_edges`, endpoints stored (lo, hi)
// or (hi, lo) at random.
inline std::vector<std::pair<int, int>> random_edges(Rng& rng, int n, int max_edges) {
  std::vector<std::pair<int, int>> all;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) all.emplace_back(a, b);
  std::shuffle(all.begin(), all.end(), rng);
  const int m = std::min<int>(static_cast<int>(all.size()), uniform_int(rng, 0, max_edges));
  all.resize(static_cast<std::size_t>(m));
  for (auto& e : all)
    if (rng() & 1) std::swap(e.first, e.second);
  return all;
}

// Random spanning tree by attaching each node to an earlier one.
inline std::vector<std::pair<int, int>> random_tree(Rng& rng, int n) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    const int p = uniform_int(rng, 0, v - 1);
    if (rng() & 1)
      edges.emplace_back(p, v);
    else
      edges.emplace_back(v, p);
  }
  return edges;
}

inline std::array<double, 4> submodular_table(Rng& rng) {
  const double t0 = uniform(rng, -2, 2);
  const double t1 = uniform(rng, -2, 2);
  const double t2 = uniform(rng, -2, 2);
  const double t3 = t1 + t2 - t0 - uniform(rng, 0, 2);
  return {t0, t1, t2, t3};
}

inline subsvm::BinaryEnergy random_binary_energy(Rng& rng, int n, int max_edges, bool submodular) {
  subsvm::BinaryEnergy b(n);
  for (int i = 0; i < n; ++i) b.add_unary(i, uniform(rng, -2, 2), uniform(rng, -2, 2));
  for (auto [i, j] : random_edges(rng, n, max_edges)) {
    std::array<double, 4> t;
    if (submodular)
      t = submodular_table(rng);
    else
      for (auto& x : t) x = uniform(rng, -2, 2);
    b.add_pairwise(i, j, t[0], t[1], t[2], t[3]);
  }
  return b;
}

inline subsvm::EnergyFunction random_energy(Rng& rng, int n, int K, const std::vector<std::pair<int, int>>& edges) {
  subsvm::EnergyFunction e(n, K);
  for (int u = 0; u < n; ++u)
    for (int k = 0; k < K; ++k) e.unary(u, k) = uniform(rng, -2, 2);
  for (auto [u, v] : edges) {
    const auto id = e.add_edge(u, v);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) e.pairwise(id, k, l) = uniform(rng, -2, 2);
  }
  return e;
}

// Graph instance with non-negative features of the given dimensions.
inline subsvm::GraphInstance random_instance(Rng& rng, int n, int K, int d_n, int d_e, int max_edges) {
  subsvm::GraphInstance g;
  g.label_count = K;
  g.node_dim = d_n;
  g.edge_dim = d_e;
  for (int u = 0; u < n; ++u) {
    std::vector<double> f(static_cast<std::size_t>(d_n));
    for (auto& x : f) x = uniform(rng, -1, 1);
    g.node_features.push_back(f);
    g.labels.push_back(uniform_int(rng, 0, K - 1));
  }
  for (auto [u, v] : random_edges(rng, n, max_edges)) {
    std::vector<double> f(static_cast<std::size_t>(d_e));
    for (auto& x : f) x = uniform(rng, 0, 1);
    g.edges.push_back({u, v, f});
  }
  return g;
}

// Weights with the pairwise block >= 0 (or arbitrary if !feasible).
inline subsvm::WeightVector random_weights(Rng& rng, int K, int d_n, int d_e, bool feasible = true) {
  subsvm::WeightVector w(K, d_n, d_e);
  auto flat = w.flat();
  for (std::size_t j = 0; j < flat.size(); ++j)
    flat[j] = (feasible && w.in_nonnegative_set(j)) ? uniform(rng, 0, 1) : uniform(rng, -1, 1);
  return w;
}

// --- Enumeration oracles ---------------------------------------------------

struct MultiMin {
  std::vector<int> labeling;
  double energy = std::numeric_limits<double>::infinity();
};

// Recursive enumeration in lexicographic order; energies are recomputed
// from the tables for every complete labeling.
inline MultiMin enumerate_min(const subsvm::EnergyFunction& e) {
  const int n = e.node_count();
  const int K = e.label_count();
  MultiMin best;
  std::vector<int> y(static_cast<std::size_t>(n), 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      double s = 0.0;
      for (int u = 0; u < n; ++u) s += e.unary(u, y[static_cast<std::size_t>(u)]);
      for (std::size_t i = 0; i < e.edge_count(); ++i) {
        const auto& ed = e.edges()[i];
        s += e.pairwise_table(i)[static_cast<std::size_t>(y[static_cast<std::size_t>(ed.u)] * K + y[static_cast<std::size_t>(ed.v)])];
      }
      if (s < best.energy) {
        best.energy = s;
        best.labeling = y;
      }
      return;
    }
    for (int k = 0; k < K; ++k) {
      y[static_cast<std::size_t>(pos)] = k;
      rec(pos + 1);
    }
  };
  rec(0);
  return best;
}

inline double binary_value(const subsvm::BinaryEnergy& b, std::uint64_t mask, int n) {
  auto bit = [&](int i) { return static_cast<int>((mask >> (n - 1 - i)) & 1u); };
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += b.unary(i)[static_cast<std::size_t>(bit(i))];
  for (const auto& ed : b.edges()) s += ed.table[static_cast<std::size_t>(2 * bit(ed.i) + bit(ed.j))];
  return s;
}

inline std::vector<std::uint8_t> mask_bits(std::uint64_t mask, int n) {
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((mask >> (n - 1 - i)) & 1u);
  return x;
}

struct BinMin {
  std::vector<std::uint8_t> labeling;
  double energy = std::numeric_limits<double>::infinity();
  // Every labeling within `tie` of the minimum.
  std::vector<std::vector<std::uint8_t>> minimizers;
};

// Node 0 is the most significant bit, so increasing masks are in
// lexicographic order.
inline BinMin enumerate_binary(const subsvm::BinaryEnergy& b, double tie = 1e-9) {
  const int n = b.node_count();
  BinMin r;
  std::vector<double> values(std::size_t{1} << n);
  for (std::uint64_t m = 0; m < values.size(); ++m) {
    values[m] = binary_value(b, m, n);
    if (values[m] < r.energy) {
      r.energy = values[m];
      r.labeling = mask_bits(m, n);
    }
  }
  for (std::uint64_t m = 0; m < values.size(); ++m)
    if (values[m] <= r.energy + tie) r.minimizers.push_back(mask_bits(m, n));
  return r;
}

// Minimum over binary labelings of b that are one-hot per original node
// (binary node u*K + k).
inline double enumerate_one_hot_binary(const subsvm::BinaryEnergy& b, int n, int K) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> y(static_cast<std::size_t>(n), 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n * K), 0);
      for (int u = 0; u < n; ++u) x[static_cast<std::size_t>(u * K + y[static_cast<std::size_t>(u)])] = 1;
      best = std::min(best, b.evaluate(x));
      return;
    }
    for (int k = 0; k < K; ++k) {
      y[static_cast<std::size_t>(pos)] = k;
      rec(pos + 1);
    }
  };
  rec(0);
  return best;
}

// Independent flow network description for cut enumeration.
struct RandomNetwork {
  int n = 0;
  std::vector<double> source_cap;
  std::vector<double> sink_cap;
  struct Arc {
    int from, to;
    double cap;
  };
  std::vector<Arc> arcs;

  subsvm::FlowNetwork build() const {
    subsvm::FlowNetwork net(n);
    for (int i = 0; i < n; ++i) net.add_terminal(i, source_cap[static_cast<std::size_t>(i)], sink_cap[static_cast<std::size_t>(i)]);
    for (const auto& a : arcs) net.add_edge(a.from, a.to, a.cap);
    return net;
  }

  double cut(const std::vector<std::uint8_t>& sink_side) const {
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
      if (sink_side[static_cast<std::size_t>(i)])
        c += source_cap[static_cast<std::size_t>(i)];
      else
        c += sink_cap[static_cast<std::size_t>(i)];
    }
    for (const auto& a : arcs)
      if (!sink_side[static_cast<std::size_t>(a.from)] && sink_side[static_cast<std::size_t>(a.to)]) c += a.cap;
    return c;
  }

  double min_cut() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) best = std::min(best, cut(mask_bits(m, n)));
    return best;
  }
};

inline RandomNetwork random_network(Rng& rng, int n) {
  RandomNetwork r;
  r.n = n;
  for (int i = 0; i < n; ++i) {
    r.source_cap.push_back(rng() % 3 == 0 ? 0.0 : uniform(rng, 0, 3));
    r.sink_cap.push_back(rng() % 3 == 0 ? 0.0 : uniform(rng, 0, 3));
  }
  for (auto [a, b] : random_edges(rng, n, 3 * n)) r.arcs.push_back({a, b, uniform(rng, 0, 3)});
  return r;
}

// Reference for min 0.5|w|^2 + C xi, w.g_j >= l_j - xi, xi >= 0, w_p >= 0 on
// the mask: accelerated projected gradient on the full dual
//   max_{a, b} l.a - 0.5 |G a + b|^2,  a >= 0, sum a <= C, b >= 0 on the mask
// with w = G a + b. Returns the primal objective of w.
struct ReferenceQp {
  std::vector<double> w;
  double objective = 0.0;
  double dual = 0.0;
};

inline void project_capped_simplex(std::vector<double>& a, double C) {
  std::vector<double> c(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c[i] = std::max(0.0, a[i]);
    s += c[i];
  }
  if (s <= C) {
    a = c;
    return;
  }
  // Euclidean projection onto {a >= 0, sum a = C}.
  std::vector<double> u = a;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - C) / static_cast<double>(i + 1);
    if (u[i] - t > 0) theta = t;
  }
  for (auto& x : a) x = std::max(0.0, x - theta);
}

inline ReferenceQp reference_qp(const std::vector<std::vector<double>>& G, const std::vector<double>& l, double C,
                                const std::vector<std::uint8_t>& mask, int iterations = 200000) {
  const std::size_t m = G.size();
  const std::size_t d = mask.size();
  // Lipschitz constant of the dual gradient: ||[G I_P]||^2 <= ||G||_F^2 + 1.
  double L = 1.0;
  for (const auto& g : G)
    for (double x : g) L += x * x;
  std::vector<double> a(m, 0.0), b(d, 0.0), ya(m, 0.0), yb(d, 0.0), a_prev(m), b_prev(d);
  auto primal_w = [&](const std::vector<double>& aa, const std::vector<double>& bb) {
    std::vector<double> w(bb);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < d; ++p) w[p] += aa[j] * G[j][p];
    return w;
  };
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const auto w = primal_w(ya, yb);
    a_prev = a;
    b_prev = b;
    for (std::size_t j = 0; j < m; ++j) {
      double gw = 0.0;
      for (std::size_t p = 0; p < d; ++p) gw += G[j][p] * w[p];
      a[j] = ya[j] + (l[j] - gw) / L;
    }
    project_capped_simplex(a, C);
    for (std::size_t p = 0; p < d; ++p) b[p] = mask[p] ? std::max(0.0, yb[p] - w[p] / L) : 0.0;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    for (std::size_t j = 0; j < m; ++j) ya[j] = a[j] + mom * (a[j] - a_prev[j]);
    for (std::size_t p = 0; p < d; ++p) yb[p] = b[p] + mom * (b[p] - b_prev[p]);
    t = t_next;
  }
  ReferenceQp r;
  r.w = primal_w(a, b);
  // Recover a feasible primal point by clipping onto the constraint.
  for (std::size_t p = 0; p < d; ++p)
    if (mask[p]) r.w[p] = std::max(0.0, r.w[p]);
  double xi = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double gw = 0.0;
    for (std::size_t p = 0; p < d; ++p) gw += G[j][p] * r.w[p];
    xi = std::max(xi, l[j] - gw);
  }
  double wsq = 0.0;
  for (double x : r.w) wsq += x * x;
  r.objective = 0.5 * wsq + C * xi;
  const auto wd = primal_w(a, b);
  double lin = 0.0;
  for (std::size_t j = 0; j < m; ++j) lin += l[j] * a[j];
  double wdsq = 0.0;
  for (double x : wd) wdsq += x * x;
  r.dual = lin - 0.5 * wdsq;
  return r;
}

// max over all 2^(nK) binary labelings of Delta_b(gold, ybar) + w . Psi(x, ybar),
// computed directly from weights and features.
inline double exhaustive_oracle_value(const subsvm::WeightVector& w, const subsvm::GraphInstance& x,
                                      const std::vector<int>& gold, double rho) {
  const int n = static_cast<int>(x.node_count());
  const int K = w.label_count();
  const int bits = n * K;
  std::vector<double> su(static_cast<std::size_t>(bits));
  for (int u = 0; u < n; ++u)
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int p = 0; p < x.node_dim; ++p) s += w.unary(k)[static_cast<std::size_t>(p)] * x.node_features[static_cast<std::size_t>(u)][static_cast<std::size_t>(p)];
      su[static_cast<std::size_t>(u * K + k)] = s;
    }
  std::vector<std::vector<double>> se;
  for (const auto& e : x.edges) {
    std::vector<double> t(static_cast<std::size_t>(K * K));
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) {
        double s = 0.0;
        for (int p = 0; p < x.edge_dim; ++p) s += w.pairwise(k, l)[static_cast<std::size_t>(p)] * e.features[static_cast<std::size_t>(p)];
        t[static_cast<std::size_t>(k * K + l)] = s;
      }
    se.push_back(t);
  }
  const double per_bit = rho / (2.0 * n);
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << bits); ++m) {
    auto on = [&](int u, int k) { return ((m >> (u * K + k)) & 1u) != 0; };
    double v = 0.0;
    for (int u = 0; u < n; ++u)
      for (int k = 0; k < K; ++k) {
        const bool b = on(u, k);
        if (b) v += su[static_cast<std::size_t>(u * K + k)];
        if (b != (gold[static_cast<std::size_t>(u)] == k)) v += per_bit;
      }
    for (std::size_t i = 0; i < x.edges.size(); ++i)
      for (int k = 0; k < K; ++k)
        if (on(x.edges[i].u, k))
          for (int l = 0; l < K; ++l)
            if (on(x.edges[i].v, l)) v += se[i][static_cast<std::size_t>(k * K + l)];
    best = std::max(best, v);
  }
  return best;
}

// Spearman rank correlation with average ranks for ties.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return (saa == 0.0 || sbb == 0.0) ? 0.0 : sab / std::sqrt(saa * sbb);
}

} // namespace testing
