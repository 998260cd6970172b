#include "subsvm/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "subsvm/errors.hpp"

namespace subsvm {

namespace {

bool fits_cap(int base, int positions, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (int i = 0; i < positions; ++i) {
    if (total > cap / static_cast<std::uint64_t>(base)) return false;
    total *= static_cast<std::uint64_t>(base);
  }
  return total <= cap;
}

struct Incidence {
  std::size_t edge;
  int other;
};

std::vector<std::vector<Incidence>> incidence(const EnergyFunction& e) {
  std::vector<std::vector<Incidence>> adj(static_cast<std::size_t>(e.node_count()));
  for (std::size_t i = 0; i < e.edge_count(); ++i) {
    const auto& ed = e.edges()[i];
    adj[static_cast<std::size_t>(ed.u)].push_back({i, ed.v});
    adj[static_cast<std::size_t>(ed.v)].push_back({i, ed.u});
  }
  return adj;
}

// Pairwise cost with the label of `node` first, whatever the stored
// orientation of the edge.
double oriented(const EnergyFunction& e, std::size_t edge, int node, int node_label, int other_label) {
  return e.edges()[edge].u == node ? e.pairwise(edge, node_label, other_label)
                                   : e.pairwise(edge, other_label, node_label);
}

class BranchAndBound {
public:
  explicit BranchAndBound(const EnergyFunction& e) : e_(e), adj_(incidence(e)) {
    const auto n = static_cast<std::size_t>(e.node_count());
    edge_min_.resize(e.edge_count());
    for (std::size_t i = 0; i < e.edge_count(); ++i) {
      const auto t = e.pairwise_table(i);
      edge_min_[i] = *std::min_element(t.begin(), t.end());
    }
    // Sum of edge minima over edges whose endpoints are both >= d.
    free_edge_bound_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < e.edge_count(); ++i) {
      const auto lo = static_cast<std::size_t>(std::min(e.edges()[i].u, e.edges()[i].v));
      for (std::size_t d = 0; d <= lo; ++d) free_edge_bound_[d] += edge_min_[i];
    }
    current_.assign(n, 0);
  }

  InferenceResult run() {
    best_ = std::numeric_limits<double>::infinity();
    search(0, 0.0);
    InferenceResult r;
    r.labeling = best_labeling_;
    r.energy = evaluate_energy(e_, r.labeling);
    r.exact = true;
    return r;
  }

private:
  double cost_given_prefix(int node, int label, int depth) const {
    double c = e_.unary(node, label);
    for (const auto& inc : adj_[static_cast<std::size_t>(node)])
      if (inc.other < depth) c += oriented(e_, inc.edge, node, label, current_[static_cast<std::size_t>(inc.other)]);
    return c;
  }

  void search(int depth, double partial) {
    const int n = e_.node_count();
    const int K = e_.label_count();
    if (depth == n) {
      if (partial < best_) {
        best_ = partial;
        best_labeling_ = current_;
      }
      return;
    }
    double bound = partial + free_edge_bound_[static_cast<std::size_t>(depth)];
    for (int u = depth; u < n; ++u) {
      double m = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) m = std::min(m, cost_given_prefix(u, k, depth));
      bound += m;
    }
    if (bound > best_ + 1e-9 * (1.0 + std::fabs(best_))) return;
    for (int k = 0; k < K; ++k) {
      current_[static_cast<std::size_t>(depth)] = k;
      search(depth + 1, partial + cost_given_prefix(depth, k, depth));
    }
  }

  const EnergyFunction& e_;
  std::vector<std::vector<Incidence>> adj_;
  std::vector<double> edge_min_;
  std::vector<double> free_edge_bound_;
  Labeling current_;
  Labeling best_labeling_;
  double best_ = 0.0;
};

class Trws {
public:
  explicit Trws(const EnergyFunction& e) : e_(e), K_(static_cast<std::size_t>(e.label_count())), adj_(incidence(e)) {
    const auto n = static_cast<std::size_t>(e.node_count());
    lower_.resize(n);
    upper_.resize(n);
    for (std::size_t s = 0; s < n; ++s)
      for (const auto& inc : adj_[s]) (inc.other < static_cast<int>(s) ? lower_[s] : upper_[s]).push_back(inc.edge);
    chains_.resize(n);
    for (std::size_t s = 0; s < n; ++s) chains_[s] = std::max<std::size_t>({lower_[s].size(), upper_[s].size(), 1});
    // to_high_[e]: message into the higher endpoint, to_low_[e]: into the lower.
    to_high_.assign(e.edge_count(), std::vector<double>(K_, 0.0));
    to_low_.assign(e.edge_count(), std::vector<double>(K_, 0.0));
    scratch_.resize(K_);
  }

  InferenceResult run(const TrwsOptions& opt) {
    InferenceResult r;
    r.exact = false;
    r.converged = false;
    double best_energy = std::numeric_limits<double>::infinity();
    double prev_bound = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iterations; ++it) {
      sweep(true);
      sweep(false);
      const double bound = lower_bound();
      r.bound_history.push_back(bound);
      r.iterations = it;

      auto y = round();
      const double energy = evaluate_energy(e_, y);
      if (energy < best_energy) {
        best_energy = energy;
        r.labeling = std::move(y);
      }
      const double scale = 1.0 + std::fabs(best_energy);
      if (best_energy - bound <= opt.tolerance * scale || bound - prev_bound <= opt.tolerance * scale) {
        r.converged = true;
        break;
      }
      prev_bound = bound;
    }
    r.energy = best_energy;
    r.lower_bound = r.bound_history.empty() ? best_energy : r.bound_history.back();
    return r;
  }

private:
  int low(std::size_t edge) const { return std::min(e_.edges()[edge].u, e_.edges()[edge].v); }
  int high(std::size_t edge) const { return std::max(e_.edges()[edge].u, e_.edges()[edge].v); }

  // Pairwise cost as (label of low endpoint, label of high endpoint).
  double theta(std::size_t edge, std::size_t a, std::size_t b) const {
    const auto& ed = e_.edges()[edge];
    return ed.u < ed.v ? e_.pairwise(edge, static_cast<int>(a), static_cast<int>(b))
                       : e_.pairwise(edge, static_cast<int>(b), static_cast<int>(a));
  }

  const std::vector<double>& incoming(std::size_t edge, std::size_t node) const {
    return static_cast<int>(node) == high(edge) ? to_high_[edge] : to_low_[edge];
  }

  // theta_s plus all incoming messages.
  void reparameterized_unary(std::size_t s, std::vector<double>& out) const {
    for (std::size_t k = 0; k < K_; ++k) out[k] = e_.unary(static_cast<int>(s), static_cast<int>(k));
    for (const auto& inc : adj_[s]) {
      const auto& m = incoming(inc.edge, s);
      for (std::size_t k = 0; k < K_; ++k) out[k] += m[k];
    }
  }

  void sweep(bool forward) {
    const auto n = static_cast<std::size_t>(e_.node_count());
    std::vector<double> hat(K_);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t s = forward ? step : n - 1 - step;
      reparameterized_unary(s, hat);
      const double gamma = 1.0 / static_cast<double>(chains_[s]);
      for (std::size_t edge : forward ? upper_[s] : lower_[s]) {
        const auto& back = incoming(edge, s);
        auto& out = forward ? to_high_[edge] : to_low_[edge];
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < K_; ++t) {
          double m = std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < K_; ++k) {
            const double pair = forward ? theta(edge, k, t) : theta(edge, t, k);
            m = std::min(m, gamma * hat[k] - back[k] + pair);
          }
          scratch_[t] = m;
          lowest = std::min(lowest, m);
        }
        for (std::size_t t = 0; t < K_; ++t) out[t] = scratch_[t] - lowest;
      }
    }
  }

  // Sum over the monotonic chains of each chain's minimum, with node terms
  // split evenly among the chains through the node.
  double lower_bound() const {
    const auto n = static_cast<std::size_t>(e_.node_count());
    double total = 0.0;
    std::vector<double> hat(K_);
    std::vector<double> best(K_);
    std::vector<double> next(K_);
    for (std::size_t s = 0; s < n; ++s) {
      if (adj_[s].empty()) {
        reparameterized_unary(s, hat);
        total += *std::min_element(hat.begin(), hat.end());
        continue;
      }
      // Chains start at s on every upper edge not paired with a lower edge.
      for (std::size_t c = lower_[s].size(); c < upper_[s].size(); ++c) {
        std::size_t node = s;
        reparameterized_unary(node, hat);
        for (std::size_t k = 0; k < K_; ++k) best[k] = hat[k] / static_cast<double>(chains_[node]);
        std::size_t slot = c;
        while (slot < upper_[node].size()) {
          const std::size_t edge = upper_[node][slot];
          const auto nxt = static_cast<std::size_t>(high(edge));
          reparameterized_unary(nxt, hat);
          const auto& m_high = to_high_[edge];
          const auto& m_low = to_low_[edge];
          for (std::size_t b = 0; b < K_; ++b) {
            double v = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < K_; ++a) v = std::min(v, best[a] + theta(edge, a, b) - m_low[a] - m_high[b]);
            next[b] = v + hat[b] / static_cast<double>(chains_[nxt]);
          }
          best.swap(next);
          const auto pos = std::find(lower_[nxt].begin(), lower_[nxt].end(), edge) - lower_[nxt].begin();
          node = nxt;
          slot = static_cast<std::size_t>(pos);
        }
        total += *std::min_element(best.begin(), best.end());
      }
    }
    return total;
  }

  Labeling round() const {
    const auto n = static_cast<std::size_t>(e_.node_count());
    Labeling y(n, 0);
    std::vector<double> cost(K_);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t k = 0; k < K_; ++k) cost[k] = e_.unary(static_cast<int>(s), static_cast<int>(k));
      for (const auto& inc : adj_[s]) {
        if (inc.other < static_cast<int>(s)) {
          const auto fixed = static_cast<std::size_t>(y[static_cast<std::size_t>(inc.other)]);
          for (std::size_t k = 0; k < K_; ++k) cost[k] += theta(inc.edge, fixed, k);
        } else {
          const auto& m = to_low_[inc.edge];
          for (std::size_t k = 0; k < K_; ++k) cost[k] += m[k];
        }
      }
      y[s] = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    }
    return y;
  }

  const EnergyFunction& e_;
  std::size_t K_;
  std::vector<std::vector<Incidence>> adj_;
  std::vector<std::vector<std::size_t>> lower_;
  std::vector<std::vector<std::size_t>> upper_;
  std::vector<std::size_t> chains_;
  std::vector<std::vector<double>> to_high_;
  std::vector<std::vector<double>> to_low_;
  mutable std::vector<double> scratch_;
};

} // namespace

InferenceResult predict_exact(const EnergyFunction& e, std::uint64_t cap) {
  if (!fits_cap(e.label_count(), e.node_count(), cap))
    throw SolverError("instance too large for exact inference: " + std::to_string(e.label_count()) + "^" +
                      std::to_string(e.node_count()) + " labelings exceed cap " + std::to_string(cap));
  return BranchAndBound(e).run();
}

InferenceResult trws(const EnergyFunction& e, const TrwsOptions& options) {
  if (e.node_count() == 0) return {Labeling{}, 0.0, 0.0, false, {}, 0, true};
  return Trws(e).run(options);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Auto: return "auto";
    case Strategy::Exact: return "exact";
    case Strategy::Trws: return "trws";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "auto") return Strategy::Auto;
  if (s == "exact") return Strategy::Exact;
  if (s == "trws") return Strategy::Trws;
  throw std::invalid_argument("unknown strategy '" + s + "' (expected auto, exact or trws)");
}

InferenceResult predict(const WeightVector& w, const GraphInstance& x, Strategy strategy,
                        const TrwsOptions& options) {
  const auto e = instantiate_potentials(w, x);
  switch (strategy) {
    case Strategy::Exact: return predict_exact(e);
    case Strategy::Trws: return trws(e, options);
    case Strategy::Auto: break;
  }
  if (fits_cap(e.label_count(), e.node_count(), kAutoExactCap)) return predict_exact(e, kAutoExactCap);
  return trws(e, options);
}

Labeling predict_unary(const WeightVector& w, const GraphInstance& x) {
  check_compatible(w, x);
  Labeling y(x.node_count(), 0);
  for (std::size_t u = 0; u < x.node_count(); ++u) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < w.label_count(); ++k) {
      const double s = dot(w.unary(k), x.node_features[u]);
      if (s > best) {
        best = s;
        y[u] = k;
      }
    }
  }
  return y;
}

} // namespace subsvm
