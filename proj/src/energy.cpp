#include "subsvm/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "subsvm/errors.hpp"

namespace subsvm {

EnergyFunction::EnergyFunction(int node_count, int label_count)
    : node_count_(node_count), label_count_(label_count) {
  if (node_count < 0 || label_count < 1)
    throw std::invalid_argument("EnergyFunction: need node_count >= 0 and label_count >= 1");
  unary_.assign(static_cast<std::size_t>(node_count) * static_cast<std::size_t>(label_count), 0.0);
}

std::size_t EnergyFunction::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= node_count_ || v >= node_count_ || u == v)
    throw std::invalid_argument("EnergyFunction::add_edge: bad endpoints " + std::to_string(u) +
                                "," + std::to_string(v));
  edges_.push_back({u, v});
  pairwise_.emplace_back(static_cast<std::size_t>(label_count_ * label_count_), 0.0);
  return edges_.size() - 1;
}

double evaluate_energy(const EnergyFunction& e, std::span<const int> y) {
  if (static_cast<int>(y.size()) != e.node_count())
    throw std::invalid_argument("evaluate_energy: labeling size mismatch");
  double total = 0.0;
  for (int u = 0; u < e.node_count(); ++u) {
    if (y[u] < 0 || y[u] >= e.label_count())
      throw std::invalid_argument("evaluate_energy: label out of range at node " + std::to_string(u));
    total += e.unary(u, y[u]);
  }
  for (std::size_t i = 0; i < e.edge_count(); ++i) {
    const auto& ed = e.edges()[i];
    total += e.pairwise(i, y[ed.u], y[ed.v]);
  }
  return total;
}

BinaryEnergy::BinaryEnergy(int node_count) {
  if (node_count < 0) throw std::invalid_argument("BinaryEnergy: negative node count");
  unary_.assign(static_cast<std::size_t>(node_count), {0.0, 0.0});
}

int BinaryEnergy::add_node() {
  unary_.push_back({0.0, 0.0});
  return node_count() - 1;
}

void BinaryEnergy::add_unary(int i, double cost0, double cost1) {
  if (i < 0 || i >= node_count()) throw std::invalid_argument("BinaryEnergy::add_unary: bad node");
  unary_[static_cast<std::size_t>(i)][0] += cost0;
  unary_[static_cast<std::size_t>(i)][1] += cost1;
}

void BinaryEnergy::add_pairwise(int i, int j, double e00, double e01, double e10, double e11) {
  if (i < 0 || j < 0 || i >= node_count() || j >= node_count() || i == j)
    throw std::invalid_argument("BinaryEnergy::add_pairwise: bad endpoints");
  edges_.push_back({i, j, {e00, e01, e10, e11}});
}

double BinaryEnergy::evaluate(std::span<const std::uint8_t> x) const {
  if (static_cast<int>(x.size()) != node_count())
    throw std::invalid_argument("BinaryEnergy::evaluate: labeling size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < unary_.size(); ++i) total += unary_[i][x[i] ? 1 : 0];
  for (const auto& ed : edges_) {
    const int a = x[static_cast<std::size_t>(ed.i)] ? 1 : 0;
    const int b = x[static_cast<std::size_t>(ed.j)] ? 1 : 0;
    total += ed.table[static_cast<std::size_t>(2 * a + b)];
  }
  return total;
}

SubmodularityCheck is_submodular(const BinaryEnergy& b) {
  const auto& edges = b.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& t = edges[i].table;
    if (!(t[1] + t[2] >= t[0] + t[3])) return {false, i};
  }
  return {true, std::nullopt};
}

namespace {

std::uint64_t search_space(int base, int positions, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (int i = 0; i < positions; ++i) {
    if (total > cap / static_cast<std::uint64_t>(base))
      throw SolverError("exhaustive search space exceeds cap of " + std::to_string(cap));
    total *= static_cast<std::uint64_t>(base);
  }
  if (total > cap) throw SolverError("exhaustive search space exceeds cap of " + std::to_string(cap));
  return total;
}

// Advances `digits` to the next sequence in lexicographic order; returns
// false after the last one.
template <typename Digit>
bool next_lexicographic(std::vector<Digit>& digits, int base) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (static_cast<int>(digits[i]) + 1 < base) {
      ++digits[i];
      return true;
    }
    digits[i] = 0;
  }
  return false;
}

} // namespace

MulticlassMinimum brute_force_minimize(const EnergyFunction& e, std::uint64_t cap) {
  search_space(e.label_count(), e.node_count(), cap);
  MulticlassMinimum best{Labeling(static_cast<std::size_t>(e.node_count()), 0), 0.0};
  best.energy = evaluate_energy(e, best.labeling);
  Labeling y = best.labeling;
  while (next_lexicographic(y, e.label_count())) {
    const double value = evaluate_energy(e, y);
    if (value < best.energy) {
      best.energy = value;
      best.labeling = y;
    }
  }
  return best;
}

BinaryMinimum brute_force_minimize_binary(const BinaryEnergy& b, std::uint64_t cap) {
  search_space(2, b.node_count(), cap);
  BinaryMinimum best{std::vector<std::uint8_t>(static_cast<std::size_t>(b.node_count()), 0), 0.0};
  best.energy = b.evaluate(best.labeling);
  std::vector<std::uint8_t> x = best.labeling;
  while (next_lexicographic(x, 2)) {
    const double value = b.evaluate(x);
    if (value < best.energy) {
      best.energy = value;
      best.labeling = x;
    }
  }
  return best;
}

BinaryEnergy multiclass_to_binary(const EnergyFunction& e) {
  const int K = e.label_count();
  BinaryEnergy b(e.node_count() * K);
  for (int u = 0; u < e.node_count(); ++u)
    for (int k = 0; k < K; ++k) b.add_unary(binary_node(u, k, K), 0.0, e.unary(u, k));
  for (std::size_t i = 0; i < e.edge_count(); ++i) {
    const auto& ed = e.edges()[i];
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l)
        b.add_pairwise(binary_node(ed.u, k, K), binary_node(ed.v, l, K), 0.0, 0.0, 0.0,
                       e.pairwise(i, k, l));
  }
  return b;
}

ThirdOrderReduction reduce_third_order(const ThirdOrderTerm& t, int auxiliary_id) {
  if (t.coefficient > 0.0)
    throw std::invalid_argument("reduce_third_order: only non-positive coefficients are supported");
  const auto& v = t.vars;
  if (v[0] == v[1] || v[0] == v[2] || v[1] == v[2])
    throw std::invalid_argument("reduce_third_order: variables must be distinct");
  if (auxiliary_id == v[0] || auxiliary_id == v[1] || auxiliary_id == v[2])
    throw std::invalid_argument("reduce_third_order: auxiliary id collides with a term variable");

  const double magnitude = std::fabs(t.coefficient);
  ThirdOrderReduction r;
  r.auxiliary = auxiliary_id;
  r.auxiliary_unary = {0.0, 2.0 * magnitude};
  for (std::size_t i = 0; i < 3; ++i)
    r.pairwise[i] = {auxiliary_id, v[i], {0.0, 0.0, 0.0, -magnitude}};
  return r;
}

int add_third_order(BinaryEnergy& b, const ThirdOrderTerm& t) {
  for (int var : t.vars)
    if (var < 0 || var >= b.node_count())
      throw std::invalid_argument("add_third_order: variable out of range");
  const auto r = reduce_third_order(t, b.node_count());
  const int w = b.add_node();
  b.add_unary(w, r.auxiliary_unary[0], r.auxiliary_unary[1]);
  for (const auto& p : r.pairwise) b.add_pairwise(p.i, p.j, p.table[0], p.table[1], p.table[2], p.table[3]);
  return w;
}

} // namespace subsvm
