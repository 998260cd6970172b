#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace subsvm {

using Labeling = std::vector<int>;

// Multi-class pairwise energy
//   U(y) = sum_u U_u(y_u) + sum_(u,v) U_uv(y_u, y_v)
// Each edge stores a single K x K table in its (u, v) orientation, so
// U_vu(l, k) = U_uv(k, l) holds by construction.
class EnergyFunction {
public:
  struct Edge {
    int u;
    int v;
  };

  EnergyFunction() = default;
  EnergyFunction(int node_count, int label_count);

  int node_count() const { return node_count_; }
  int label_count() const { return label_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Returns the new edge's index. Its table starts at zero.
  std::size_t add_edge(int u, int v);

  double& unary(int node, int label) { return unary_[idx(node, label)]; }
  double unary(int node, int label) const { return unary_[idx(node, label)]; }
  std::span<const double> unary_table(int node) const {
    return {unary_.data() + idx(node, 0), static_cast<std::size_t>(label_count_)};
  }

  double& pairwise(std::size_t edge, int k, int l) {
    return pairwise_[edge][static_cast<std::size_t>(k * label_count_ + l)];
  }
  double pairwise(std::size_t edge, int k, int l) const {
    return pairwise_[edge][static_cast<std::size_t>(k * label_count_ + l)];
  }
  // Row-major K x K.
  std::span<const double> pairwise_table(std::size_t edge) const { return pairwise_[edge]; }

private:
  std::size_t idx(int node, int label) const {
    return static_cast<std::size_t>(node) * static_cast<std::size_t>(label_count_) +
           static_cast<std::size_t>(label);
  }

  int node_count_ = 0;
  int label_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> unary_;
  std::vector<std::vector<double>> pairwise_;
};

double evaluate_energy(const EnergyFunction& e, std::span<const int> labeling);

// Binary pairwise energy over variables x_i in {0,1}.
class BinaryEnergy {
public:
  struct Edge {
    int i;
    int j;
    // (0,0), (0,1), (1,0), (1,1)
    std::array<double, 4> table{};
  };

  BinaryEnergy() = default;
  explicit BinaryEnergy(int node_count);

  int node_count() const { return static_cast<int>(unary_.size()); }
  int add_node();

  void add_unary(int i, double cost0, double cost1);
  void add_pairwise(int i, int j, double e00, double e01, double e10, double e11);

  const std::array<double, 2>& unary(int i) const { return unary_[static_cast<std::size_t>(i)]; }
  const std::vector<std::array<double, 2>>& unaries() const { return unary_; }
  const std::vector<Edge>& edges() const { return edges_; }

  double evaluate(std::span<const std::uint8_t> x) const;

private:
  std::vector<std::array<double, 2>> unary_;
  std::vector<Edge> edges_;
};

struct SubmodularityCheck {
  bool submodular = true;
  std::optional<std::size_t> violating_edge;
};

// Exact test of U(0,1) + U(1,0) >= U(0,0) + U(1,1) on every edge.
SubmodularityCheck is_submodular(const BinaryEnergy& b);

inline constexpr std::uint64_t kDefaultBruteForceCap = std::uint64_t{1} << 24;

struct MulticlassMinimum {
  Labeling labeling;
  double energy = 0.0;
};

struct BinaryMinimum {
  std::vector<std::uint8_t> labeling;
  double energy = 0.0;
};

// Exhaustive minimization; ties go to the lexicographically smallest
// labeling. Throws SolverError if the search space exceeds `cap`.
MulticlassMinimum brute_force_minimize(const EnergyFunction& e,
                                       std::uint64_t cap = kDefaultBruteForceCap);
BinaryMinimum brute_force_minimize_binary(const BinaryEnergy& b,
                                          std::uint64_t cap = kDefaultBruteForceCap);

// Binary encoding without the sum-to-one constraint: binary node u*K + k is
// the indicator y_u^k with cost-at-1 U_u(k); every original edge (u,v) yields
// K*K binary edges (u,k)-(v,l) whose only non-zero entry is (1,1) = U_uv(k,l).
BinaryEnergy multiclass_to_binary(const EnergyFunction& e);

inline int binary_node(int node, int label, int label_count) {
  return node * label_count + label;
}

// Cubic term c * x_a * x_b * x_c over binary variables.
struct ThirdOrderTerm {
  std::array<int, 3> vars{};
  double coefficient = 0.0;
};

// Pairwise realization of a non-positive cubic term through one auxiliary
// variable w:
//   c*xyz = min_w |c| * (2w - wx - wy - wz)      (c <= 0)
struct ThirdOrderReduction {
  int auxiliary = -1;
  std::array<double, 2> auxiliary_unary{};      // (cost at w=0, cost at w=1)
  std::array<BinaryEnergy::Edge, 3> pairwise{};  // (w, x), (w, y), (w, z)
};

// Throws std::invalid_argument for c > 0 or repeated variables.
ThirdOrderReduction reduce_third_order(const ThirdOrderTerm& t, int auxiliary_id);

// Adds the auxiliary variable and the reduced terms to `b`; returns the
// auxiliary variable's id.
int add_third_order(BinaryEnergy& b, const ThirdOrderTerm& t);

} // namespace subsvm
