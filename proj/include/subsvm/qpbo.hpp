#pragma once

#include <cstdint>
#include <vector>

#include "subsvm/energy.hpp"

namespace subsvm {

inline constexpr std::int8_t kUnlabeled = -1;

// Per binary node: 0, 1 or kUnlabeled.
using PartialBinaryLabeling = std::vector<std::int8_t>;
// Per binary node: 0, 0.5 or 1.
using RelaxedBinaryLabeling = std::vector<double>;

// Roof-dual (QPBO) minimization of an arbitrary binary energy on the doubled
// graph: variable i gets a twin representing 1 - x_i, submodular terms are
// split between the two copies and non-submodular ones are flipped across
// them. A node is labeled when it and its twin land on opposite sides of the
// canonical minimum cut. Every labeled node agrees with some global minimizer.
PartialBinaryLabeling qpbo_solve(const BinaryEnergy& b);

// qpbo_solve with unlabeled nodes replaced by 0.5.
RelaxedBinaryLabeling qpbo_r(const BinaryEnergy& b);

// Value of x_i * x_j for every edge of `b` under a relaxed labeling. With
// `heuristic`, an edge with both ends at 0.5 counts 0.5 when its (1,1) entry
// is positive and 0 otherwise; all other cases use the literal product.
std::vector<double> edge_products(const RelaxedBinaryLabeling& y, const BinaryEnergy& b,
                                  bool heuristic);

inline std::vector<double> rounding_heuristic(const RelaxedBinaryLabeling& y,
                                              const BinaryEnergy& b) {
  return edge_products(y, b, true);
}

} // namespace subsvm
