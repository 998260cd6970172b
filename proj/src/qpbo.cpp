#include "subsvm/qpbo.hpp"

#include <stdexcept>

#include "subsvm/maxflow.hpp"

namespace subsvm {

PartialBinaryLabeling qpbo_solve(const BinaryEnergy& b) {
  const int n = b.node_count();
  // Variable i keeps its id; its complement lives at n + i.
  BinaryEnergy doubled(2 * n);
  auto twin = [n](int i) { return n + i; };

  for (int i = 0; i < n; ++i) {
    const auto& u = b.unary(i);
    doubled.add_unary(i, 0.5 * u[0], 0.5 * u[1]);
    doubled.add_unary(twin(i), 0.5 * u[1], 0.5 * u[0]);
  }
  for (const auto& ed : b.edges()) {
    const auto& [A, B, C, D] = ed.table;
    if (B + C >= A + D) {
      doubled.add_pairwise(ed.i, ed.j, 0.5 * A, 0.5 * B, 0.5 * C, 0.5 * D);
      doubled.add_pairwise(twin(ed.i), twin(ed.j), 0.5 * D, 0.5 * C, 0.5 * B, 0.5 * A);
    } else {
      // theta(x_i, 1 - x'_j) and theta(1 - x'_i, x_j)
      doubled.add_pairwise(ed.i, twin(ed.j), 0.5 * B, 0.5 * A, 0.5 * D, 0.5 * C);
      doubled.add_pairwise(twin(ed.i), ed.j, 0.5 * C, 0.5 * D, 0.5 * A, 0.5 * B);
    }
  }

  const auto cut = minimize_submodular(doubled);
  PartialBinaryLabeling out(static_cast<std::size_t>(n), kUnlabeled);
  for (int i = 0; i < n; ++i) {
    const auto x = cut.labeling[static_cast<std::size_t>(i)];
    const auto x_bar = cut.labeling[static_cast<std::size_t>(twin(i))];
    if (x != x_bar) out[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(x);
  }
  return out;
}

RelaxedBinaryLabeling qpbo_r(const BinaryEnergy& b) {
  const auto partial = qpbo_solve(b);
  RelaxedBinaryLabeling out(partial.size());
  for (std::size_t i = 0; i < partial.size(); ++i)
    out[i] = partial[i] == kUnlabeled ? 0.5 : static_cast<double>(partial[i]);
  return out;
}

std::vector<double> edge_products(const RelaxedBinaryLabeling& y, const BinaryEnergy& b,
                                  bool heuristic) {
  if (static_cast<int>(y.size()) != b.node_count())
    throw std::invalid_argument("edge_products: labeling size mismatch");
  std::vector<double> out;
  out.reserve(b.edges().size());
  for (const auto& ed : b.edges()) {
    const double yi = y[static_cast<std::size_t>(ed.i)];
    const double yj = y[static_cast<std::size_t>(ed.j)];
    if (heuristic && yi == 0.5 && yj == 0.5)
      out.push_back(ed.table[3] > 0.0 ? 0.5 : 0.0);
    else
      out.push_back(yi * yj);
  }
  return out;
}

} // namespace subsvm
