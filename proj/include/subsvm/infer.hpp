#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subsvm/energy.hpp"
#include "subsvm/graphdata.hpp"
#include "subsvm/model.hpp"

namespace subsvm {

struct InferenceResult {
  Labeling labeling;
  double energy = 0.0;
  std::optional<double> lower_bound;  // TRW-S only
  bool exact = false;
  // TRW-S: lower bound after every iteration.
  std::vector<double> bound_history;
  int iterations = 0;
  bool converged = true;
};

// Depth-first branch and bound over the one-hot label space in node order,
// pruned with a per-node minimum bound. Lexicographically smallest minimizer.
// Throws SolverError when K^|V| exceeds `cap`.
InferenceResult predict_exact(const EnergyFunction& e, std::uint64_t cap = kDefaultBruteForceCap);

struct TrwsOptions {
  int max_iterations = 200;
  // Stop once the bound improves by less than this over an iteration, or the
  // gap between best energy and bound falls below it.
  double tolerance = 1e-9;
};

// Sequential tree-reweighted message passing with monotonic chains in
// node-id order. The labeling is rounded sequentially (each node conditions
// on its already-labeled predecessors); the best labeling seen is returned.
InferenceResult trws(const EnergyFunction& e, const TrwsOptions& options = {});

enum class Strategy { Auto, Exact, Trws };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

inline constexpr std::uint64_t kAutoExactCap = std::uint64_t{1} << 20;

InferenceResult predict(const WeightVector& w, const GraphInstance& x, Strategy strategy,
                        const TrwsOptions& options = {});

// Per-node argmax of the unary score only (pairwise terms ignored).
Labeling predict_unary(const WeightVector& w, const GraphInstance& x);

} // namespace subsvm
