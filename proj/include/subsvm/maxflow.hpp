#pragma once

#include <cstdint>
#include <vector>

#include "subsvm/energy.hpp"

namespace subsvm {

struct MaxFlowResult {
  double flow = 0.0;
  // Per non-terminal node: 1 if it can reach t in the final residual graph,
  // 0 otherwise (source-reachable and isolated nodes).
  std::vector<std::uint8_t> sink_side;
};

// s-t flow network over `node_count` non-terminal nodes with real
// capacities. Arcs are stored as forward/reverse residual pairs. A network
// is single-use: solving consumes its residual state.
class FlowNetwork {
public:
  static constexpr int kSource = -1;
  static constexpr int kSink = -2;

  explicit FlowNetwork(int node_count = 0);

  int node_count() const { return static_cast<int>(adjacency_.size()) - 2; }
  int add_node();

  // Capacity of s -> i and i -> t; repeated calls add parallel arcs.
  void add_terminal(int i, double source_cap, double sink_cap);
  // Arc i -> j with capacity `cap` and j -> i with capacity `rev_cap`.
  // Endpoints may be kSource / kSink.
  void add_edge(int i, int j, double cap, double rev_cap = 0.0);

  // Sum of original capacities of arcs leaving the source side, for the
  // assignment sink_side (0 = source side) of the non-terminals.
  double cut_capacity(const std::vector<std::uint8_t>& sink_side) const;

  // Dinic's blocking-flow algorithm; returns the sink-minimal minimum cut
  // (only nodes that can still reach the sink are on the sink side).
  MaxFlowResult solve();

private:
  struct Arc {
    int to;
    std::size_t rev;  // index of the paired arc in adjacency_[to]
    double residual;
    double capacity;
  };

  // Internal vertex ids: 0 = source, 1 = sink, 2.. = non-terminals.
  int vertex(int i) const;
  bool build_levels();
  double push(int v, double limit);

  std::vector<std::vector<Arc>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
};

inline MaxFlowResult max_flow(FlowNetwork& net) { return net.solve(); }

struct FlowConstruction {
  FlowNetwork network;
  double offset = 0.0;
};

// Builds a network whose cut for labeling x (x_i = 0 <=> source side) has
// capacity E(x) - offset. Throws NotSubmodularError on a violating edge.
FlowConstruction build_flow_network(const BinaryEnergy& b);

// Exact global minimum of a submodular binary energy via minimum cut.
BinaryMinimum minimize_submodular(const BinaryEnergy& b);

} // namespace subsvm
