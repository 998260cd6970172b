#include "subsvm/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "subsvm/errors.hpp"

namespace subsvm {

namespace {
constexpr int kSourceVertex = 0;
constexpr int kSinkVertex = 1;
} // namespace

FlowNetwork::FlowNetwork(int node_count) {
  if (node_count < 0) throw std::invalid_argument("FlowNetwork: negative node count");
  adjacency_.resize(static_cast<std::size_t>(node_count) + 2);
}

int FlowNetwork::add_node() {
  adjacency_.emplace_back();
  return node_count() - 1;
}

int FlowNetwork::vertex(int i) const {
  if (i == kSource) return kSourceVertex;
  if (i == kSink) return kSinkVertex;
  if (i < 0 || i >= node_count()) throw std::invalid_argument("FlowNetwork: node out of range");
  return i + 2;
}

void FlowNetwork::add_terminal(int i, double source_cap, double sink_cap) {
  if (source_cap != 0.0) add_edge(kSource, i, source_cap);
  if (sink_cap != 0.0) add_edge(i, kSink, sink_cap);
}

void FlowNetwork::add_edge(int i, int j, double cap, double rev_cap) {
  if (!(cap >= 0.0) || !(rev_cap >= 0.0) || !std::isfinite(cap) || !std::isfinite(rev_cap))
    throw std::invalid_argument("FlowNetwork: capacities must be finite and non-negative");
  const int a = vertex(i);
  const int b = vertex(j);
  if (a == b) throw std::invalid_argument("FlowNetwork: self loop");
  auto& from = adjacency_[static_cast<std::size_t>(a)];
  auto& to = adjacency_[static_cast<std::size_t>(b)];
  from.push_back({b, to.size(), cap, cap});
  to.push_back({a, from.size() - 1, rev_cap, rev_cap});
}

double FlowNetwork::cut_capacity(const std::vector<std::uint8_t>& sink_side) const {
  if (static_cast<int>(sink_side.size()) != node_count())
    throw std::invalid_argument("cut_capacity: assignment size mismatch");
  auto side = [&](std::size_t v) -> int {
    if (v == kSourceVertex) return 0;
    if (v == kSinkVertex) return 1;
    return sink_side[v - 2] ? 1 : 0;
  };
  double total = 0.0;
  for (std::size_t v = 0; v < adjacency_.size(); ++v) {
    if (side(v) != 0) continue;
    for (const auto& arc : adjacency_[v])
      if (side(static_cast<std::size_t>(arc.to)) == 1) total += arc.capacity;
  }
  return total;
}

bool FlowNetwork::build_levels() {
  level_.assign(adjacency_.size(), -1);
  std::queue<int> q;
  level_[kSourceVertex] = 0;
  q.push(kSourceVertex);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (const auto& arc : adjacency_[static_cast<std::size_t>(v)]) {
      if (arc.residual > 0.0 && level_[static_cast<std::size_t>(arc.to)] < 0) {
        level_[static_cast<std::size_t>(arc.to)] = level_[static_cast<std::size_t>(v)] + 1;
        q.push(arc.to);
      }
    }
  }
  return level_[kSinkVertex] >= 0;
}

double FlowNetwork::push(int v, double limit) {
  if (v == kSinkVertex) return limit;
  auto& arcs = adjacency_[static_cast<std::size_t>(v)];
  for (auto& i = cursor_[static_cast<std::size_t>(v)]; i < arcs.size(); ++i) {
    Arc& arc = arcs[i];
    if (arc.residual <= 0.0 ||
        level_[static_cast<std::size_t>(arc.to)] != level_[static_cast<std::size_t>(v)] + 1)
      continue;
    const double pushed = push(arc.to, std::min(limit, arc.residual));
    if (pushed > 0.0) {
      arc.residual -= pushed;
      adjacency_[static_cast<std::size_t>(arc.to)][arc.rev].residual += pushed;
      return pushed;
    }
  }
  return 0.0;
}

MaxFlowResult FlowNetwork::solve() {
  MaxFlowResult result;
  while (build_levels()) {
    cursor_.assign(adjacency_.size(), 0);
    while (true) {
      const double pushed = push(kSourceVertex, std::numeric_limits<double>::infinity());
      if (pushed <= 0.0) break;
      result.flow += pushed;
    }
  }
  // Label 1 only for vertices that can still reach the sink in the residual
  // graph. Source-reachable vertices get 0, and so do vertices reachable from
  // neither terminal.
  std::vector<std::uint8_t> to_sink(adjacency_.size(), 0);
  std::queue<int> q;
  to_sink[kSinkVertex] = 1;
  q.push(kSinkVertex);
  while (!q.empty()) {
    const int w = q.front();
    q.pop();
    for (const auto& arc : adjacency_[static_cast<std::size_t>(w)]) {
      const auto x = static_cast<std::size_t>(arc.to);
      if (!to_sink[x] && adjacency_[x][arc.rev].residual > 0.0) {
        to_sink[x] = 1;
        q.push(arc.to);
      }
    }
  }
  result.sink_side.resize(static_cast<std::size_t>(node_count()));
  for (int i = 0; i < node_count(); ++i)
    result.sink_side[static_cast<std::size_t>(i)] = to_sink[static_cast<std::size_t>(i) + 2];
  return result;
}

FlowConstruction build_flow_network(const BinaryEnergy& b) {
  const auto check = is_submodular(b);
  if (!check.submodular) {
    const auto e = *check.violating_edge;
    const auto& ed = b.edges()[e];
    throw NotSubmodularError(e, "binary energy is not submodular at edge " + std::to_string(e) + " (" +
                                    std::to_string(ed.i) + "," + std::to_string(ed.j) + ")");
  }

  FlowConstruction fc{FlowNetwork(b.node_count()), 0.0};
  // Linear coefficient of x_i after rewriting every term as
  //   const + a_i x_i + a_j x_j + lambda (1 - x_i) x_j.
  std::vector<double> slope(static_cast<std::size_t>(b.node_count()), 0.0);
  for (int i = 0; i < b.node_count(); ++i) {
    const auto& u = b.unary(i);
    fc.offset += u[0];
    slope[static_cast<std::size_t>(i)] += u[1] - u[0];
  }
  for (const auto& ed : b.edges()) {
    const auto& [A, B, C, D] = ed.table;
    fc.offset += A;
    slope[static_cast<std::size_t>(ed.i)] += C - A;
    slope[static_cast<std::size_t>(ed.j)] += D - C;
    const double lambda = B + C - A - D;
    if (lambda > 0.0) fc.network.add_edge(ed.i, ed.j, lambda);
  }
  for (int i = 0; i < b.node_count(); ++i) {
    const double a = slope[static_cast<std::size_t>(i)];
    if (a > 0.0) {
      fc.network.add_terminal(i, a, 0.0);
    } else if (a < 0.0) {
      fc.offset += a;
      fc.network.add_terminal(i, 0.0, -a);
    }
  }
  return fc;
}

BinaryMinimum minimize_submodular(const BinaryEnergy& b) {
  auto fc = build_flow_network(b);
  auto result = fc.network.solve();
  return {std::move(result.sink_side), result.flow + fc.offset};
}

} // namespace subsvm
