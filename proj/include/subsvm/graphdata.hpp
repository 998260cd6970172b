#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "subsvm/energy.hpp"

namespace subsvm {

struct GraphEdge {
  int u = 0;
  int v = 0;
  std::vector<double> features;  // element-wise >= 0

  bool operator==(const GraphEdge&) const = default;
};

// One training/test example: a graph with per-node and per-edge feature
// vectors and the ground-truth class of every node. Node ids are the indices
// into node_features.
struct GraphInstance {
  std::vector<std::vector<double>> node_features;
  std::vector<GraphEdge> edges;
  std::vector<int> labels;
  int label_count = 0;
  int node_dim = 0;
  int edge_dim = 0;

  std::size_t node_count() const { return node_features.size(); }

  bool operator==(const GraphInstance&) const = default;
};

struct Dataset {
  int node_dim = 0;
  int edge_dim = 0;
  int label_count = 0;
  std::vector<GraphInstance> instances;

  bool operator==(const Dataset&) const = default;
};

// Throws DataError if the instance breaks a GraphInstance invariant
// (dangling or self edge, duplicate undirected edge, negative edge feature,
// dimension mismatch, label out of range). `index` is only used for the
// message.
void validate_instance(const GraphInstance& g, int node_dim, int edge_dim,
                       int label_count, std::size_t index);
void validate_dataset(const Dataset& d);

// Line-delimited JSON: a header line followed by one instance per line.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

inline constexpr int kDatasetFormatVersion = 1;

struct GeneratorConfig {
  int label_count = 4;
  int nodes_min = 25;
  int nodes_max = 35;
  // Extra (distractor) edges per node on top of the planted spanning tree.
  double edge_density = 0.5;
  // Standard deviation of the Gaussian noise on the one-hot node evidence.
  double noise = 0.8;
  int instances = 50;
  // Probability mass the planted table puts on the successor class.
  double affinity = 0.8;
};

// The synthetic generator produces node features of dimension K + 1 (noisy
// one-hot plus a constant bias) and edge features of dimension 2:
// [planted relation indicator, uniform proximity in [0,1)].
inline constexpr int kPlantedEdgeFeature = 0;

// Row-stochastic K x K table P(child = l | parent = k) used by the generator.
std::vector<std::vector<double>> planted_table(const GeneratorConfig& cfg);

Dataset generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed);

// Negative log-posterior energy of the generator's model for one instance
// (up to a constant). Its minimizer is the structured Bayes (MAP) decoder.
EnergyFunction planted_energy(const GeneratorConfig& cfg, const GraphInstance& g);
// Per-node Bayes decision using the node evidence only.
std::vector<int> planted_unary_decode(const GeneratorConfig& cfg,
                                      const GraphInstance& g);

struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  // confusion[gold][predicted]
  std::vector<std::vector<std::int64_t>> confusion;
};

Metrics evaluate(std::span<const std::vector<int>> predictions, const Dataset& gold);

// Seeded shuffle of instance indices into k folds of near-equal size.
std::vector<std::vector<std::size_t>> split_folds(std::size_t n, int folds,
                                                  std::uint64_t seed);

// Instances selected by index (in the given order).
Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

} // namespace subsvm
