#include "subsvm/graphdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"
#include "subsvm/errors.hpp"

namespace subsvm {

using nlohmann::json;

void validate_instance(const GraphInstance& g, int node_dim, int edge_dim, int label_count,
                       std::size_t index) {
  const std::string where = "instance " + std::to_string(index) + ": ";
  const auto n = g.node_count();
  if (g.label_count != label_count)
    throw DataError(where + "label count " + std::to_string(g.label_count) + " != " + std::to_string(label_count));
  if (g.node_dim != node_dim || g.edge_dim != edge_dim)
    throw DataError(where + "declared feature dimensions disagree with the dataset");
  if (g.labels.size() != n)
    throw DataError(where + std::to_string(g.labels.size()) + " labels for " + std::to_string(n) + " nodes");
  for (std::size_t u = 0; u < n; ++u) {
    if (static_cast<int>(g.node_features[u].size()) != node_dim)
      throw DataError(where + "node " + std::to_string(u) + " has feature dimension " +
                      std::to_string(g.node_features[u].size()) + ", expected " + std::to_string(node_dim));
    for (double f : g.node_features[u])
      if (!std::isfinite(f)) throw DataError(where + "node " + std::to_string(u) + " has a non-finite feature");
    if (g.labels[u] < 0 || g.labels[u] >= label_count)
      throw DataError(where + "node " + std::to_string(u) + " label " + std::to_string(g.labels[u]) +
                      " out of range");
  }
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    const std::string edge = "edge " + std::to_string(i) + " (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n || static_cast<std::size_t>(e.v) >= n)
      throw DataError(where + edge + " references a missing node");
    if (e.u == e.v) throw DataError(where + edge + " is a self loop");
    if (!seen.insert(std::minmax(e.u, e.v)).second) throw DataError(where + edge + " duplicates an undirected edge");
    if (static_cast<int>(e.features.size()) != edge_dim)
      throw DataError(where + edge + " has feature dimension " + std::to_string(e.features.size()) +
                      ", expected " + std::to_string(edge_dim));
    for (double f : e.features) {
      if (!std::isfinite(f)) throw DataError(where + edge + " has a non-finite feature");
      if (f < 0.0) throw DataError(where + edge + " has negative feature " + std::to_string(f));
    }
  }
}

void validate_dataset(const Dataset& d) {
  if (d.label_count < 1 || d.node_dim < 0 || d.edge_dim < 0) throw DataError("dataset: bad dimensions");
  for (std::size_t i = 0; i < d.instances.size(); ++i)
    validate_instance(d.instances[i], d.node_dim, d.edge_dim, d.label_count, i);
}

namespace {

json instance_to_json(const GraphInstance& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back(json::array({e.u, e.v, e.features}));
  return json{{"nodes", g.node_features}, {"edges", std::move(edges)}, {"labels", g.labels}};
}

GraphInstance instance_from_json(const json& j, const Dataset& header) {
  GraphInstance g;
  g.label_count = header.label_count;
  g.node_dim = header.node_dim;
  g.edge_dim = header.edge_dim;
  g.node_features = j.at("nodes").get<std::vector<std::vector<double>>>();
  g.labels = j.at("labels").get<std::vector<int>>();
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) throw DataError("edge must be [u, v, [features]]");
    g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<std::vector<double>>()});
  }
  return g;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "subsvm-dataset") throw DataError("missing dataset header");
        if (j.at("version").get<int>() != kDatasetFormatVersion) throw DataError("unsupported format version");
        d.node_dim = j.at("d_n").get<int>();
        d.edge_dim = j.at("d_e").get<int>();
        d.label_count = j.at("K").get<int>();
        declared = j.at("count").get<std::size_t>();
        if (d.label_count < 0 || d.node_dim < 0 || d.edge_dim < 0) throw DataError("bad dimensions in header");
        have_header = true;
        continue;
      }
      d.instances.push_back(instance_from_json(j, d));
      validate_instance(d.instances.back(), d.node_dim, d.edge_dim, d.label_count, d.instances.size() - 1);
    } catch (const json::exception& e) {
      throw DataError(where + "parse error: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty file, no dataset header");
  if (declared != d.instances.size())
    throw DataError(path.string() + ": header declares " + std::to_string(declared) + " instances, found " +
                    std::to_string(d.instances.size()));
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const json header = {{"format", "subsvm-dataset"}, {"version", kDatasetFormatVersion},
                       {"d_n", d.node_dim},          {"d_e", d.edge_dim},
                       {"K", d.label_count},         {"count", d.instances.size()}};
  out << header.dump() << '\n';
  for (const auto& g : d.instances) out << instance_to_json(g).dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::vector<double>> planted_table(const GeneratorConfig& cfg) {
  const int K = cfg.label_count;
  if (K < 2) throw std::invalid_argument("planted_table: need K >= 2");
  const double rest = (1.0 - cfg.affinity) / static_cast<double>(K - 1);
  std::vector<std::vector<double>> t(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K), rest));
  for (int k = 0; k < K; ++k) t[static_cast<std::size_t>(k)][static_cast<std::size_t>((k + 1) % K)] = cfg.affinity;
  return t;
}

namespace {

void check_config(const GeneratorConfig& cfg) {
  if (cfg.label_count < 2) throw std::invalid_argument("generator: K must be >= 2");
  if (cfg.nodes_min < 1 || cfg.nodes_max < cfg.nodes_min)
    throw std::invalid_argument("generator: need 1 <= nodes_min <= nodes_max");
  if (cfg.instances < 1) throw std::invalid_argument("generator: instance count must be positive");
  if (!(cfg.edge_density >= 0.0)) throw std::invalid_argument("generator: edge density must be >= 0");
  if (!(cfg.noise >= 0.0)) throw std::invalid_argument("generator: noise must be >= 0");
  if (!(cfg.affinity > 0.0 && cfg.affinity < 1.0)) throw std::invalid_argument("generator: affinity must be in (0,1)");
}

int sample_row(const std::vector<double>& row, std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(row.begin(), row.end());
  return pick(rng);
}

} // namespace

Dataset generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  const int K = cfg.label_count;
  const auto table = planted_table(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(cfg.nodes_min, cfg.nodes_max);
  std::uniform_int_distribution<int> root_dist(0, K - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset d;
  d.label_count = K;
  d.node_dim = K + 1;
  d.edge_dim = 2;
  for (int inst = 0; inst < cfg.instances; ++inst) {
    const int n = size_dist(rng);
    GraphInstance g;
    g.label_count = K;
    g.node_dim = d.node_dim;
    g.edge_dim = d.edge_dim;
    g.labels.assign(static_cast<std::size_t>(n), 0);

    // Generation order i maps to node id ids[i], so stored edge orientation
    // (parent, child) is not tied to id order.
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);

    std::set<std::pair<int, int>> present;
    std::vector<int> order_labels(static_cast<std::size_t>(n));
    order_labels[0] = root_dist(rng);
    for (int i = 1; i < n; ++i) {
      const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
      order_labels[static_cast<std::size_t>(i)] = sample_row(table[static_cast<std::size_t>(order_labels[static_cast<std::size_t>(parent)])], rng);
      const int u = ids[static_cast<std::size_t>(parent)];
      const int v = ids[static_cast<std::size_t>(i)];
      g.edges.push_back({u, v, {1.0, unit(rng)}});
      present.insert(std::minmax(u, v));
    }
    for (int i = 0; i < n; ++i) g.labels[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = order_labels[static_cast<std::size_t>(i)];

    const auto max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
    const auto extra = static_cast<std::size_t>(std::lround(cfg.edge_density * n));
    std::uniform_int_distribution<int> node_dist(0, n - 1);
    for (std::size_t added = 0; added < extra && present.size() < max_edges;) {
      const int u = node_dist(rng);
      const int v = node_dist(rng);
      if (u == v || !present.insert(std::minmax(u, v)).second) continue;
      g.edges.push_back({u, v, {0.0, unit(rng)}});
      ++added;
    }

    g.node_features.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
      auto& f = g.node_features[static_cast<std::size_t>(u)];
      f.assign(static_cast<std::size_t>(K + 1), 0.0);
      for (int k = 0; k < K; ++k)
        f[static_cast<std::size_t>(k)] = (g.labels[static_cast<std::size_t>(u)] == k ? 1.0 : 0.0) + cfg.noise * gauss(rng);
      f[static_cast<std::size_t>(K)] = 1.0;
    }
    d.instances.push_back(std::move(g));
  }
  return d;
}

namespace {

// -log p(x_u | y_u = k) up to a constant shared by all k.
double evidence_cost(const GeneratorConfig& cfg, std::span<const double> f, int k) {
  double sq = 0.0;
  for (int j = 0; j < cfg.label_count; ++j) {
    const double diff = f[static_cast<std::size_t>(j)] - (j == k ? 1.0 : 0.0);
    sq += diff * diff;
  }
  if (cfg.noise == 0.0) return sq == 0.0 ? 0.0 : 1e12;
  return sq / (2.0 * cfg.noise * cfg.noise);
}

} // namespace

EnergyFunction planted_energy(const GeneratorConfig& cfg, const GraphInstance& g) {
  const int K = cfg.label_count;
  if (g.label_count != K || g.node_dim < K || g.edge_dim <= kPlantedEdgeFeature)
    throw std::invalid_argument("planted_energy: instance does not match the generator layout");
  const auto table = planted_table(cfg);
  EnergyFunction e(static_cast<int>(g.node_count()), K);
  for (std::size_t u = 0; u < g.node_count(); ++u)
    for (int k = 0; k < K; ++k) e.unary(static_cast<int>(u), k) = evidence_cost(cfg, g.node_features[u], k);
  for (const auto& ed : g.edges) {
    if (ed.features[kPlantedEdgeFeature] == 0.0) continue;
    const auto i = e.add_edge(ed.u, ed.v);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l)
        e.pairwise(i, k, l) = -std::log(table[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]);
  }
  return e;
}

std::vector<int> planted_unary_decode(const GeneratorConfig& cfg, const GraphInstance& g) {
  std::vector<int> out(g.node_count(), 0);
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    double best = evidence_cost(cfg, g.node_features[u], 0);
    for (int k = 1; k < cfg.label_count; ++k) {
      const double c = evidence_cost(cfg, g.node_features[u], k);
      if (c < best) {
        best = c;
        out[u] = k;
      }
    }
  }
  return out;
}

Metrics evaluate(std::span<const std::vector<int>> predictions, const Dataset& gold) {
  if (predictions.size() != gold.instances.size())
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(gold.instances.size()) + " instances");
  const auto K = static_cast<std::size_t>(gold.label_count);
  Metrics m;
  m.confusion.assign(K, std::vector<std::int64_t>(K, 0));
  std::int64_t total = 0;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& y = gold.instances[i].labels;
    if (p.size() != y.size())
      throw std::invalid_argument("evaluate: instance " + std::to_string(i) + " has " + std::to_string(p.size()) +
                                  " predicted labels for " + std::to_string(y.size()) + " nodes");
    for (std::size_t u = 0; u < y.size(); ++u) {
      if (p[u] < 0 || static_cast<std::size_t>(p[u]) >= K)
        throw std::invalid_argument("evaluate: predicted label out of range in instance " + std::to_string(i));
      ++m.confusion[static_cast<std::size_t>(y[u])][static_cast<std::size_t>(p[u])];
      ++total;
      correct += p[u] == y[u] ? 1 : 0;
    }
  }
  if (total == 0) return m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (std::size_t k = 0; k < K; ++k) {
    std::int64_t gold_k = 0;
    std::int64_t pred_k = 0;
    for (std::size_t l = 0; l < K; ++l) {
      gold_k += m.confusion[k][l];
      pred_k += m.confusion[l][k];
    }
    const auto tp = static_cast<double>(m.confusion[k][k]);
    m.macro_precision += pred_k > 0 ? tp / static_cast<double>(pred_k) : 0.0;
    m.macro_recall += gold_k > 0 ? tp / static_cast<double>(gold_k) : 0.0;
  }
  m.macro_precision /= static_cast<double>(K);
  m.macro_recall /= static_cast<double>(K);
  return m;
}

std::vector<std::vector<std::size_t>> split_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("split_folds: need at least 2 folds");
  if (n < static_cast<std::size_t>(folds)) throw std::invalid_argument("split_folds: fewer instances than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) out[i % static_cast<std::size_t>(folds)].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out;
  out.node_dim = d.node_dim;
  out.edge_dim = d.edge_dim;
  out.label_count = d.label_count;
  for (auto i : indices) {
    if (i >= d.instances.size()) throw std::out_of_range("subset: instance index out of range");
    out.instances.push_back(d.instances[i]);
  }
  return out;
}

} // namespace subsvm
