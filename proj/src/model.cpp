#include "subsvm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "subsvm/errors.hpp"

namespace subsvm {

WeightVector::WeightVector(int label_count, int node_dim, int edge_dim)
    : WeightVector(label_count, node_dim, edge_dim,
                   std::vector<double>(weight_dimension(std::max(label_count, 0), std::max(node_dim, 0),
                                                        std::max(edge_dim, 0)),
                                       0.0)) {}

WeightVector::WeightVector(int label_count, int node_dim, int edge_dim, std::vector<double> flat)
    : label_count_(label_count), node_dim_(node_dim), edge_dim_(edge_dim), flat_(std::move(flat)) {
  if (label_count < 1 || node_dim < 0 || edge_dim < 0)
    throw std::invalid_argument("WeightVector: bad dimensions");
  if (flat_.size() != weight_dimension(label_count, node_dim, edge_dim))
    throw std::invalid_argument("WeightVector: flat length " + std::to_string(flat_.size()) +
                                " does not match K*d_n + K^2*d_e = " +
                                std::to_string(weight_dimension(label_count, node_dim, edge_dim)));
}

std::span<const double> WeightVector::unary(int k) const {
  return std::span<const double>(flat_).subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(node_dim_),
                                                static_cast<std::size_t>(node_dim_));
}

std::span<const double> WeightVector::pairwise(int k, int l) const {
  const auto row = static_cast<std::size_t>(k * label_count_ + l);
  return std::span<const double>(flat_).subspan(pairwise_offset() + row * static_cast<std::size_t>(edge_dim_),
                                                static_cast<std::size_t>(edge_dim_));
}

double WeightVector::min_pairwise() const {
  if (pairwise_offset() >= flat_.size()) return 0.0;
  return *std::min_element(flat_.begin() + static_cast<std::ptrdiff_t>(pairwise_offset()), flat_.end());
}

BinaryLabeling::BinaryLabeling(int node_count, int label_count)
    : BinaryLabeling(node_count, label_count,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(node_count, 0)) *
                                                   static_cast<std::size_t>(std::max(label_count, 0)),
                                               0)) {}

BinaryLabeling::BinaryLabeling(int node_count, int label_count, std::vector<std::uint8_t> bits)
    : node_count_(node_count), label_count_(label_count), bits_(std::move(bits)) {
  if (node_count < 0 || label_count < 1)
    throw std::invalid_argument("BinaryLabeling: bad shape");
  if (bits_.size() != static_cast<std::size_t>(node_count) * static_cast<std::size_t>(label_count))
    throw std::invalid_argument("BinaryLabeling: bit count does not match |V| x K");
  for (auto& b : bits_) b = b ? 1 : 0;
}

BinaryLabeling BinaryLabeling::one_hot(std::span<const int> labeling, int label_count) {
  BinaryLabeling y(static_cast<int>(labeling.size()), label_count);
  for (std::size_t u = 0; u < labeling.size(); ++u) {
    if (labeling[u] < 0 || labeling[u] >= label_count)
      throw std::invalid_argument("BinaryLabeling::one_hot: label out of range");
    y.set(static_cast<int>(u), labeling[u], true);
  }
  return y;
}

void check_compatible(const WeightVector& w, const GraphInstance& x) {
  const int K = w.label_count();
  if (x.node_dim != w.node_dim() || x.edge_dim != w.edge_dim())
    throw std::invalid_argument("feature dimension mismatch: model (d_n=" + std::to_string(w.node_dim()) +
                                ", d_e=" + std::to_string(w.edge_dim()) + "), instance (d_n=" +
                                std::to_string(x.node_dim) + ", d_e=" + std::to_string(x.edge_dim) + ")");
  if (x.label_count != K)
    throw std::invalid_argument("label count mismatch: model K=" + std::to_string(K) +
                                ", instance K=" + std::to_string(x.label_count));
  for (const auto& f : x.node_features)
    if (static_cast<int>(f.size()) != w.node_dim())
      throw std::invalid_argument("node feature dimension mismatch: model d_n=" +
                                  std::to_string(w.node_dim()) + ", instance " + std::to_string(f.size()));
  for (const auto& e : x.edges)
    if (static_cast<int>(e.features.size()) != w.edge_dim())
      throw std::invalid_argument("edge feature dimension mismatch: model d_e=" +
                                  std::to_string(w.edge_dim()) + ", instance " +
                                  std::to_string(e.features.size()));
}

namespace {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (a == 0.0) return;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> relaxed_feature_map(const GraphInstance& x, int label_count,
                                        std::span<const double> node_values,
                                        std::span<const double> edge_values) {
  const int K = label_count;
  const auto n = x.node_count();
  const auto KK = static_cast<std::size_t>(K * K);
  if (node_values.size() != n * static_cast<std::size_t>(K))
    throw std::invalid_argument("relaxed_feature_map: node value count mismatch");
  if (edge_values.size() != x.edges.size() * KK)
    throw std::invalid_argument("relaxed_feature_map: edge value count mismatch");

  const int d_n = x.node_dim;
  const int d_e = x.edge_dim;
  std::vector<double> psi(weight_dimension(K, d_n, d_e), 0.0);
  std::span<double> out(psi);
  const auto pair_offset = static_cast<std::size_t>(K) * static_cast<std::size_t>(d_n);

  for (std::size_t u = 0; u < n; ++u)
    for (int k = 0; k < K; ++k)
      axpy(node_values[u * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)], x.node_features[u],
           out.subspan(static_cast<std::size_t>(k * d_n), static_cast<std::size_t>(d_n)));
  for (std::size_t e = 0; e < x.edges.size(); ++e)
    for (std::size_t kl = 0; kl < KK; ++kl)
      axpy(edge_values[e * KK + kl], x.edges[e].features,
           out.subspan(pair_offset + kl * static_cast<std::size_t>(d_e), static_cast<std::size_t>(d_e)));
  return psi;
}

std::vector<double> joint_feature_map(const GraphInstance& x, const BinaryLabeling& y) {
  if (static_cast<std::size_t>(y.node_count()) != x.node_count())
    throw std::invalid_argument("joint_feature_map: labeling covers " + std::to_string(y.node_count()) +
                                " nodes, instance has " + std::to_string(x.node_count()));
  if (y.label_count() != x.label_count)
    throw std::invalid_argument("joint_feature_map: labeling has K=" + std::to_string(y.label_count()) +
                                ", instance has K=" + std::to_string(x.label_count));
  const int K = y.label_count();
  std::vector<double> node_values(y.bits().begin(), y.bits().end());
  std::vector<double> edge_values(x.edges.size() * static_cast<std::size_t>(K * K));
  std::size_t pos = 0;
  for (const auto& e : x.edges)
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) edge_values[pos++] = (y.at(e.u, k) && y.at(e.v, l)) ? 1.0 : 0.0;
  return relaxed_feature_map(x, K, node_values, edge_values);
}

double score(const WeightVector& w, const GraphInstance& x, const BinaryLabeling& y) {
  check_compatible(w, x);
  if (y.label_count() != w.label_count()) throw std::invalid_argument("score: label count mismatch");
  return dot(w.flat(), joint_feature_map(x, y));
}

EnergyFunction instantiate_potentials(const WeightVector& w, const GraphInstance& x) {
  check_compatible(w, x);
  const int K = w.label_count();
  EnergyFunction e(static_cast<int>(x.node_count()), K);
  for (std::size_t u = 0; u < x.node_count(); ++u)
    for (int k = 0; k < K; ++k) e.unary(static_cast<int>(u), k) = -dot(w.unary(k), x.node_features[u]);
  for (const auto& ed : x.edges) {
    const auto i = e.add_edge(ed.u, ed.v);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) e.pairwise(i, k, l) = -dot(w.pairwise(k, l), ed.features);
  }
  return e;
}

double hamming_loss(std::span<const int> gold, std::span<const int> predicted, const LossConfig& cfg) {
  if (gold.size() != predicted.size()) throw std::invalid_argument("hamming_loss: length mismatch");
  if (gold.empty()) return 0.0;
  std::size_t agree = 0;
  for (std::size_t u = 0; u < gold.size(); ++u) agree += gold[u] == predicted[u] ? 1 : 0;
  return cfg.rho * (1.0 - static_cast<double>(agree) / static_cast<double>(gold.size()));
}

double binary_hamming_loss(const BinaryLabeling& gold, const BinaryLabeling& predicted,
                           const LossConfig& cfg) {
  if (gold.node_count() != predicted.node_count() || gold.label_count() != predicted.label_count())
    throw std::invalid_argument("binary_hamming_loss: shape mismatch");
  if (gold.node_count() == 0) return 0.0;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < gold.bits().size(); ++i) differ += gold.bits()[i] != predicted.bits()[i] ? 1 : 0;
  return cfg.rho / (2.0 * gold.node_count()) * static_cast<double>(differ);
}

double relaxed_binary_hamming_loss(const BinaryLabeling& gold, std::span<const double> predicted,
                                   const LossConfig& cfg) {
  if (gold.bits().size() != predicted.size())
    throw std::invalid_argument("relaxed_binary_hamming_loss: shape mismatch");
  if (gold.node_count() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::fabs(gold.bits()[i] - predicted[i]);
  return cfg.rho / (2.0 * gold.node_count()) * total;
}

LossAugmentedEnergy loss_augment(const WeightVector& w, const GraphInstance& x,
                                 std::span<const int> gold, const LossConfig& cfg) {
  if (gold.size() != x.node_count()) throw std::invalid_argument("loss_augment: gold labeling size mismatch");
  const int K = w.label_count();
  LossAugmentedEnergy out{multiclass_to_binary(instantiate_potentials(w, x)), 0.0};
  if (x.node_count() == 0) return out;

  // A bit that differs from gold earns rho / (2|V|); in minimization form
  // the gain is charged to cost-at-1 so cost-at-0 stays zero.
  const double gain = cfg.rho / (2.0 * static_cast<double>(x.node_count()));
  for (std::size_t u = 0; u < gold.size(); ++u) {
    for (int k = 0; k < K; ++k) {
      const int b = binary_node(static_cast<int>(u), k, K);
      if (gold[u] == k) {
        out.energy.add_unary(b, 0.0, gain);
        out.constant -= gain;
      } else {
        out.energy.add_unary(b, 0.0, -gain);
      }
    }
  }
  return out;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto& w = c.weights;
  const auto flat = w.flat();
  const auto split = static_cast<std::ptrdiff_t>(w.pairwise_offset());
  nlohmann::json j = {
      {"format", "subsvm-model"},
      {"version", kCheckpointFormatVersion},
      {"K", w.label_count()},
      {"d_n", w.node_dim()},
      {"d_e", w.edge_dim()},
      {"unary", std::vector<double>(flat.begin(), flat.begin() + split)},
      {"pairwise", std::vector<double>(flat.begin() + split, flat.end())},
      {"C", c.C},
      {"rho", c.rho},
      {"epsilon", c.epsilon},
      {"oracle", c.oracle},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != "subsvm-model")
      throw DataError(path.string() + ": not a model checkpoint");
    if (j.at("version").get<int>() != kCheckpointFormatVersion)
      throw DataError(path.string() + ": unsupported checkpoint version");
    auto flat = j.at("unary").get<std::vector<double>>();
    const auto pairwise = j.at("pairwise").get<std::vector<double>>();
    flat.insert(flat.end(), pairwise.begin(), pairwise.end());
    Checkpoint c;
    c.weights = WeightVector(j.at("K").get<int>(), j.at("d_n").get<int>(), j.at("d_e").get<int>(), std::move(flat));
    c.C = j.at("C").get<double>();
    c.rho = j.at("rho").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.oracle = j.at("oracle").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

} // namespace subsvm
