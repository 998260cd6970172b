#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "subsvm/energy.hpp"
#include "subsvm/graphdata.hpp"

namespace subsvm {

// Linear model parameters, flattened as
//   [ unary block: K rows of d_n ][ pairwise block: K*K rows of d_e ]
// with pairwise row (k, l) at index k*K + l. The non-negativity index set P
// is the whole pairwise block.
class WeightVector {
public:
  WeightVector() = default;
  WeightVector(int label_count, int node_dim, int edge_dim);
  WeightVector(int label_count, int node_dim, int edge_dim, std::vector<double> flat);

  int label_count() const { return label_count_; }
  int node_dim() const { return node_dim_; }
  int edge_dim() const { return edge_dim_; }

  std::size_t size() const { return flat_.size(); }
  std::size_t pairwise_offset() const {
    return static_cast<std::size_t>(label_count_) * static_cast<std::size_t>(node_dim_);
  }
  bool in_nonnegative_set(std::size_t j) const { return j >= pairwise_offset(); }

  std::span<const double> flat() const { return flat_; }
  std::span<double> flat() { return flat_; }

  std::span<const double> unary(int k) const;
  std::span<const double> pairwise(int k, int l) const;

  // Smallest entry over the pairwise block (0 if the block is empty).
  double min_pairwise() const;

  bool operator==(const WeightVector&) const = default;

private:
  int label_count_ = 0;
  int node_dim_ = 0;
  int edge_dim_ = 0;
  std::vector<double> flat_;
};

inline std::size_t weight_dimension(int label_count, int node_dim, int edge_dim) {
  const auto K = static_cast<std::size_t>(label_count);
  return K * static_cast<std::size_t>(node_dim) + K * K * static_cast<std::size_t>(edge_dim);
}

// Per-node-per-class indicators y_u^k without the sum-to-one constraint.
class BinaryLabeling {
public:
  BinaryLabeling() = default;
  BinaryLabeling(int node_count, int label_count);
  BinaryLabeling(int node_count, int label_count, std::vector<std::uint8_t> bits);

  static BinaryLabeling one_hot(std::span<const int> labeling, int label_count);

  int node_count() const { return node_count_; }
  int label_count() const { return label_count_; }

  std::uint8_t at(int u, int k) const { return bits_[index(u, k)]; }
  void set(int u, int k, bool value) { bits_[index(u, k)] = value ? 1 : 0; }

  // Indexed like multiclass_to_binary's binary nodes (u*K + k).
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const BinaryLabeling&) const = default;

private:
  std::size_t index(int u, int k) const {
    return static_cast<std::size_t>(u) * static_cast<std::size_t>(label_count_) +
           static_cast<std::size_t>(k);
  }

  int node_count_ = 0;
  int label_count_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct LossConfig {
  double rho = 100.0;
};

// Psi(x, y_b): unary block (k) = sum_u y_u^k phi(u); pairwise block (k,l) =
// sum over stored edges (u,v) of y_u^k y_v^l phi(u,v).
std::vector<double> joint_feature_map(const GraphInstance& x, const BinaryLabeling& y);

// Same map for relaxed labelings: node_values[u*K + k] is y_u^k and
// edge_values[e*K*K + k*K + l] is the product used for y_u^k y_v^l on edge e.
std::vector<double> relaxed_feature_map(const GraphInstance& x, int label_count,
                                        std::span<const double> node_values,
                                        std::span<const double> edge_values);

double dot(std::span<const double> a, std::span<const double> b);

double score(const WeightVector& w, const GraphInstance& x, const BinaryLabeling& y);

// U_u(k) = -w^k . phi(u),  U_uv(k,l) = -w^{kl} . phi(u,v)
EnergyFunction instantiate_potentials(const WeightVector& w, const GraphInstance& x);

double hamming_loss(std::span<const int> gold, std::span<const int> predicted,
                    const LossConfig& cfg);
double binary_hamming_loss(const BinaryLabeling& gold, const BinaryLabeling& predicted,
                           const LossConfig& cfg);
// Soft variant with |y - y_hat| in place of the bit mismatch indicator.
double relaxed_binary_hamming_loss(const BinaryLabeling& gold, std::span<const double> predicted,
                                   const LossConfig& cfg);

struct LossAugmentedEnergy {
  BinaryEnergy energy;
  // energy(y_b) + constant == -(binary_hamming_loss(gold, y_b) + score(w, x, y_b))
  double constant = 0.0;
};

LossAugmentedEnergy loss_augment(const WeightVector& w, const GraphInstance& x,
                                 std::span<const int> gold, const LossConfig& cfg);

void check_compatible(const WeightVector& w, const GraphInstance& x);

struct Checkpoint {
  WeightVector weights;
  double C = 1.0;
  double rho = 100.0;
  double epsilon = 0.1;
  std::string oracle = "exact";
};

inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace subsvm
