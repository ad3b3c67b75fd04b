#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgsc/graph.hpp"
#include "kgsc/linalg.hpp"

namespace kgsc {

/// Degree with the implicit self-loop: |N¹(v)| + 1. The aggregation sum
/// ranges over N¹(v) ∪ {v}, so this is the m_vu normalizer's input.
int degree(const GlobalGraph& g, int node);
int degree(const GlobalGraph& g, std::string_view label);

/// ((k − μ)/√(σ² + ε))·γ + η with per-vector statistics and the biased
/// (divide-by-D) variance.
Vector layer_norm(const Vector& k, const Vector& gamma, const Vector& eta,
                  double epsilon);

/// Symmetric-normalized neighborhood aggregation: row v of the result is
/// Σ_{u ∈ N¹(v)∪{v}} x_u / √(deg(v)·deg(u)). Equals D^{-1/2}(A+I)D^{-1/2} X.
/// The aggregation rule itself contains only the degree normalizer; walk
/// weights feed pruning. The weighted variant (ablation flag) additionally
/// scales each term by the symmetrized walk statistic (s_vu + s_uv)/2, which
/// keeps the operator symmetric and the backward pass unchanged.
Matrix aggregate_neighbors(const GlobalGraph& g, const Matrix& x,
                           const EdgeWeightMatrix* edge_weights = nullptr);

struct GcnLayerParams {
  Matrix weight;  // out_dim x in_dim
  /// Learned projection on the residual path; present only when the layer
  /// changes dimension (the residual is the identity otherwise).
  std::optional<Matrix> residual_proj;
  Vector gamma;
  Vector eta;
  double epsilon = 1e-3;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

struct GcnLayerCache {
  Matrix input;
  Matrix aggregated;
  Matrix pre_norm;
  Matrix normalized;
  Vector inv_std;
  Matrix activated;
};

struct GcnLayerGrads {
  Matrix weight;
  std::optional<Matrix> residual_proj;
  Vector gamma;
  Vector eta;
};

struct GcnGrads {
  std::vector<GcnLayerGrads> layers;
  Matrix input;

  std::vector<ParamView> param_views();
};

/// Stack of aggregation + residual + layer-norm + ReLU blocks (two by
/// default) mapping layer-0 node features to category semantic embeddings.
class GcnModel {
 public:
  GcnModel() = default;
  explicit GcnModel(std::vector<GcnLayerParams> layers);

  /// Glorot-uniform weights, unit gamma, zero eta; deterministic per seed.
  static GcnModel init(const std::vector<int>& dims, double epsilon,
                       std::uint64_t seed);

  const std::vector<GcnLayerParams>& layers() const { return layers_; }
  std::vector<GcnLayerParams>& layers() { return layers_; }
  std::vector<int> dims() const;

  Matrix forward(const GlobalGraph& g, const Matrix& x0,
                 std::vector<GcnLayerCache>* cache = nullptr,
                 const EdgeWeightMatrix* edge_weights = nullptr) const;
  GcnGrads backward(const GlobalGraph& g,
                    const std::vector<GcnLayerCache>& cache,
                    const Matrix& output_grad,
                    const EdgeWeightMatrix* edge_weights = nullptr) const;

  std::vector<ParamView> param_views();
  std::vector<ConstParamView> param_views() const;
  std::uint64_t checksum() const { return kgsc::checksum(param_views()); }

 private:
  std::vector<GcnLayerParams> layers_;
};

/// φ(y) rows for a label-sorted category list, with seen/unseen provenance.
class CategoryEmbeddingTable {
 public:
  CategoryEmbeddingTable() = default;
  CategoryEmbeddingTable(std::vector<std::string> labels,
                         std::vector<bool> unseen, Matrix rows);

  int size() const { return static_cast<int>(labels_.size()); }
  Eigen::Index dim() const { return embeddings_.cols(); }
  int index_of(std::string_view label) const;  // throws Error if unknown
  const std::string& label(int index) const { return labels_[static_cast<std::size_t>(index)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool is_unseen(int index) const { return unseen_[static_cast<std::size_t>(index)]; }
  std::vector<int> seen_indices() const;
  std::vector<int> unseen_indices() const;

  const Matrix& embeddings() const { return embeddings_; }
  void set_row(int index, const Vector& value);

  /// Union of two disjoint tables; throws if any category appears in both.
  CategoryEmbeddingTable merged(const CategoryEmbeddingTable& other) const;

 private:
  std::vector<std::string> labels_;  // sorted
  std::vector<bool> unseen_;
  Matrix embeddings_;  // row per label
};

/// φ(y) = final-layer row of each category node. Rows are flagged unseen
/// when the graph's role is unseen.
CategoryEmbeddingTable category_embeddings(
    const GcnModel& m, const GlobalGraph& g, const Matrix& x0,
    const EdgeWeightMatrix* edge_weights = nullptr);

/// Frozen-model inference on the unseen graph. Pure: never touches model
/// parameters.
CategoryEmbeddingTable unseen_embeddings(
    const GcnModel& m, const GlobalGraph& g_u, const Matrix& x0_u,
    const EdgeWeightMatrix* edge_weights = nullptr);

}  // namespace kgsc
