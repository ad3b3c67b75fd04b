#include "kgsc/gcn.hpp"

#include <algorithm>
#include <cmath>

#include "kgsc/errors.hpp"
#include "kgsc/rng.hpp"

namespace kgsc {

int degree(const GlobalGraph& g, int node) {
  if (node < 0 || node >= g.graph.node_count())
    throw Error("node id out of range: " + std::to_string(node));
  return static_cast<int>(g.graph.neighbors(node).size()) + 1;
}

int degree(const GlobalGraph& g, std::string_view label) {
  return degree(g, g.graph.id_of(label));
}

Vector layer_norm(const Vector& k, const Vector& gamma, const Vector& eta,
                  double epsilon) {
  if (k.size() != gamma.size() || k.size() != eta.size())
    throw Error("layer_norm parameter dimensions do not match input");
  const double mu = k.mean();
  const double var = (k.array() - mu).square().mean();
  const double inv_std = 1.0 / std::sqrt(var + epsilon);
  return (((k.array() - mu) * inv_std) * gamma.array() + eta.array()).matrix();
}

Matrix aggregate_neighbors(const GlobalGraph& g, const Matrix& x,
                           const EdgeWeightMatrix* edge_weights) {
  const int n = g.graph.node_count();
  if (x.rows() != n) throw Error("feature row count does not match graph");
  if (edge_weights && edge_weights->universe_size() != n)
    throw Error("edge weight universe does not match graph");

  Vector inv_sqrt_deg(n);
  for (int v = 0; v < n; ++v)
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(degree(g, v)));

  Matrix out(n, x.cols());
  for (int v = 0; v < n; ++v) {
    double self = inv_sqrt_deg[v] * inv_sqrt_deg[v];
    if (edge_weights) self *= edge_weights->weight(v, v);
    out.row(v) = x.row(v) * self;
    for (int u : g.graph.neighbors(v)) {
      double m = inv_sqrt_deg[v] * inv_sqrt_deg[u];
      if (edge_weights)
        m *= 0.5 * (edge_weights->weight(v, u) + edge_weights->weight(u, v));
      out.row(v) += x.row(u) * m;
    }
  }
  return out;
}

GcnModel::GcnModel(std::vector<GcnLayerParams> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].in_dim() != layers_[l - 1].out_dim())
      throw Error("GCN layer dimension chain is inconsistent");
  }
}

GcnModel GcnModel::init(const std::vector<int>& dims, double epsilon,
                        std::uint64_t seed) {
  if (dims.size() < 2) throw Error("GCN needs at least one layer");
  if (epsilon <= 0) throw Error("layer-norm epsilon must be positive");

  std::vector<GcnLayerParams> layers;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const int in = dims[l - 1];
    const int out = dims[l];
    GcnLayerParams p;
    Rng rng = subrng(seed, "gcn_layer", l);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    p.weight = Matrix::NullaryExpr(
        out, in, [&]() { return rng.uniform(-bound, bound); });
    if (in != out) {
      p.residual_proj = Matrix::NullaryExpr(
          out, in, [&]() { return rng.uniform(-bound, bound); });
    }
    p.gamma = Vector::Ones(out);
    p.eta = Vector::Zero(out);
    p.epsilon = epsilon;
    layers.push_back(std::move(p));
  }
  return GcnModel(std::move(layers));
}

std::vector<int> GcnModel::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(static_cast<int>(layers_.front().in_dim()));
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.out_dim()));
  return d;
}

Matrix GcnModel::forward(const GlobalGraph& g, const Matrix& x0,
                         std::vector<GcnLayerCache>* cache,
                         const EdgeWeightMatrix* edge_weights) const {
  if (layers_.empty()) throw Error("GCN model has no layers");
  if (x0.cols() != layers_.front().in_dim())
    throw Error("input feature dimension does not match GCN layer 0");
  if (cache) cache->assign(layers_.size(), GcnLayerCache{});

  Matrix x = x0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& p = layers_[l];
    Matrix aggregated = aggregate_neighbors(g, x, edge_weights);
    Matrix pre_norm = aggregated * p.weight.transpose();
    if (p.residual_proj)
      pre_norm.noalias() += x * p.residual_proj->transpose();
    else
      pre_norm += x;

    const Eigen::Index d = pre_norm.cols();
    Matrix normalized(pre_norm.rows(), d);
    Vector inv_std(pre_norm.rows());
    for (Eigen::Index i = 0; i < pre_norm.rows(); ++i) {
      const double mu = pre_norm.row(i).mean();
      const double var = (pre_norm.row(i).array() - mu).square().mean();
      inv_std[i] = 1.0 / std::sqrt(var + p.epsilon);
      normalized.row(i) = (pre_norm.row(i).array() - mu) * inv_std[i];
    }
    Matrix activated =
        ((normalized.array().rowwise() * p.gamma.transpose().array()).rowwise() +
         p.eta.transpose().array())
            .max(0.0)
            .matrix();

    if (cache) {
      auto& c = (*cache)[l];
      c.input = std::move(x);
      c.aggregated = std::move(aggregated);
      c.pre_norm = std::move(pre_norm);
      c.normalized = std::move(normalized);
      c.inv_std = std::move(inv_std);
      c.activated = activated;
    }
    x = std::move(activated);
  }
  return x;
}

GcnGrads GcnModel::backward(const GlobalGraph& g,
                            const std::vector<GcnLayerCache>& cache,
                            const Matrix& output_grad,
                            const EdgeWeightMatrix* edge_weights) const {
  if (cache.size() != layers_.size())
    throw Error("GCN backward needs the forward cache");

  GcnGrads grads;
  grads.layers.resize(layers_.size());

  Matrix g_out = output_grad;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const auto& p = layers_[static_cast<std::size_t>(l)];
    const auto& c = cache[static_cast<std::size_t>(l)];
    auto& lg = grads.layers[static_cast<std::size_t>(l)];

    // ReLU: zero where the activation clamped (including exactly at 0).
    Matrix g_ln = (c.activated.array() > 0.0).select(g_out, 0.0);

    lg.gamma = (g_ln.array() * c.normalized.array()).colwise().sum();
    lg.eta = g_ln.colwise().sum();

    // Layer norm with biased variance, per row.
    const double d = static_cast<double>(g_ln.cols());
    Matrix g_pre(g_ln.rows(), g_ln.cols());
    for (Eigen::Index i = 0; i < g_ln.rows(); ++i) {
      const auto dy = (g_ln.row(i).array() * p.gamma.transpose().array()).eval();
      const auto y = c.normalized.row(i).array();
      const double m1 = dy.sum() / d;
      const double m2 = (dy * y).sum() / d;
      g_pre.row(i) = ((dy - m1 - y * m2) * c.inv_std[i]).matrix();
    }

    lg.weight = g_pre.transpose() * c.aggregated;
    Matrix g_agg = g_pre * p.weight;
    Matrix g_input;
    if (p.residual_proj) {
      lg.residual_proj = g_pre.transpose() * c.input;
      g_input = g_pre * *p.residual_proj;
    } else {
      g_input = g_pre;
    }
    // The (possibly weighted) aggregation operator is symmetric, so its
    // transpose is itself.
    g_input += aggregate_neighbors(g, g_agg, edge_weights);
    g_out = std::move(g_input);
  }
  grads.input = std::move(g_out);
  return grads;
}

std::vector<ParamView> GcnGrads::param_views() {
  std::vector<ParamView> views;
  for (auto& l : layers) {
    views.push_back(view_of(l.weight));
    if (l.residual_proj) views.push_back(view_of(*l.residual_proj));
    views.push_back(view_of(l.gamma));
    views.push_back(view_of(l.eta));
  }
  return views;
}

std::vector<ParamView> GcnModel::param_views() {
  std::vector<ParamView> views;
  for (auto& l : layers_) {
    views.push_back(view_of(l.weight));
    if (l.residual_proj) views.push_back(view_of(*l.residual_proj));
    views.push_back(view_of(l.gamma));
    views.push_back(view_of(l.eta));
  }
  return views;
}

std::vector<ConstParamView> GcnModel::param_views() const {
  std::vector<ConstParamView> views;
  for (const auto& l : layers_) {
    views.push_back(view_of(l.weight));
    if (l.residual_proj) views.push_back(view_of(*l.residual_proj));
    views.push_back(view_of(l.gamma));
    views.push_back(view_of(l.eta));
  }
  return views;
}

CategoryEmbeddingTable::CategoryEmbeddingTable(std::vector<std::string> labels,
                                               std::vector<bool> unseen,
                                               Matrix rows) {
  if (labels.size() != unseen.size() ||
      static_cast<Eigen::Index>(labels.size()) != rows.rows())
    throw Error("embedding table inputs have mismatched sizes");

  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  labels_.reserve(labels.size());
  unseen_.reserve(labels.size());
  embeddings_.resize(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    labels_.push_back(std::move(labels[order[i]]));
    unseen_.push_back(unseen[order[i]]);
    embeddings_.row(static_cast<Eigen::Index>(i)) =
        rows.row(static_cast<Eigen::Index>(order[i]));
  }
  for (std::size_t i = 1; i < labels_.size(); ++i) {
    if (labels_[i] == labels_[i - 1])
      throw Error("duplicate category in embedding table: " + labels_[i]);
  }
}

int CategoryEmbeddingTable::index_of(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label)
    throw Error("unknown category: " + std::string(label));
  return static_cast<int>(it - labels_.begin());
}

std::vector<int> CategoryEmbeddingTable::seen_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (!unseen_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::vector<int> CategoryEmbeddingTable::unseen_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (unseen_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

void CategoryEmbeddingTable::set_row(int index, const Vector& value) {
  if (value.size() != embeddings_.cols())
    throw Error("embedding row has wrong dimension");
  embeddings_.row(index) = value;
}

CategoryEmbeddingTable CategoryEmbeddingTable::merged(
    const CategoryEmbeddingTable& other) const {
  if (dim() != other.dim())
    throw Error("cannot merge embedding tables of different dimensions");
  for (const auto& l : other.labels_) {
    if (std::binary_search(labels_.begin(), labels_.end(), l))
      throw Error("seen and unseen category sets overlap at: " + l);
  }
  std::vector<std::string> labels = labels_;
  labels.insert(labels.end(), other.labels_.begin(), other.labels_.end());
  std::vector<bool> unseen = unseen_;
  unseen.insert(unseen.end(), other.unseen_.begin(), other.unseen_.end());
  Matrix rows(embeddings_.rows() + other.embeddings_.rows(), dim());
  rows.topRows(embeddings_.rows()) = embeddings_;
  rows.bottomRows(other.embeddings_.rows()) = other.embeddings_;
  return CategoryEmbeddingTable(std::move(labels), std::move(unseen),
                                std::move(rows));
}

CategoryEmbeddingTable category_embeddings(const GcnModel& m, const GlobalGraph& g,
                                           const Matrix& x0,
                                           const EdgeWeightMatrix* edge_weights) {
  if (g.category_ids.empty()) throw Error("graph has no category nodes");
  const Matrix out = m.forward(g, x0, nullptr, edge_weights);

  const bool unseen_role = g.role == GlobalGraph::Role::unseen;
  std::vector<std::string> labels;
  std::vector<bool> unseen;
  Matrix rows(static_cast<Eigen::Index>(g.category_ids.size()), out.cols());
  for (std::size_t i = 0; i < g.category_ids.size(); ++i) {
    labels.push_back(g.graph.label_of(g.category_ids[i]));
    unseen.push_back(unseen_role);
    rows.row(static_cast<Eigen::Index>(i)) = out.row(g.category_ids[i]);
  }
  return CategoryEmbeddingTable(std::move(labels), std::move(unseen),
                                std::move(rows));
}

CategoryEmbeddingTable unseen_embeddings(const GcnModel& m, const GlobalGraph& g_u,
                                         const Matrix& x0_u,
                                         const EdgeWeightMatrix* edge_weights) {
  if (g_u.role != GlobalGraph::Role::unseen)
    throw Error("unseen_embeddings expects a graph with the unseen role");
  return category_embeddings(m, g_u, x0_u, edge_weights);
}

}  // namespace kgsc
