#include "kgsc/codec.hpp"

#include <cmath>

#include "kgsc/errors.hpp"
#include "kgsc/rng.hpp"

namespace kgsc {

Mlp::Mlp(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error("MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.rows() != layers_[l].bias.size())
      throw Error("MLP bias dimension does not match weight rows");
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
      throw Error("MLP layer dimension chain is inconsistent");
  }
}

Mlp Mlp::init(const std::vector<int>& dims, const std::vector<bool>& relu,
              std::uint64_t seed) {
  if (dims.size() < 2 || relu.size() != dims.size() - 1)
    throw Error("MLP init needs dims and one relu flag per layer");
  std::vector<AffineLayer> layers;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const int in = dims[l - 1];
    const int out = dims[l];
    Rng rng = subrng(seed, "mlp_layer", l);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    AffineLayer layer;
    layer.weight = Matrix::NullaryExpr(
        out, in, [&]() { return rng.uniform(-bound, bound); });
    layer.bias = Vector::Zero(out);
    layer.relu = relu[l - 1];
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
  if (x.cols() != in_dim())
    throw Error("MLP input dimension mismatch: got " + std::to_string(x.cols()) +
                ", expected " + std::to_string(in_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->activations.clear();
  }
  Matrix cur = x;
  for (const auto& layer : layers_) {
    if (cache) cache->inputs.push_back(cur);
    Matrix out = cur * layer.weight.transpose();
    out.rowwise() += layer.bias.transpose();
    if (layer.relu) out = out.array().max(0.0).matrix();
    if (cache) cache->activations.push_back(out);
    cur = std::move(out);
  }
  return cur;
}

MlpGrads Mlp::backward(const MlpCache& cache, const Matrix& output_grad) const {
  if (cache.inputs.size() != layers_.size())
    throw Error("MLP backward needs the forward cache");

  MlpGrads grads;
  grads.weights.resize(layers_.size());
  grads.biases.resize(layers_.size());

  Matrix g = output_grad;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const auto& layer = layers_[static_cast<std::size_t>(l)];
    const auto& input = cache.inputs[static_cast<std::size_t>(l)];
    if (layer.relu) {
      const auto& act = cache.activations[static_cast<std::size_t>(l)];
      g = (act.array() > 0.0).select(g, 0.0);
    }
    grads.weights[static_cast<std::size_t>(l)] = g.transpose() * input;
    grads.biases[static_cast<std::size_t>(l)] = g.colwise().sum();
    if (l > 0) g = g * layer.weight;
  }
  grads.input = g * layers_.front().weight;
  return grads;
}

std::vector<ParamView> MlpGrads::param_views() {
  std::vector<ParamView> views;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    views.push_back(view_of(weights[l]));
    views.push_back(view_of(biases[l]));
  }
  return views;
}

std::vector<ParamView> Mlp::param_views() {
  std::vector<ParamView> views;
  for (auto& layer : layers_) {
    views.push_back(view_of(layer.weight));
    views.push_back(view_of(layer.bias));
  }
  return views;
}

std::vector<ConstParamView> Mlp::param_views() const {
  std::vector<ConstParamView> views;
  for (const auto& layer : layers_) {
    views.push_back(view_of(layer.weight));
    views.push_back(view_of(layer.bias));
  }
  return views;
}

namespace {

double row_rms(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
}

}  // namespace

Matrix power_normalize(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double rms = row_rms(z.row(i));
    if (rms == 0.0) throw Error("cannot power-normalize a zero symbol vector");
    out.row(i) = z.row(i) / rms;
  }
  return out;
}

Vector power_normalize(const Vector& z) {
  const double rms = std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
  if (rms == 0.0) throw Error("cannot power-normalize a zero symbol vector");
  return z / rms;
}

Matrix power_normalize_backward(const Matrix& z_raw, const Matrix& output_grad) {
  // z' = z/rms(z): dz = g/rms - z (z.g) / (n rms^3)
  Matrix out(z_raw.rows(), z_raw.cols());
  const double n = static_cast<double>(z_raw.cols());
  for (Eigen::Index i = 0; i < z_raw.rows(); ++i) {
    const double rms = row_rms(z_raw.row(i));
    if (rms == 0.0) throw Error("cannot power-normalize a zero symbol vector");
    const double dot = z_raw.row(i).dot(output_grad.row(i));
    out.row(i) = output_grad.row(i) / rms -
                 z_raw.row(i) * (dot / (n * rms * rms * rms));
  }
  return out;
}

CodecStack CodecStack::init(int feature_dim, int semantic_dim, int channel_dim,
                            std::uint64_t seed) {
  if (feature_dim < 1 || semantic_dim < 1 || channel_dim < 1)
    throw Error("codec dimensions must be positive");
  CodecStack stack;
  stack.semantic_encoder =
      Mlp::init({feature_dim, semantic_dim, semantic_dim}, {true, false},
                derive_seed(seed, "semantic_encoder"));
  stack.channel_encoder = Mlp::init({semantic_dim, channel_dim}, {false},
                                    derive_seed(seed, "channel_encoder"));
  stack.channel_decoder = Mlp::init({channel_dim, semantic_dim}, {true},
                                    derive_seed(seed, "channel_decoder"));
  stack.semantic_decoder = Mlp::init({semantic_dim, semantic_dim}, {false},
                                     derive_seed(seed, "semantic_decoder"));
  return stack;
}

Matrix semantic_encode(const CodecStack& codec, const Matrix& x) {
  return codec.semantic_encoder.forward(x);
}

Matrix channel_encode(const CodecStack& codec, const Matrix& s) {
  return power_normalize(codec.channel_encoder.forward(s));
}

Matrix channel_decode(const CodecStack& codec, const Matrix& z_hat) {
  return codec.channel_decoder.forward(z_hat);
}

Matrix semantic_decode(const CodecStack& codec, const Matrix& intermediate) {
  return codec.semantic_decoder.forward(intermediate);
}

Matrix decode_received(const CodecStack& codec, const Matrix& z_hat) {
  return semantic_decode(codec, channel_decode(codec, z_hat));
}

}  // namespace kgsc
