#pragma once

#include <cstdint>
#include <vector>

#include "kgsc/linalg.hpp"

namespace kgsc {

struct AffineLayer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;
  bool relu = false;
};

struct MlpCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> activations;  // output of each layer
};

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;

  std::vector<ParamView> param_views();
};

/// Affine stack with optional per-layer ReLU; rows are samples.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<AffineLayer> layers);

  static Mlp init(const std::vector<int>& dims, const std::vector<bool>& relu,
                  std::uint64_t seed);

  Eigen::Index in_dim() const { return layers_.front().weight.cols(); }
  Eigen::Index out_dim() const { return layers_.back().weight.rows(); }
  const std::vector<AffineLayer>& layers() const { return layers_; }
  std::vector<AffineLayer>& layers() { return layers_; }

  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
  MlpGrads backward(const MlpCache& cache, const Matrix& output_grad) const;

  std::vector<ParamView> param_views();
  std::vector<ConstParamView> param_views() const;
  std::uint64_t checksum() const { return kgsc::checksum(param_views()); }

 private:
  std::vector<AffineLayer> layers_;
};

/// Scales each row to unit average symbol power: z' = z / rms(z).
/// Throws Error on a zero row. Idempotent and scale-invariant.
Matrix power_normalize(const Matrix& z);
Vector power_normalize(const Vector& z);

/// Gradient of power_normalize w.r.t. its raw input, given the raw input and
/// the gradient at the normalized output.
Matrix power_normalize_backward(const Matrix& z_raw, const Matrix& output_grad);

/// The four trainable maps of §II: S_α, H_β, H⁻¹_β̂, S⁻¹_α̂. The paper's
/// decoder subscripts are inconsistent between its equation and prose; here
/// β̂ always names the channel decoder and α̂ the semantic decoder.
struct CodecStack {
  Mlp semantic_encoder;  // feature_dim -> semantic_dim -> semantic_dim
  Mlp channel_encoder;   // semantic_dim -> channel_dim (power-normalized on use)
  Mlp channel_decoder;   // channel_dim -> semantic_dim, ReLU hidden
  Mlp semantic_decoder;  // semantic_dim -> semantic_dim, linear

  static CodecStack init(int feature_dim, int semantic_dim, int channel_dim,
                         std::uint64_t seed);

  int feature_dim() const { return static_cast<int>(semantic_encoder.in_dim()); }
  int semantic_dim() const { return static_cast<int>(semantic_encoder.out_dim()); }
  int channel_dim() const { return static_cast<int>(channel_encoder.out_dim()); }
};

inline constexpr int kDefaultFeatureDim = 2048;
inline constexpr int kDefaultSemanticDim = 2049;
inline constexpr int kDefaultChannelDim = 512;

Matrix semantic_encode(const CodecStack& codec, const Matrix& x);
Matrix channel_encode(const CodecStack& codec, const Matrix& s);  // unit-power rows
Matrix channel_decode(const CodecStack& codec, const Matrix& z_hat);
Matrix semantic_decode(const CodecStack& codec, const Matrix& intermediate);

/// channel_decode then semantic_decode: ẑ -> ŝ.
Matrix decode_received(const CodecStack& codec, const Matrix& z_hat);

}  // namespace kgsc
