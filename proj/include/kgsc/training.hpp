#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgsc/channel.hpp"
#include "kgsc/codec.hpp"
#include "kgsc/dataset.hpp"
#include "kgsc/gcn.hpp"
#include "kgsc/kg_skb.hpp"
#include "kgsc/linalg.hpp"

namespace kgsc {

/// Semantic similarity as negative Euclidean distance, so that higher is
/// closer and argmax-similarity coincides with nearest-neighbor matching.
double sim(const Vector& a, const Vector& b);

struct StageOneLoss {
  double value = 0.0;
  Vector grad_input;     // d loss / d s
  Matrix grad_classes;   // d loss / d φ row, per class
};

/// Softmax cross-entropy over sim(s, φ(y')) with max-subtraction. The class
/// rows are the seen-category embeddings in table order. legacy_sign keeps
/// the positive-distance reading of the loss for side-by-side study.
StageOneLoss stage_one_loss(const Vector& s, int true_class, const Matrix& classes,
                            bool with_grads = true, bool legacy_sign = false);

struct StageTwoLoss {
  double value = 0.0;
  double recovery = 0.0;
  double alignment = 0.0;
  Vector grad_input;  // d loss / d ŝ
};

/// ‖ŝ − s_clean‖² + λ‖ŝ − φ_y‖².
StageTwoLoss stage_two_loss(const Vector& s_hat, const Vector& s_clean,
                            const Vector& phi_y, double lambda,
                            bool with_grads = true);

/// Adaptive-moment update with bias correction (decay 0.9/0.999, eps 1e-8).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void step(const std::vector<ParamView>& params,
            const std::vector<ParamView>& grads);
  int step_count() const { return step_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  int step_ = 0;
  std::vector<Vector> m_, v_;
};

struct SnrPolicy {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::uniform;
  double lo_db = -10.0;  // also the fixed value when kind == fixed
  double hi_db = 15.0;

  double sample_db(Rng& rng) const;
  std::string to_string() const;
  static SnrPolicy parse(const std::string& text);  // "fixed:5" | "uniform:-10:15"
};

struct TrainConfig {
  double lr = 1e-4;
  double lambda = 0.9;  // alignment weight
  int epochs = 30;
  int batch_size = 64;
  SnrPolicy snr_policy;
  double channel_gain = 1.0;
  bool freeze_semantic_decoder = false;
  /// Keeps the paper's literal Sim sign (positive distance inside the
  /// softmax / argmax). For study only; acceptance runs use the corrected
  /// sign.
  bool legacy_sim_sign = false;
  /// Ablation: scale aggregation terms by the symmetrized walk weights
  /// instead of using pure degree normalization.
  bool weighted_aggregation = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct StageOneResult {
  std::vector<double> epoch_mean_loss;
  double final_train_accuracy = 0.0;  // top-1 over 𝒴_s on the training set
};

/// Stage one: joint minibatch optimization of the semantic encoder and the
/// GCN under the contrastive category loss. φ is recomputed by a full GCN
/// forward every step.
StageOneResult train_stage_one(const FeatureDataset& train, const LabelMap& labels,
                               const BuiltGraph& seen, GcnModel& gcn,
                               Mlp& semantic_encoder, const TrainConfig& cfg);

struct StageTwoResult {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_mean_recovery;
  std::vector<double> epoch_mean_alignment;
  double symbol_std = 1.0;  // std of channel symbols on the training set
};

/// Stage two: trains channel encoder/decoder (and by default the semantic
/// decoder) through the analog channel, stage-one parameters frozen. Noise
/// is resampled per example per step under cfg.snr_policy.
StageTwoResult train_stage_two(const FeatureDataset& train, const LabelMap& labels,
                               const Mlp& frozen_semantic_encoder,
                               const CategoryEmbeddingTable& phi,
                               CodecStack& codec, ChannelConfig::Mode channel_mode,
                               const TrainConfig& cfg);

/// Everything needed to evaluate or resume: model, codec, φ over all of 𝒴,
/// dataset statistics, and an echo of the resolved config.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  int stage = 1;
  GcnModel gcn;
  CodecStack codec;
  CategoryEmbeddingTable embeddings;
  double symbol_std = 1.0;
  std::map<std::string, std::string> config_echo;

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static Checkpoint load(std::istream& in);
  static Checkpoint load_file(const std::filesystem::path& path);
};

}  // namespace kgsc
