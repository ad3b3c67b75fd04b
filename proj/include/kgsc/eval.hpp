#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kgsc/channel.hpp"
#include "kgsc/dataset.hpp"
#include "kgsc/gcn.hpp"
#include "kgsc/training.hpp"

namespace kgsc {

/// Nearest-category match: argmin over ‖φ(y) − ŝ‖₂, ties to the ascending
/// label (tables are label-sorted, so the lowest index wins).
int classify(const Vector& s_hat, const CategoryEmbeddingTable& phi);

/// Per-class mean accuracy in percent (the generalized zero-shot convention:
/// every class weighs the same). sample_mean switches to plain sample
/// accuracy. Throws if any label falls outside [0, n_categories).
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                int n_categories, bool per_class_mean = true);

/// ξ = 2SU/(S+U).
double harmonic_mean(double seen_acc, double unseen_acc);

struct EvalConfig {
  std::vector<double> snr_list = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0};
  int episodes = 100;
  ChannelConfig::Mode mode = ChannelConfig::Mode::analog;
  double gain = 1.0;
  double practical_fraction = 0.7;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

/// Immutable per-checkpoint state shared by all episodes: clean semantics and
/// channel symbols are encoded once, only the channel and decoding re-run per
/// episode.
struct EvalContext {
  CodecStack codec;
  CategoryEmbeddingTable phi;
  Matrix s_clean;  // N x semantic_dim
  Matrix z;        // N x channel_dim, unit-power rows
  std::vector<int> true_class;          // φ index per test row
  std::vector<std::uint8_t> is_unseen;  // per test row
  QamConfig qam;                        // digital-mode quantizer, clip ±4σ_s
  /// Per-class mean is the generalized zero-shot convention; flip for plain
  /// sample accuracy. The practical-mix column is always sample accuracy.
  bool per_class_mean = true;

  static EvalContext build(const Checkpoint& ck, const FeatureDataset& test,
                           const LabelMap& labels);
};

struct EpisodeResult {
  double seen_acc = 0.0;
  double unseen_acc = 0.0;
  double practical_acc = 0.0;
  Vector per_category_acc;  // per φ index; NaN when a category has no samples
};

/// One full pass with fresh channel noise: encoded symbols -> channel ->
/// decode -> classify over all of 𝒴. The practical mix re-samples test rows
/// at the configured seen fraction.
EpisodeResult evaluate_episode(const EvalContext& ctx, double snr_db,
                               ChannelConfig::Mode mode, double gain,
                               double practical_fraction,
                               std::uint64_t episode_seed,
                               const CategoryEmbeddingTable* phi_override = nullptr);

/// Sample row indices so the expected seen:unseen ratio is
/// fraction:(1-fraction). Deterministic per seed.
std::vector<int> practical_mix_sample(const std::vector<int>& seen_rows,
                                      const std::vector<int>& unseen_rows,
                                      int draw_count, double fraction,
                                      std::uint64_t seed);

struct SnrRow {
  double snr_db = 0.0;
  double seen_mean = 0.0, seen_std = 0.0;
  double unseen_mean = 0.0, unseen_std = 0.0;
  double harmonic = 0.0, harmonic_std = 0.0;
  double practical_mean = 0.0, practical_std = 0.0;
};

struct EvalReport {
  std::vector<SnrRow> rows;
  /// Mean per-category accuracy over episodes, row per φ index, column per
  /// SNR.
  Matrix per_category;
  std::vector<std::string> category_labels;
  std::vector<std::uint8_t> category_unseen;
  std::map<std::string, std::string> config_echo;

  void write_csv(std::ostream& out) const;          // row per (SNR, metric)
  void write_per_category_csv(std::ostream& out) const;
};

/// cfg.episodes episodes at every SNR in cfg.snr_list. Episode seeds derive
/// from cfg.seed + episode index, so episodes are order- and
/// thread-count-independent.
EvalReport snr_sweep(const EvalContext& ctx, const EvalConfig& cfg,
                     const CategoryEmbeddingTable* phi_override = nullptr);

/// Unseen rows replaced by norm-matched random directions.
CategoryEmbeddingTable randomize_unseen_rows(const CategoryEmbeddingTable& phi,
                                             std::uint64_t seed);

struct AblationReport {
  EvalReport true_phi;
  EvalReport random_phi;
};

/// Side-by-side sweep with true φ and with randomized unseen φ; identical
/// channel noise in both arms.
AblationReport ablation_random_phi(const EvalContext& ctx, const EvalConfig& cfg,
                                   std::uint64_t randomization_seed = 7);

struct PcaResult {
  Matrix coordinates;                            // n x k
  std::vector<double> explained_variance_ratio;  // descending, length k
  Matrix components;                             // k x dim
  Vector mean;
};

/// Mean-centered projection onto the top-k principal directions. Sign
/// convention: each direction's largest-magnitude component is positive.
PcaResult pca_project(const Matrix& points, int k = 2);

void write_pca_csv(const PcaResult& pca, const std::vector<std::string>& labels,
                   const std::vector<std::uint8_t>& unseen, std::ostream& out);

struct SimilarityRow {
  int sample = 0;
  std::string true_label;
  std::string predicted_label;
  /// (label, sim score, softmax confidence over all of 𝒴), best first.
  std::vector<std::tuple<std::string, double, double>> top;
};

/// Per-sample sorted similarity scores after one channel pass.
std::vector<SimilarityRow> similarity_report(const EvalContext& ctx, double snr_db,
                                             ChannelConfig::Mode mode, double gain,
                                             int top_n, std::uint64_t seed);

void write_similarity_csv(const std::vector<SimilarityRow>& rows, std::ostream& out);

}  // namespace kgsc
