#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgsc/eval.hpp"
#include "kgsc/kg_skb.hpp"
#include "kgsc/training.hpp"

namespace kgsc {

/// One category label per line, '#' comments allowed.
std::vector<std::string> load_category_list(const std::filesystem::path& path);

/// Builds the seen side (and the unseen side when the list is non-empty)
/// from one triple store and word-vector table.
KgArtifact build_kg_artifact(const KnowledgeGraph& kg, const WordVectorTable& wv,
                             const std::vector<std::string>& seen_categories,
                             const std::vector<std::string>& unseen_categories,
                             const KgBuildParams& params);

struct ModelDims {
  int semantic_dim = kDefaultSemanticDim;
  int channel_dim = kDefaultChannelDim;
  double gcn_epsilon = 1e-3;
};

struct StageOneRun {
  Checkpoint checkpoint;
  StageOneResult log;
};

/// Stage one end to end: init GCN ([word_dim, semantic, semantic]) and codec
/// from the config seed, train encoder+GCN, compute φ for every category in
/// the artifact, emit a stage-1 checkpoint.
StageOneRun run_stage_one(const KgArtifact& artifact, const FeatureDataset& train,
                          const LabelMap& labels, const ModelDims& dims,
                          const TrainConfig& cfg,
                          std::map<std::string, std::string> config_echo = {});

struct StageTwoRun {
  Checkpoint checkpoint;
  StageTwoResult log;
};

/// Stage two on top of a stage-1 checkpoint; stage-one parameters stay
/// frozen.
StageTwoRun run_stage_two(const Checkpoint& stage1, const FeatureDataset& train,
                          const LabelMap& labels, const TrainConfig& cfg,
                          std::map<std::string, std::string> config_echo = {});

void write_loss_curve_csv(const std::vector<double>& epoch_loss,
                          const std::filesystem::path& path);

}  // namespace kgsc
