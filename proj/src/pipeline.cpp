#include "kgsc/pipeline.hpp"

#include <fstream>

#include "kgsc/errors.hpp"

namespace kgsc {

std::vector<std::string> load_category_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open category list: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  if (out.empty()) throw Error("category list is empty: " + path.string());
  return out;
}

KgArtifact build_kg_artifact(const KnowledgeGraph& kg, const WordVectorTable& wv,
                             const std::vector<std::string>& seen_categories,
                             const std::vector<std::string>& unseen_categories,
                             const KgBuildParams& params) {
  KgArtifact artifact;
  artifact.seen =
      build_kg_side(kg, seen_categories, wv, GlobalGraph::Role::seen, params);
  if (!unseen_categories.empty()) {
    artifact.unseen = build_kg_side(kg, unseen_categories, wv,
                                    GlobalGraph::Role::unseen, params);
  }
  return artifact;
}

StageOneRun run_stage_one(const KgArtifact& artifact, const FeatureDataset& train,
                          const LabelMap& labels, const ModelDims& dims,
                          const TrainConfig& cfg,
                          std::map<std::string, std::string> config_echo) {
  const int word_dim = static_cast<int>(artifact.seen.features.cols());

  StageOneRun run;
  run.checkpoint.stage = 1;
  run.checkpoint.gcn =
      GcnModel::init({word_dim, dims.semantic_dim, dims.semantic_dim},
                     dims.gcn_epsilon, derive_seed(cfg.seed, "gcn_init"));
  run.checkpoint.codec =
      CodecStack::init(train.feature_dim(), dims.semantic_dim, dims.channel_dim,
                       derive_seed(cfg.seed, "codec_init"));

  run.log = train_stage_one(train, labels, artifact.seen, run.checkpoint.gcn,
                            run.checkpoint.codec.semantic_encoder, cfg);

  const EdgeWeightMatrix* seen_weights =
      cfg.weighted_aggregation ? &artifact.seen.weights : nullptr;
  CategoryEmbeddingTable table =
      category_embeddings(run.checkpoint.gcn, artifact.seen.graph,
                          artifact.seen.features, seen_weights);
  if (artifact.unseen) {
    const EdgeWeightMatrix* unseen_weights =
        cfg.weighted_aggregation ? &artifact.unseen->weights : nullptr;
    table = table.merged(unseen_embeddings(run.checkpoint.gcn,
                                           artifact.unseen->graph,
                                           artifact.unseen->features,
                                           unseen_weights));
  }
  run.checkpoint.embeddings = std::move(table);
  run.checkpoint.config_echo = std::move(config_echo);
  return run;
}

StageTwoRun run_stage_two(const Checkpoint& stage1, const FeatureDataset& train,
                          const LabelMap& labels, const TrainConfig& cfg,
                          std::map<std::string, std::string> config_echo) {
  if (stage1.stage != 1)
    throw Error("stage two needs a stage-1 checkpoint, got stage " +
                std::to_string(stage1.stage));

  StageTwoRun run;
  run.checkpoint = stage1;
  run.checkpoint.stage = 2;
  run.log = train_stage_two(train, labels, run.checkpoint.codec.semantic_encoder,
                            run.checkpoint.embeddings, run.checkpoint.codec,
                            ChannelConfig::Mode::analog, cfg);
  run.checkpoint.symbol_std = run.log.symbol_std;
  for (auto& [k, v] : config_echo)
    run.checkpoint.config_echo[k] = std::move(v);
  return run;
}

void write_loss_curve_csv(const std::vector<double>& epoch_loss,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write loss curve: " + path.string());
  out.precision(12);
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i)
    out << i << ',' << epoch_loss[i] << '\n';
}

}  // namespace kgsc
