// kgsc: build the knowledge-graph semantic knowledge base, train the
// two-stage codec+GCN pipeline, and evaluate generalized zero-shot
// classification over a simulated channel.
//
// Exit codes: 0 success, 1 domain error (bad data, dimension mismatch,
// unknown category), 2 usage or I/O error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kgsc/config.hpp"
#include "kgsc/errors.hpp"
#include "kgsc/eval.hpp"
#include "kgsc/hash.hpp"
#include "kgsc/pipeline.hpp"
#include "kgsc/synthetic.hpp"
#include "kgsc/version.hpp"

namespace fs = std::filesystem;
using namespace kgsc;

namespace {

std::string format_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

RunManifest make_manifest(const std::string& command, std::uint64_t seed,
                          std::map<std::string, std::string> config) {
  RunManifest m;
  m.command = command;
  m.tool_version = std::string(kToolName) + " " + kToolVersion;
  m.seed = seed;
  m.config = std::move(config);
  m.timestamp = utc_timestamp_now();
  return m;
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path))
    throw IoError(std::string(what) + " not found: " + path.string());
}

// Precedence: CLI flag > config file > built-in default.
struct Resolver {
  const CLI::App* cmd;
  const KeyValueConfig* file_cfg;
  std::map<std::string, std::string>* echo;

  template <typename T>
  void resolve(const std::string& flag, const std::string& key, T& value) const {
    if (!cmd->count(flag) && file_cfg && file_cfg->has(key)) {
      std::istringstream ss(file_cfg->get_str(key));
      T parsed;
      if (!(ss >> parsed) || !ss.eof())
        throw Error("config key '" + key + "' has a malformed value");
      value = parsed;
    }
    if (echo) {
      std::ostringstream ss;
      ss << value;
      (*echo)[key] = ss.str();
    }
  }

  void resolve(const std::string& flag, const std::string& key, bool& value) const {
    if (!cmd->count(flag) && file_cfg && file_cfg->has(key))
      value = file_cfg->get_bool(key, value);
    if (echo) (*echo)[key] = value ? "true" : "false";
  }

  void resolve(const std::string& flag, const std::string& key,
               std::string& value) const {
    if (!cmd->count(flag) && file_cfg && file_cfg->has(key))
      value = file_cfg->get_str(key);
    if (echo) (*echo)[key] = value;
  }
};

struct GenSyntheticArgs {
  std::string out_dir = "world";
  SyntheticWorldParams params;
};

void cmd_gen_synthetic(const GenSyntheticArgs& a) {
  SyntheticWorld world = generate_synthetic_world(a.params);
  const fs::path dir(a.out_dir);
  world.write_files(dir);

  std::map<std::string, std::string> cfg;
  cfg["n_seen"] = std::to_string(a.params.n_seen);
  cfg["n_unseen"] = std::to_string(a.params.n_unseen);
  cfg["n_attributes"] = std::to_string(a.params.n_attributes);
  cfg["samples_per_class"] = std::to_string(a.params.samples_per_class);
  cfg["test_samples_per_class"] = std::to_string(a.params.test_samples_per_class);
  cfg["word_dim"] = std::to_string(a.params.word_dim);
  cfg["feature_dim"] = std::to_string(a.params.feature_dim);
  cfg["noise_scale"] = format_double(a.params.noise_scale);
  cfg["word_noise"] = format_double(a.params.word_noise);
  RunManifest manifest = make_manifest("gen-synthetic", a.params.seed, std::move(cfg));
  for (const char* f : {"triples.tsv", "vectors.txt", "labels.tsv", "seen.txt",
                        "unseen.txt", "train.feat", "test.feat"})
    manifest.outputs.push_back((dir / f).string());
  manifest.write(dir / "manifest.json");

  std::cout << "synthetic world: " << a.params.n_seen << " seen + "
            << a.params.n_unseen << " unseen categories, "
            << world.train.size() << " train / " << world.test.size()
            << " test samples -> " << dir.string() << "\n";
}

struct BuildKgArgs {
  std::string triples, vectors, seen, unseen, out = "kg.json";
  std::string config_file;
  int word_dim = 300;
  KgBuildParams params;
  std::string weight_mode = "literal_universe";
  std::string count_mode = "every_step";
};

void cmd_build_kg(const BuildKgArgs& a, const CLI::App* cmd) {
  KeyValueConfig file_cfg;
  if (!a.config_file.empty()) file_cfg = KeyValueConfig::from_file(a.config_file);

  BuildKgArgs r = a;
  std::map<std::string, std::string> echo;
  Resolver res{cmd, a.config_file.empty() ? nullptr : &file_cfg, &echo};
  res.resolve("--word-dim", "word_dim", r.word_dim);
  res.resolve("--walks", "walks_per_node", r.params.walks_per_node);
  res.resolve("--walk-length", "walk_length", r.params.walk_length);
  res.resolve("--keep-top-k", "keep_top_k", r.params.keep_top_k);
  res.resolve("--weight-mode", "weight_mode", r.weight_mode);
  res.resolve("--walk-count-mode", "walk_count_mode", r.count_mode);
  res.resolve("--seed", "seed", r.params.seed);

  if (r.weight_mode == "literal_universe")
    r.params.weight_mode = EdgeWeightMatrix::Mode::literal_universe;
  else if (r.weight_mode == "observed_only")
    r.params.weight_mode = EdgeWeightMatrix::Mode::observed_only;
  else
    throw Error("unknown weight mode: " + r.weight_mode);

  if (r.count_mode == "every_step")
    r.params.count_mode = WalkCountMode::every_step;
  else if (r.count_mode == "final_step")
    r.params.count_mode = WalkCountMode::final_step;
  else
    throw Error("unknown walk count mode: " + r.count_mode);

  require_file(r.triples, "triple file");
  require_file(r.vectors, "word-vector file");
  require_file(r.seen, "seen category list");
  const KnowledgeGraph kg = load_triples_file(r.triples);
  const WordVectorTable wv = load_word_vectors_file(r.vectors, r.word_dim);
  const auto seen = load_category_list(r.seen);
  std::vector<std::string> unseen;
  if (!r.unseen.empty()) {
    require_file(r.unseen, "unseen category list");
    unseen = load_category_list(r.unseen);
  }

  const KgArtifact artifact = build_kg_artifact(kg, wv, seen, unseen, r.params);
  save_kg_artifact_file(artifact, r.out);

  RunManifest manifest = make_manifest("build-kg", r.params.seed, std::move(echo));
  manifest.add_input(r.triples);
  manifest.add_input(r.vectors);
  manifest.add_input(r.seen);
  if (!r.unseen.empty()) manifest.add_input(r.unseen);
  manifest.outputs.push_back(r.out);
  manifest.write(fs::path(r.out).string() + ".manifest.json");

  auto report_side = [](const BuiltGraph& side, const char* name) {
    std::cout << name << " graph: " << side.graph.graph.node_count() << " nodes, "
              << side.graph.graph.edge_count() << " edges, "
              << side.graph.category_ids.size() << " categories; vocabulary: "
              << side.coverage.fully_covered << " full, "
              << side.coverage.partially_covered << " partial, "
              << side.coverage.out_of_vocab.size() << " out-of-vocab\n";
    for (const auto& label : side.coverage.out_of_vocab)
      std::cout << "  out-of-vocab node (zero feature): " << label << "\n";
  };
  report_side(artifact.seen, "seen");
  if (artifact.unseen) report_side(*artifact.unseen, "unseen");
}

struct TrainArgs {
  int stage = 1;
  std::string kg, checkpoint, features, labels, out = "checkpoint.kgsc";
  std::string config_file;
  TrainConfig cfg;
  std::string snr_policy = "uniform:-10:15";
  ModelDims dims;
  int epochs = -1;  // stage-dependent default: 15 for stage 1, 20 for stage 2
};

void cmd_train(const TrainArgs& a, const CLI::App* cmd) {
  KeyValueConfig file_cfg;
  if (!a.config_file.empty()) file_cfg = KeyValueConfig::from_file(a.config_file);

  TrainArgs r = a;
  std::map<std::string, std::string> echo;
  Resolver res{cmd, a.config_file.empty() ? nullptr : &file_cfg, &echo};
  res.resolve("--lr", "lr", r.cfg.lr);
  res.resolve("--lambda", "lambda", r.cfg.lambda);
  res.resolve("--epochs", "epochs", r.epochs);
  res.resolve("--batch-size", "batch_size", r.cfg.batch_size);
  res.resolve("--seed", "seed", r.cfg.seed);
  res.resolve("--gain", "channel_gain", r.cfg.channel_gain);
  res.resolve("--snr-policy", "train_snr_policy", r.snr_policy);
  res.resolve("--freeze-semantic-decoder", "freeze_semantic_decoder",
              r.cfg.freeze_semantic_decoder);
  res.resolve("--legacy-sim-sign", "legacy_sim_sign", r.cfg.legacy_sim_sign);
  res.resolve("--weighted-aggregation", "weighted_aggregation",
              r.cfg.weighted_aggregation);
  res.resolve("--semantic-dim", "semantic_dim", r.dims.semantic_dim);
  res.resolve("--channel-dim", "channel_dim", r.dims.channel_dim);
  res.resolve("--epsilon", "gcn_epsilon", r.dims.gcn_epsilon);
  r.cfg.snr_policy = SnrPolicy::parse(r.snr_policy);
  r.cfg.epochs = r.epochs >= 0 ? r.epochs : (r.stage == 1 ? 15 : 20);
  echo["epochs"] = std::to_string(r.cfg.epochs);
  echo["stage"] = std::to_string(r.stage);

  require_file(r.features, "feature file");
  require_file(r.labels, "label map");
  const FeatureDataset train = FeatureDataset::load_file(r.features);
  const LabelMap labels = LabelMap::load_file(r.labels);

  RunManifest manifest = make_manifest("train", r.cfg.seed, echo);
  manifest.add_input(r.features);
  manifest.add_input(r.labels);

  const fs::path out_path(r.out);
  if (r.stage == 1) {
    if (r.kg.empty()) throw Error("stage 1 needs --kg");
    require_file(r.kg, "kg artifact");
    manifest.add_input(r.kg);
    const KgArtifact artifact = load_kg_artifact_file(r.kg);
    StageOneRun run = run_stage_one(artifact, train, labels, r.dims, r.cfg, echo);
    run.checkpoint.save_file(out_path);
    write_loss_curve_csv(run.log.epoch_mean_loss,
                         out_path.string() + ".loss.csv");
    std::cout << "stage 1 done: " << run.log.epoch_mean_loss.size()
              << " epochs, final mean loss "
              << (run.log.epoch_mean_loss.empty() ? 0.0
                                                  : run.log.epoch_mean_loss.back())
              << ", train top-1 " << run.log.final_train_accuracy << "%\n";
  } else if (r.stage == 2) {
    if (r.checkpoint.empty()) throw Error("stage 2 needs --checkpoint");
    require_file(r.checkpoint, "stage-1 checkpoint");
    manifest.add_input(r.checkpoint);
    const Checkpoint stage1 = Checkpoint::load_file(r.checkpoint);
    StageTwoRun run = run_stage_two(stage1, train, labels, r.cfg, echo);
    run.checkpoint.save_file(out_path);
    write_loss_curve_csv(run.log.epoch_mean_loss,
                         out_path.string() + ".loss.csv");
    std::cout << "stage 2 done: " << run.log.epoch_mean_loss.size()
              << " epochs, final mean loss "
              << (run.log.epoch_mean_loss.empty() ? 0.0
                                                  : run.log.epoch_mean_loss.back())
              << ", symbol std " << run.log.symbol_std << "\n";
  } else {
    throw Error("--stage must be 1 or 2");
  }

  manifest.outputs.push_back(r.out);
  manifest.outputs.push_back(r.out + ".loss.csv");
  manifest.write(out_path.string() + ".manifest.json");
}

struct EvalArgs {
  std::string checkpoint, features, labels, out_dir = "eval";
  std::string config_file;
  EvalConfig cfg;
  std::string channel_mode = "analog";
  int qam_bits = 8;
  bool ablation = false;
  bool sample_mean = false;
};

void cmd_eval(EvalArgs a, const CLI::App* cmd, bool sweep_defaults) {
  KeyValueConfig file_cfg;
  if (!a.config_file.empty()) file_cfg = KeyValueConfig::from_file(a.config_file);

  std::map<std::string, std::string> echo;
  Resolver res{cmd, a.config_file.empty() ? nullptr : &file_cfg, &echo};
  res.resolve("--episodes", "episodes", a.cfg.episodes);
  res.resolve("--gain", "gain", a.cfg.gain);
  res.resolve("--practical-fraction", "practical_fraction", a.cfg.practical_fraction);
  res.resolve("--seed", "seed", a.cfg.seed);
  res.resolve("--threads", "threads", a.cfg.threads);
  res.resolve("--channel-mode", "channel_mode", a.channel_mode);
  res.resolve("--qam-bits", "qam_bits", a.qam_bits);
  a.cfg.mode = channel_mode_from_string(a.channel_mode);
  if (!cmd->count("--snr-db") && !sweep_defaults) a.cfg.snr_list = {15.0};
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < a.cfg.snr_list.size(); ++i)
      ss << (i ? "," : "") << a.cfg.snr_list[i];
    echo["snr_list"] = ss.str();
  }

  require_file(a.checkpoint, "checkpoint");
  require_file(a.features, "feature file");
  require_file(a.labels, "label map");
  const Checkpoint ck = Checkpoint::load_file(a.checkpoint);
  const FeatureDataset test = FeatureDataset::load_file(a.features);
  const LabelMap labels = LabelMap::load_file(a.labels);

  EvalContext ctx = EvalContext::build(ck, test, labels);
  ctx.qam.bits_per_component = a.qam_bits;
  ctx.per_class_mean = !a.sample_mean;

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);

  RunManifest manifest = make_manifest(sweep_defaults ? "sweep" : "eval",
                                       a.cfg.seed, echo);
  manifest.add_input(a.checkpoint);
  manifest.add_input(a.features);
  manifest.add_input(a.labels);

  auto write_report = [&](const EvalReport& report, const std::string& stem) {
    const fs::path report_path = dir / (stem + ".csv");
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + report_path.string());
    report.write_csv(out);
    manifest.outputs.push_back(report_path.string());

    const fs::path cat_path = dir / (stem + "_per_category.csv");
    std::ofstream cat_out(cat_path, std::ios::binary);
    if (!cat_out) throw IoError("cannot write report: " + cat_path.string());
    report.write_per_category_csv(cat_out);
    manifest.outputs.push_back(cat_path.string());
  };

  if (a.ablation) {
    const AblationReport reports = ablation_random_phi(ctx, a.cfg);
    write_report(reports.true_phi, "report");
    write_report(reports.random_phi, "report_random_phi");
    for (std::size_t i = 0; i < reports.true_phi.rows.size(); ++i) {
      const auto& t = reports.true_phi.rows[i];
      const auto& rnd = reports.random_phi.rows[i];
      std::cout << "snr " << t.snr_db << " dB: seen " << t.seen_mean << "%, unseen "
                << t.unseen_mean << "% (random-phi unseen " << rnd.unseen_mean
                << "%), xi " << t.harmonic << "\n";
    }
  } else {
    const EvalReport report = snr_sweep(ctx, a.cfg);
    write_report(report, "report");
    for (const auto& row : report.rows) {
      std::cout << "snr " << row.snr_db << " dB: seen " << row.seen_mean
                << "% +/- " << row.seen_std << ", unseen " << row.unseen_mean
                << "% +/- " << row.unseen_std << ", xi " << row.harmonic
                << ", practical " << row.practical_mean << "%\n";
    }
  }
  manifest.write(dir / "manifest.json");
}

struct ExportPcaArgs {
  std::string checkpoint, out = "pca.csv";
  int components = 2;
};

void cmd_export_pca(const ExportPcaArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  const Checkpoint ck = Checkpoint::load_file(a.checkpoint);
  const auto& phi = ck.embeddings;

  const PcaResult pca = pca_project(phi.embeddings(), a.components);
  std::vector<std::uint8_t> unseen(static_cast<std::size_t>(phi.size()));
  for (int i = 0; i < phi.size(); ++i)
    unseen[static_cast<std::size_t>(i)] = phi.is_unseen(i) ? 1 : 0;

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("cannot write PCA export: " + a.out);
  out.precision(12);
  write_pca_csv(pca, phi.labels(), unseen, out);

  std::cout << "pca: " << phi.size() << " categories";
  for (std::size_t i = 0; i < pca.explained_variance_ratio.size(); ++i)
    std::cout << (i ? ", " : "; explained variance ")
              << pca.explained_variance_ratio[i];
  std::cout << " -> " << a.out << "\n";

  RunManifest manifest = make_manifest("export-pca", 0, {});
  manifest.add_input(a.checkpoint);
  manifest.outputs.push_back(a.out);
  manifest.write(a.out + ".manifest.json");
}

struct ExportSimilarityArgs {
  std::string checkpoint, features, labels, out = "similarity.csv";
  double snr_db = 15.0;
  std::string channel_mode = "analog";
  int top_n = 5;
  std::uint64_t seed = 0;
  double gain = 1.0;
};

void cmd_export_similarity(const ExportSimilarityArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.features, "feature file");
  require_file(a.labels, "label map");
  const Checkpoint ck = Checkpoint::load_file(a.checkpoint);
  const FeatureDataset test = FeatureDataset::load_file(a.features);
  const LabelMap labels = LabelMap::load_file(a.labels);
  const EvalContext ctx = EvalContext::build(ck, test, labels);

  const auto rows = similarity_report(ctx, a.snr_db,
                                      channel_mode_from_string(a.channel_mode),
                                      a.gain, a.top_n, a.seed);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("cannot write similarity export: " + a.out);
  out.precision(12);
  write_similarity_csv(rows, out);
  std::cout << "similarity: " << rows.size() << " samples, top-" << a.top_n
            << " -> " << a.out << "\n";

  RunManifest manifest = make_manifest("export-similarity", a.seed, {});
  manifest.add_input(a.checkpoint);
  manifest.add_input(a.features);
  manifest.add_input(a.labels);
  manifest.outputs.push_back(a.out);
  manifest.write(a.out + ".manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph zero-shot semantic communication toolkit"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  GenSyntheticArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-synthetic", "generate a deterministic synthetic world");
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory");
  gen_cmd->add_option("--seed", gen.params.seed, "master seed");
  gen_cmd->add_option("--n-seen", gen.params.n_seen, "seen category count");
  gen_cmd->add_option("--n-unseen", gen.params.n_unseen, "unseen category count");
  gen_cmd->add_option("--n-attributes", gen.params.n_attributes,
                      "shared attribute count");
  gen_cmd->add_option("--min-attr-distance", gen.params.min_attr_set_distance,
                      "minimum attribute-set distance of unseen categories");
  gen_cmd->add_option("--samples-per-class", gen.params.samples_per_class,
                      "training samples per seen category");
  gen_cmd->add_option("--test-samples-per-class", gen.params.test_samples_per_class,
                      "test samples per category");
  gen_cmd->add_option("--feature-dim", gen.params.feature_dim,
                      "visual feature dimension");
  gen_cmd->add_option("--word-dim", gen.params.word_dim, "word vector dimension");
  gen_cmd->add_option("--noise-scale", gen.params.noise_scale,
                      "within-class feature noise");
  gen_cmd->add_option("--word-noise", gen.params.word_noise,
                      "category word-vector jitter");
  gen_cmd->callback([&] { cmd_gen_synthetic(gen); });

  BuildKgArgs bkg;
  auto* bkg_cmd = app.add_subcommand("build-kg", "build the KG-SKB artifact");
  bkg_cmd->add_option("--triples", bkg.triples, "triple TSV file")->required();
  bkg_cmd->add_option("--vectors", bkg.vectors, "word-vector text file")->required();
  bkg_cmd->add_option("--seen", bkg.seen, "seen category list")->required();
  bkg_cmd->add_option("--unseen", bkg.unseen, "unseen category list");
  bkg_cmd->add_option("--out", bkg.out, "output artifact path");
  bkg_cmd->add_option("--config", bkg.config_file, "key=value config file");
  bkg_cmd->add_option("--word-dim", bkg.word_dim, "word vector dimension");
  bkg_cmd->add_option("--walks", bkg.params.walks_per_node, "random walks per node");
  bkg_cmd->add_option("--walk-length", bkg.params.walk_length, "random walk length");
  bkg_cmd->add_option("--keep-top-k", bkg.params.keep_top_k,
                      "neighbors kept per node after pruning");
  bkg_cmd->add_option("--weight-mode", bkg.weight_mode,
                      "literal_universe | observed_only");
  bkg_cmd->add_option("--walk-count-mode", bkg.count_mode,
                      "every_step | final_step");
  bkg_cmd->add_option("--seed", bkg.params.seed, "master seed");
  bkg_cmd->callback([&] { cmd_build_kg(bkg, bkg_cmd); });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "run one training stage");
  train_cmd->add_option("--stage", train.stage, "1 or 2")->required();
  train_cmd->add_option("--kg", train.kg, "kg artifact (stage 1)");
  train_cmd->add_option("--checkpoint", train.checkpoint,
                        "stage-1 checkpoint (stage 2)");
  train_cmd->add_option("--features", train.features, "training features")->required();
  train_cmd->add_option("--labels", train.labels, "label map")->required();
  train_cmd->add_option("--out", train.out, "output checkpoint path");
  train_cmd->add_option("--config", train.config_file, "key=value config file");
  train_cmd->add_option("--lr", train.cfg.lr, "learning rate");
  train_cmd->add_option("--lambda", train.cfg.lambda, "alignment weight");
  train_cmd->add_option("--epochs", train.epochs,
                        "epoch count (default: 15 for stage 1, 20 for stage 2)");
  train_cmd->add_option("--batch-size", train.cfg.batch_size, "minibatch size");
  train_cmd->add_option("--seed", train.cfg.seed, "master seed");
  train_cmd->add_option("--gain", train.cfg.channel_gain, "channel gain h");
  train_cmd->add_option("--snr-policy", train.snr_policy,
                        "stage-2 SNR policy: fixed:<dB> | uniform:<lo>:<hi>");
  train_cmd->add_flag("--freeze-semantic-decoder", train.cfg.freeze_semantic_decoder,
                      "keep the semantic decoder at its initialization");
  train_cmd->add_flag("--legacy-sim-sign", train.cfg.legacy_sim_sign,
                      "positive-distance similarity (study mode)");
  train_cmd->add_flag("--weighted-aggregation", train.cfg.weighted_aggregation,
                      "scale GCN aggregation by walk weights (ablation)");
  train_cmd->add_option("--semantic-dim", train.dims.semantic_dim,
                        "semantic embedding dimension");
  train_cmd->add_option("--channel-dim", train.dims.channel_dim,
                        "channel symbol dimension");
  train_cmd->add_option("--epsilon", train.dims.gcn_epsilon,
                        "layer-norm epsilon");
  train_cmd->callback([&] { cmd_train(train, train_cmd); });

  EvalArgs eval_args;
  auto add_eval_options = [&](CLI::App* cmd, EvalArgs& a) {
    cmd->add_option("--checkpoint", a.checkpoint, "trained checkpoint")->required();
    cmd->add_option("--features", a.features, "test features")->required();
    cmd->add_option("--labels", a.labels, "label map")->required();
    cmd->add_option("--out-dir", a.out_dir, "report directory");
    cmd->add_option("--config", a.config_file, "key=value config file");
    cmd->add_option("--snr-db", a.cfg.snr_list, "SNR points in dB");
    cmd->add_option("--episodes", a.cfg.episodes, "episodes per SNR");
    cmd->add_option("--channel-mode", a.channel_mode, "analog | digital16qam");
    cmd->add_option("--gain", a.cfg.gain, "channel gain h");
    cmd->add_option("--practical-fraction", a.cfg.practical_fraction,
                    "seen fraction of the practical mix");
    cmd->add_option("--seed", a.cfg.seed, "master seed");
    cmd->add_option("--threads", a.cfg.threads, "episode worker threads");
    cmd->add_option("--qam-bits", a.qam_bits, "quantizer bits per component");
    cmd->add_flag("--ablation-random-phi", a.ablation,
                  "also evaluate with randomized unseen embeddings");
    cmd->add_flag("--sample-mean", a.sample_mean,
                  "sample-mean accuracy instead of the per-class mean");
  };
  auto* eval_cmd = app.add_subcommand("eval",
                                      "evaluate a checkpoint (default: 15 dB)");
  add_eval_options(eval_cmd, eval_args);
  eval_cmd->callback([&] { cmd_eval(eval_args, eval_cmd, false); });

  EvalArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "full SNR sweep {-10,-5,0,5,10,15} dB");
  add_eval_options(sweep_cmd, sweep_args);
  sweep_cmd->callback([&] { cmd_eval(sweep_args, sweep_cmd, true); });

  ExportPcaArgs pca;
  auto* pca_cmd = app.add_subcommand("export-pca",
                                     "PCA of the category embeddings");
  pca_cmd->add_option("--checkpoint", pca.checkpoint, "trained checkpoint")->required();
  pca_cmd->add_option("--out", pca.out, "output CSV");
  pca_cmd->add_option("--components", pca.components, "component count");
  pca_cmd->callback([&] { cmd_export_pca(pca); });

  ExportSimilarityArgs sim_args;
  auto* sim_cmd = app.add_subcommand("export-similarity",
                                     "per-sample top-n similarity scores");
  sim_cmd->add_option("--checkpoint", sim_args.checkpoint, "trained checkpoint")
      ->required();
  sim_cmd->add_option("--features", sim_args.features, "test features")->required();
  sim_cmd->add_option("--labels", sim_args.labels, "label map")->required();
  sim_cmd->add_option("--out", sim_args.out, "output CSV");
  sim_cmd->add_option("--snr-db", sim_args.snr_db, "channel SNR in dB");
  sim_cmd->add_option("--channel-mode", sim_args.channel_mode,
                      "analog | digital16qam");
  sim_cmd->add_option("--top-n", sim_args.top_n, "entries per sample");
  sim_cmd->add_option("--seed", sim_args.seed, "master seed");
  sim_cmd->add_option("--gain", sim_args.gain, "channel gain h");
  sim_cmd->callback([&] { cmd_export_similarity(sim_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
