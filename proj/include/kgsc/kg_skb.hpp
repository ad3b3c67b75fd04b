#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgsc/graph.hpp"
#include "kgsc/linalg.hpp"

namespace kgsc {

/// Parses tab-separated head/relation/tail lines ('#' starts a comment line)
/// into a deduplicated undirected graph. Throws ParseError with the offending
/// line number on malformed input and Error on empty input.
KnowledgeGraph load_triples(std::istream& in);
KnowledgeGraph load_triples_file(const std::filesystem::path& path);

/// Induced subgraph on {y} ∪ N¹(y) ∪ N²(y).
CategorySubgraph two_hop_subgraph(const KnowledgeGraph& kg, std::string_view category);

/// Union of node sets and edge sets; category markers come from the inputs.
/// Node ordering in the result is label-sorted, so the union is independent
/// of input order.
GlobalGraph union_graphs(const std::vector<CategorySubgraph>& subgraphs,
                         GlobalGraph::Role role);

/// token -> fixed-dimension embedding, loaded from "token v1 .. vD" lines.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void insert(const std::string& token, Vector v);
  const Vector* find(const std::string& token) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
};

WordVectorTable load_word_vectors(std::istream& in, int dim);
WordVectorTable load_word_vectors_file(const std::filesystem::path& path, int dim);

/// Vocabulary coverage of a node-feature initialization.
struct FeatureCoverage {
  int total_nodes = 0;
  int fully_covered = 0;
  int partially_covered = 0;  // multiword labels with some tokens out of vocab
  std::vector<std::string> out_of_vocab;  // labels mapped to the zero vector
};

/// Layer-0 node features: the word vector of the label, the token mean for
/// multiword labels (split on '_' and ' '), the zero vector when fully out of
/// vocabulary.
std::pair<Matrix, FeatureCoverage> init_node_features(const GlobalGraph& g,
                                                      const WordVectorTable& wv);

/// "Arriving at node v" is ambiguous between every visited step and the walk
/// endpoint; every_step is the default reading.
enum class WalkCountMode { every_step, final_step };

/// W uniform walks of L steps from every node; C[u][v] counts arrivals at v
/// per the count mode. Walks from isolated nodes contribute nothing. Each
/// start node gets its own derived RNG stream, so counts do not depend on
/// traversal order.
CountMatrix random_walk_counts(const GlobalGraph& g, int walks_per_node,
                               int walk_length, std::uint64_t seed,
                               WalkCountMode mode = WalkCountMode::every_step);

EdgeWeightMatrix edge_weights(
    const CountMatrix& counts, int universe_size,
    EdgeWeightMatrix::Mode mode = EdgeWeightMatrix::Mode::literal_universe);

/// Keeps each node's top-k neighbors by s_uv (union over both endpoints, so
/// the pruned graph stays undirected). Ties break toward the ascending
/// neighbor label.
GlobalGraph prune(const GlobalGraph& g, const EdgeWeightMatrix& weights,
                  int keep_top_k);

/// One fully built side of the KG-SKB: graph, initial features, walk weights.
struct BuiltGraph {
  GlobalGraph graph;
  Matrix features;  // node id -> layer-0 feature row
  EdgeWeightMatrix weights;
  FeatureCoverage coverage;
};

struct KgBuildParams {
  int walks_per_node = 100;
  int walk_length = 2;
  int keep_top_k = 8;
  EdgeWeightMatrix::Mode weight_mode = EdgeWeightMatrix::Mode::literal_universe;
  WalkCountMode count_mode = WalkCountMode::every_step;
  std::uint64_t seed = 1;
};

/// §III-A end to end for one category list: two-hop subgraphs, union, walk
/// weights, pruning, feature initialization. Weights are recomputed on the
/// pruned graph so the stored statistics describe the graph that ships.
BuiltGraph build_kg_side(const KnowledgeGraph& kg,
                         const std::vector<std::string>& categories,
                         const WordVectorTable& wv, GlobalGraph::Role role,
                         const KgBuildParams& params);

/// Checkpointable KG-SKB artifact; the unseen side is optional until built.
struct KgArtifact {
  BuiltGraph seen;
  std::optional<BuiltGraph> unseen;
};

/// Versioned JSON schema, byte-deterministic for fixed content.
void save_kg_artifact(const KgArtifact& artifact, std::ostream& out);
void save_kg_artifact_file(const KgArtifact& artifact, const std::filesystem::path& path);
KgArtifact load_kg_artifact(std::istream& in);
KgArtifact load_kg_artifact_file(const std::filesystem::path& path);

}  // namespace kgsc
