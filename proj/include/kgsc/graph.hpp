#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgsc {

/// One commonsense statement. The relation label is kept for provenance and
/// explanation output only; aggregation treats edges as unlabeled.
struct TripleRecord {
  std::string head;
  std::string relation;
  std::string tail;

  friend bool operator==(const TripleRecord&, const TripleRecord&) = default;
  friend auto operator<=>(const TripleRecord&, const TripleRecord&) = default;
};

/// Undirected graph over labeled nodes. Node ids are indices into the
/// label-sorted node list, so every derived matrix is deterministic across
/// runs and platforms. Self-loops are never stored; the GCN aggregation rule
/// adds them implicitly.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Builds from raw material: labels are deduplicated and sorted, edges are
  /// stored once per unordered pair, self-loops dropped.
  KnowledgeGraph(std::vector<std::string> labels,
                 std::vector<std::pair<std::string, std::string>> edges,
                 std::vector<TripleRecord> triples);

  int node_count() const { return static_cast<int>(labels_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return labels_.empty(); }

  bool contains(std::string_view label) const;
  int id_of(std::string_view label) const;  // throws Error if unknown
  const std::string& label_of(int id) const { return labels_[static_cast<std::size_t>(id)]; }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<int>& neighbors(int id) const { return adj_[static_cast<std::size_t>(id)]; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }  // u < v, sorted
  const std::vector<TripleRecord>& triples() const { return triples_; }

  bool has_edge(int u, int v) const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.labels_ == b.labels_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::string> labels_;              // sorted, unique
  std::map<std::string, int, std::less<>> ids_;  // label -> id
  std::vector<std::vector<int>> adj_;            // sorted neighbor ids
  std::vector<std::pair<int, int>> edges_;       // u < v, lexicographically sorted
  std::vector<TripleRecord> triples_;            // directed provenance, deduplicated
};

/// The induced two-hop neighborhood of one category node.
struct CategorySubgraph {
  std::string category;
  KnowledgeGraph graph;
};

/// Union of category subgraphs plus the category markers; the unit the GCN
/// and the random-walk weighting operate on.
struct GlobalGraph {
  enum class Role { seen, unseen };

  KnowledgeGraph graph;
  std::vector<int> category_ids;  // sorted
  Role role = Role::seen;

  bool is_category(int id) const;
  std::vector<std::string> category_labels() const;
};

/// Random-walk visit counts, row per start node.
class CountMatrix {
 public:
  CountMatrix() = default;
  explicit CountMatrix(int n) : rows_(static_cast<std::size_t>(n)) {}

  int row_count() const { return static_cast<int>(rows_.size()); }
  void add(int u, int v, long long amount = 1);
  long long at(int u, int v) const;
  long long row_total(int u) const;
  const std::map<int, long long>& row(int u) const { return rows_[static_cast<std::size_t>(u)]; }

 private:
  std::vector<std::map<int, long long>> rows_;
};

/// Laplace-smoothed, row-normalized walk statistics s_uv. In the default
/// literal mode the smoothing denominator ranges over the full node universe,
/// so every pair has positive weight and each row sums to exactly 1; the
/// observed-only mode restricts the sum to pairs with nonzero counts.
class EdgeWeightMatrix {
 public:
  enum class Mode { literal_universe, observed_only };

  EdgeWeightMatrix() = default;
  EdgeWeightMatrix(CountMatrix counts, int universe_size,
                   Mode mode = Mode::literal_universe);

  double weight(int u, int v) const;
  long long count(int u, int v) const;
  int universe_size() const { return universe_; }
  Mode mode() const { return mode_; }
  const CountMatrix& counts() const { return counts_; }

 private:
  CountMatrix counts_;
  std::vector<double> denom_;
  int universe_ = 0;
  Mode mode_ = Mode::literal_universe;
};

}  // namespace kgsc
