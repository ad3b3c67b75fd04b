#include "kgsc/graph.hpp"

#include <algorithm>
#include <set>

#include "kgsc/errors.hpp"

namespace kgsc {

KnowledgeGraph::KnowledgeGraph(
    std::vector<std::string> labels,
    std::vector<std::pair<std::string, std::string>> edges,
    std::vector<TripleRecord> triples) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  labels_ = std::move(labels);
  for (int i = 0; i < node_count(); ++i) ids_.emplace(labels_[static_cast<std::size_t>(i)], i);

  std::set<std::pair<int, int>> edge_set;
  for (const auto& [a, b] : edges) {
    const int u = id_of(a);
    const int v = id_of(b);
    if (u == v) continue;
    edge_set.emplace(std::min(u, v), std::max(u, v));
  }
  edges_.assign(edge_set.begin(), edge_set.end());

  adj_.resize(labels_.size());
  for (const auto& [u, v] : edges_) {
    adj_[static_cast<std::size_t>(u)].push_back(v);
    adj_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());

  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
  triples_ = std::move(triples);
}

bool KnowledgeGraph::contains(std::string_view label) const {
  return ids_.find(label) != ids_.end();
}

int KnowledgeGraph::id_of(std::string_view label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) throw Error("unknown node label: " + std::string(label));
  return it->second;
}

bool KnowledgeGraph::has_edge(int u, int v) const {
  if (u == v) return false;
  const auto& nbrs = adj_[static_cast<std::size_t>(u)];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

bool GlobalGraph::is_category(int id) const {
  return std::binary_search(category_ids.begin(), category_ids.end(), id);
}

std::vector<std::string> GlobalGraph::category_labels() const {
  std::vector<std::string> out;
  out.reserve(category_ids.size());
  for (int id : category_ids) out.push_back(graph.label_of(id));
  return out;
}

void CountMatrix::add(int u, int v, long long amount) {
  rows_[static_cast<std::size_t>(u)][v] += amount;
}

long long CountMatrix::at(int u, int v) const {
  const auto& row = rows_[static_cast<std::size_t>(u)];
  auto it = row.find(v);
  return it == row.end() ? 0 : it->second;
}

long long CountMatrix::row_total(int u) const {
  long long total = 0;
  for (const auto& [v, c] : rows_[static_cast<std::size_t>(u)]) total += c;
  return total;
}

EdgeWeightMatrix::EdgeWeightMatrix(CountMatrix counts, int universe_size, Mode mode)
    : counts_(std::move(counts)), universe_(universe_size), mode_(mode) {
  if (universe_ <= 0) throw Error("edge weights need a non-empty node universe");
  denom_.resize(static_cast<std::size_t>(counts_.row_count()));
  for (int u = 0; u < counts_.row_count(); ++u) {
    const long long total = counts_.row_total(u);
    if (mode_ == Mode::literal_universe) {
      // +1 smoothing applies to every node in the universe.
      denom_[static_cast<std::size_t>(u)] = static_cast<double>(total + universe_);
    } else {
      const auto observed = static_cast<long long>(counts_.row(u).size());
      denom_[static_cast<std::size_t>(u)] = static_cast<double>(total + observed);
    }
  }
}

double EdgeWeightMatrix::weight(int u, int v) const {
  const long long c = counts_.at(u, v);
  if (mode_ == Mode::literal_universe) {
    return static_cast<double>(c + 1) / denom_[static_cast<std::size_t>(u)];
  }
  if (counts_.row(u).empty()) return 1.0 / static_cast<double>(universe_);
  if (c == 0) return 0.0;
  return static_cast<double>(c + 1) / denom_[static_cast<std::size_t>(u)];
}

long long EdgeWeightMatrix::count(int u, int v) const { return counts_.at(u, v); }

}  // namespace kgsc
