#include "kgsc/kg_skb.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <queue>
#include <set>
#include <sstream>

#include "kgsc/errors.hpp"
#include "kgsc/rng.hpp"

namespace kgsc {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

KnowledgeGraph load_triples(std::istream& in) {
  std::vector<TripleRecord> triples;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3)
      throw ParseError("expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    if (fields[0].empty() || fields[2].empty())
      throw ParseError("triple has empty head or tail", lineno);
    triples.push_back({fields[0], fields[1], fields[2]});
    labels.push_back(fields[0]);
    labels.push_back(fields[2]);
    edges.emplace_back(fields[0], fields[2]);
  }
  if (triples.empty()) throw Error("triple source contains no triples");
  return KnowledgeGraph(std::move(labels), std::move(edges), std::move(triples));
}

KnowledgeGraph load_triples_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open triple file: " + path.string());
  return load_triples(in);
}

CategorySubgraph two_hop_subgraph(const KnowledgeGraph& kg, std::string_view category) {
  const int start = kg.id_of(category);  // throws on unknown label

  std::vector<int> depth(static_cast<std::size_t>(kg.node_count()), -1);
  std::queue<int> frontier;
  depth[static_cast<std::size_t>(start)] = 0;
  frontier.push(start);
  std::vector<int> kept{start};
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    if (depth[static_cast<std::size_t>(u)] == 2) continue;
    for (int v : kg.neighbors(u)) {
      if (depth[static_cast<std::size_t>(v)] >= 0) continue;
      depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
      kept.push_back(v);
      frontier.push(v);
    }
  }

  std::vector<std::string> labels;
  labels.reserve(kept.size());
  std::set<int> kept_set(kept.begin(), kept.end());
  for (int id : kept) labels.push_back(kg.label_of(id));

  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [u, v] : kg.edges()) {
    if (kept_set.count(u) && kept_set.count(v))
      edges.emplace_back(kg.label_of(u), kg.label_of(v));
  }
  std::vector<TripleRecord> triples;
  for (const auto& t : kg.triples()) {
    if (kg.contains(t.head) && kg.contains(t.tail) &&
        kept_set.count(kg.id_of(t.head)) && kept_set.count(kg.id_of(t.tail)))
      triples.push_back(t);
  }
  return CategorySubgraph{std::string(category),
                          KnowledgeGraph(std::move(labels), std::move(edges),
                                         std::move(triples))};
}

GlobalGraph union_graphs(const std::vector<CategorySubgraph>& subgraphs,
                         GlobalGraph::Role role) {
  if (subgraphs.empty()) throw Error("cannot union an empty subgraph list");

  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<TripleRecord> triples;
  for (const auto& sub : subgraphs) {
    const auto& g = sub.graph;
    labels.insert(labels.end(), g.labels().begin(), g.labels().end());
    for (const auto& [u, v] : g.edges())
      edges.emplace_back(g.label_of(u), g.label_of(v));
    triples.insert(triples.end(), g.triples().begin(), g.triples().end());
  }

  GlobalGraph out;
  out.graph = KnowledgeGraph(std::move(labels), std::move(edges), std::move(triples));
  out.role = role;
  std::set<int> category_ids;
  for (const auto& sub : subgraphs) category_ids.insert(out.graph.id_of(sub.category));
  out.category_ids.assign(category_ids.begin(), category_ids.end());
  return out;
}

void WordVectorTable::insert(const std::string& token, Vector v) {
  vectors_[token] = std::move(v);
}

const Vector* WordVectorTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

WordVectorTable load_word_vectors(std::istream& in, int dim) {
  if (dim <= 0) throw Error("word vector dimension must be positive");
  WordVectorTable table(dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    Vector v(dim);
    int got = 0;
    double value;
    while (ss >> value) {
      if (got < dim) v[got] = value;
      ++got;
    }
    if (!ss.eof())
      throw ParseError("non-numeric component in vector for '" + token + "'", lineno);
    if (got != dim)
      throw ParseError("vector for '" + token + "' has " + std::to_string(got) +
                           " components, expected " + std::to_string(dim),
                       lineno);
    table.insert(token, std::move(v));
  }
  return table;
}

WordVectorTable load_word_vectors_file(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word vector file: " + path.string());
  return load_word_vectors(in, dim);
}

namespace {

std::vector<std::string> label_tokens(const std::string& label) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : label) {
    if (c == '_' || c == ' ') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

}  // namespace

std::pair<Matrix, FeatureCoverage> init_node_features(const GlobalGraph& g,
                                                      const WordVectorTable& wv) {
  const int n = g.graph.node_count();
  Matrix features = Matrix::Zero(n, wv.dim());
  FeatureCoverage coverage;
  coverage.total_nodes = n;
  for (int id = 0; id < n; ++id) {
    const auto tokens = label_tokens(g.graph.label_of(id));
    Vector sum = Vector::Zero(wv.dim());
    int hits = 0;
    for (const auto& tok : tokens) {
      if (const Vector* v = wv.find(tok)) {
        sum += *v;
        ++hits;
      }
    }
    if (hits == 0) {
      coverage.out_of_vocab.push_back(g.graph.label_of(id));
    } else {
      features.row(id) = sum / static_cast<double>(hits);
      if (hits == static_cast<int>(tokens.size()))
        ++coverage.fully_covered;
      else
        ++coverage.partially_covered;
    }
  }
  return {std::move(features), std::move(coverage)};
}

CountMatrix random_walk_counts(const GlobalGraph& g, int walks_per_node,
                               int walk_length, std::uint64_t seed,
                               WalkCountMode mode) {
  if (g.graph.empty()) throw Error("random walks need a non-empty graph");
  if (walks_per_node < 1 || walk_length < 1)
    throw Error("walk count and length must be at least 1");

  const int n = g.graph.node_count();
  CountMatrix counts(n);
  for (int start = 0; start < n; ++start) {
    Rng rng = subrng(seed, "random_walk", static_cast<std::uint64_t>(start));
    for (int w = 0; w < walks_per_node; ++w) {
      int cur = start;
      bool moved = false;
      for (int step = 0; step < walk_length; ++step) {
        const auto& nbrs = g.graph.neighbors(cur);
        if (nbrs.empty()) break;
        cur = nbrs[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(nbrs.size())))];
        moved = true;
        if (mode == WalkCountMode::every_step) counts.add(start, cur);
      }
      if (mode == WalkCountMode::final_step && moved) counts.add(start, cur);
    }
  }
  return counts;
}

EdgeWeightMatrix edge_weights(const CountMatrix& counts, int universe_size,
                              EdgeWeightMatrix::Mode mode) {
  return EdgeWeightMatrix(counts, universe_size, mode);
}

GlobalGraph prune(const GlobalGraph& g, const EdgeWeightMatrix& weights,
                  int keep_top_k) {
  if (keep_top_k < 1) throw Error("keep_top_k must be at least 1");

  const auto& kg = g.graph;
  std::set<std::pair<int, int>> kept;
  for (int u = 0; u < kg.node_count(); ++u) {
    std::vector<int> nbrs = kg.neighbors(u);
    std::stable_sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
      const double wa = weights.weight(u, a);
      const double wb = weights.weight(u, b);
      if (wa != wb) return wa > wb;
      return kg.label_of(a) < kg.label_of(b);
    });
    const auto limit = std::min<std::size_t>(nbrs.size(), static_cast<std::size_t>(keep_top_k));
    for (std::size_t i = 0; i < limit; ++i)
      kept.emplace(std::min(u, nbrs[i]), std::max(u, nbrs[i]));
  }

  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [u, v] : kept) edges.emplace_back(kg.label_of(u), kg.label_of(v));
  std::vector<TripleRecord> triples;
  for (const auto& t : kg.triples()) {
    const int u = kg.id_of(t.head);
    const int v = kg.id_of(t.tail);
    if (kept.count({std::min(u, v), std::max(u, v)})) triples.push_back(t);
  }

  GlobalGraph out;
  out.graph = KnowledgeGraph(kg.labels(), std::move(edges), std::move(triples));
  out.category_ids = g.category_ids;  // node set and ordering are unchanged
  out.role = g.role;
  return out;
}

BuiltGraph build_kg_side(const KnowledgeGraph& kg,
                         const std::vector<std::string>& categories,
                         const WordVectorTable& wv, GlobalGraph::Role role,
                         const KgBuildParams& params) {
  if (categories.empty()) throw Error("category list is empty");

  std::vector<CategorySubgraph> subs;
  subs.reserve(categories.size());
  for (const auto& y : categories) subs.push_back(two_hop_subgraph(kg, y));

  GlobalGraph unioned = union_graphs(subs, role);
  CountMatrix counts = random_walk_counts(unioned, params.walks_per_node,
                                          params.walk_length, params.seed,
                                          params.count_mode);
  EdgeWeightMatrix pre_weights =
      edge_weights(counts, unioned.graph.node_count(), params.weight_mode);
  GlobalGraph pruned = prune(unioned, pre_weights, params.keep_top_k);

  BuiltGraph built;
  CountMatrix pruned_counts = random_walk_counts(pruned, params.walks_per_node,
                                                 params.walk_length, params.seed,
                                                 params.count_mode);
  built.weights =
      edge_weights(pruned_counts, pruned.graph.node_count(), params.weight_mode);
  std::tie(built.features, built.coverage) = init_node_features(pruned, wv);
  built.graph = std::move(pruned);
  return built;
}

namespace {

using nlohmann::json;

json side_to_json(const BuiltGraph& side) {
  json j;
  j["role"] = side.graph.role == GlobalGraph::Role::seen ? "seen" : "unseen";
  j["nodes"] = side.graph.graph.labels();
  j["categories"] = side.graph.category_labels();
  json edges = json::array();
  for (const auto& [u, v] : side.graph.graph.edges()) edges.push_back({u, v});
  j["edges"] = edges;
  json triples = json::array();
  for (const auto& t : side.graph.graph.triples())
    triples.push_back({t.head, t.relation, t.tail});
  j["triples"] = triples;
  j["feature_dim"] = side.features.cols();
  json rows = json::array();
  for (Eigen::Index r = 0; r < side.features.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < side.features.cols(); ++c)
      row.push_back(side.features(r, c));
    rows.push_back(std::move(row));
  }
  j["features"] = rows;
  json counts = json::array();
  for (int u = 0; u < side.weights.counts().row_count(); ++u)
    for (const auto& [v, c] : side.weights.counts().row(u))
      counts.push_back({u, v, c});
  j["weights"] = {
      {"mode", side.weights.mode() == EdgeWeightMatrix::Mode::literal_universe
                   ? "literal_universe"
                   : "observed_only"},
      {"universe", side.weights.universe_size()},
      {"counts", counts}};
  j["coverage"] = {{"total", side.coverage.total_nodes},
                   {"full", side.coverage.fully_covered},
                   {"partial", side.coverage.partially_covered},
                   {"oov", side.coverage.out_of_vocab}};
  return j;
}

BuiltGraph side_from_json(const json& j) {
  BuiltGraph side;
  std::vector<std::string> labels = j.at("nodes").get<std::vector<std::string>>();
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges"))
    edges.emplace_back(labels.at(e.at(0).get<std::size_t>()),
                       labels.at(e.at(1).get<std::size_t>()));
  std::vector<TripleRecord> triples;
  for (const auto& t : j.at("triples"))
    triples.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>(),
                       t.at(2).get<std::string>()});

  side.graph.graph = KnowledgeGraph(labels, std::move(edges), std::move(triples));
  if (side.graph.graph.labels() != labels)
    throw Error("kg artifact nodes are not in canonical sorted order");
  side.graph.role = j.at("role").get<std::string>() == "seen"
                        ? GlobalGraph::Role::seen
                        : GlobalGraph::Role::unseen;
  for (const auto& c : j.at("categories"))
    side.graph.category_ids.push_back(side.graph.graph.id_of(c.get<std::string>()));
  std::sort(side.graph.category_ids.begin(), side.graph.category_ids.end());

  const auto dim = j.at("feature_dim").get<Eigen::Index>();
  const auto& rows = j.at("features");
  side.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  for (Eigen::Index r = 0; r < side.features.rows(); ++r) {
    const auto& row = rows.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != dim)
      throw Error("kg artifact feature row has wrong dimension");
    for (Eigen::Index c = 0; c < dim; ++c)
      side.features(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }

  const auto& w = j.at("weights");
  CountMatrix counts(side.graph.graph.node_count());
  for (const auto& entry : w.at("counts"))
    counts.add(entry.at(0).get<int>(), entry.at(1).get<int>(),
               entry.at(2).get<long long>());
  side.weights = EdgeWeightMatrix(
      std::move(counts), w.at("universe").get<int>(),
      w.at("mode").get<std::string>() == "literal_universe"
          ? EdgeWeightMatrix::Mode::literal_universe
          : EdgeWeightMatrix::Mode::observed_only);

  const auto& cov = j.at("coverage");
  side.coverage.total_nodes = cov.at("total").get<int>();
  side.coverage.fully_covered = cov.at("full").get<int>();
  side.coverage.partially_covered = cov.at("partial").get<int>();
  side.coverage.out_of_vocab = cov.at("oov").get<std::vector<std::string>>();
  return side;
}

}  // namespace

void save_kg_artifact(const KgArtifact& artifact, std::ostream& out) {
  json j;
  j["format"] = "kgsc-kg";
  j["version"] = 1;
  j["seen"] = side_to_json(artifact.seen);
  if (artifact.unseen) j["unseen"] = side_to_json(*artifact.unseen);
  out << j.dump(2) << '\n';
}

void save_kg_artifact_file(const KgArtifact& artifact,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write kg artifact: " + path.string());
  save_kg_artifact(artifact, out);
}

KgArtifact load_kg_artifact(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(std::string("kg artifact is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "kgsc-kg")
    throw Error("not a kgsc-kg artifact");
  if (j.value("version", 0) != 1)
    throw Error("unsupported kg artifact version");
  KgArtifact artifact;
  artifact.seen = side_from_json(j.at("seen"));
  if (j.contains("unseen")) artifact.unseen = side_from_json(j.at("unseen"));
  return artifact;
}

KgArtifact load_kg_artifact_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open kg artifact: " + path.string());
  return load_kg_artifact(in);
}

}  // namespace kgsc
