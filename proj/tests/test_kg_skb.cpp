#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "kgsc/errors.hpp"
#include "kgsc/kg_skb.hpp"
#include "kgsc/rng.hpp"

using namespace kgsc;

namespace {

KnowledgeGraph graph_from(const std::string& text) {
  std::istringstream in(text);
  return load_triples(in);
}

// Independent oracle: plain BFS truncated at the given depth.
std::set<std::string> bfs_labels(const KnowledgeGraph& kg, const std::string& start,
                                 int max_depth) {
  std::set<std::string> seen{start};
  std::queue<std::pair<int, int>> q;
  q.push({kg.id_of(start), 0});
  while (!q.empty()) {
    auto [u, d] = q.front();
    q.pop();
    if (d == max_depth) continue;
    for (int v : kg.neighbors(u)) {
      if (seen.insert(kg.label_of(v)).second) q.push({v, d + 1});
    }
  }
  return seen;
}

KnowledgeGraph random_graph(int n_nodes, double edge_prob, Rng& rng) {
  std::vector<std::string> labels;
  for (int i = 0; i < n_nodes; ++i) {
    std::ostringstream ss;
    ss << "n" << (i < 10 ? "0" : "") << i;
    labels.push_back(ss.str());
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (int u = 0; u < n_nodes; ++u)
    for (int v = u + 1; v < n_nodes; ++v)
      if (rng.uniform() < edge_prob) edges.emplace_back(labels[u], labels[v]);
  return KnowledgeGraph(labels, edges, {});
}

}  // namespace

TEST_CASE("load_triples builds a deduplicated undirected graph") {
  const auto g = graph_from("cat\tIsA\tanimal\n");
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.has_edge(g.id_of("cat"), g.id_of("animal")));

  const auto twice = graph_from("cat\tIsA\tanimal\ncat\tIsA\tanimal\n");
  CHECK(twice == g);

  // Reverse direction and a different relation still mean one undirected edge.
  const auto reversed = graph_from("cat\tIsA\tanimal\nanimal\tHas\tcat\n");
  CHECK(reversed.edge_count() == 1);
}

TEST_CASE("load_triples matches a hand-enumerated adjacency") {
  const auto g = graph_from(
      "# two-hop chain fixture\n"
      "cat\tIsA\tanimal\n"
      "animal\tIsA\torganism\n"
      "cat\tHasA\ttail\n"
      "dog\tIsA\tanimal\n"
      "organism\tRelatedTo\tlife\n");
  CHECK(g.node_count() == 6);
  CHECK(g.edge_count() == 5);
  // Sorted labels: animal cat dog life organism tail.
  CHECK(g.labels() == std::vector<std::string>{"animal", "cat", "dog", "life",
                                               "organism", "tail"});
  auto nbr_labels = [&](const std::string& l) {
    std::vector<std::string> out;
    for (int v : g.neighbors(g.id_of(l))) out.push_back(g.label_of(v));
    return out;
  };
  CHECK(nbr_labels("animal") == std::vector<std::string>{"cat", "dog", "organism"});
  CHECK(nbr_labels("cat") == std::vector<std::string>{"animal", "tail"});
  CHECK(nbr_labels("organism") == std::vector<std::string>{"animal", "life"});
  CHECK(nbr_labels("tail") == std::vector<std::string>{"cat"});
}

TEST_CASE("load_triples rejects malformed and empty input") {
  std::istringstream bad("cat\tIsA\tanimal\ndog only\n");
  CHECK_THROWS_WITH_AS(load_triples(bad), doctest::Contains("line 2"), ParseError);

  std::istringstream empty_head("\tIsA\tanimal\n");
  CHECK_THROWS_AS(load_triples(empty_head), ParseError);

  std::istringstream empty("# nothing but comments\n");
  CHECK_THROWS_AS(load_triples(empty), Error);
}

TEST_CASE("two_hop_subgraph basics") {
  // Self-loop input leaves z isolated (self-loops are never stored).
  const auto isolated = graph_from("z\tself\tz\na\tr\tb\n");
  const auto sub = two_hop_subgraph(isolated, "z");
  CHECK(sub.graph.node_count() == 1);
  CHECK(sub.graph.edge_count() == 0);

  const auto star = graph_from(
      "y\tr\tl1\ny\tr\tl2\ny\tr\tl3\ny\tr\tl4\n");
  const auto star_sub = two_hop_subgraph(star, "y");
  CHECK(star_sub.graph.node_count() == 5);
  CHECK(star_sub.graph.edge_count() == 4);

  const auto path = graph_from(
      "a\tr\tb\nb\tr\ty\ny\tr\tc\nc\tr\td\nd\tr\te\n");
  const auto path_sub = two_hop_subgraph(path, "y");
  const std::set<std::string> expect{"y", "b", "c", "a", "d"};
  CHECK(std::set<std::string>(path_sub.graph.labels().begin(),
                              path_sub.graph.labels().end()) == expect);
  CHECK_FALSE(path_sub.graph.contains("e"));

  CHECK_THROWS_AS(two_hop_subgraph(path, "nope"), Error);
}

TEST_CASE("two_hop_subgraph node set equals depth-2 BFS on random graphs") {
  Rng rng(20240601);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + rng.uniform_int(46);
    const auto kg = random_graph(n, 0.1 + 0.1 * rng.uniform_int(3), rng);
    const std::string start = kg.label_of(rng.uniform_int(kg.node_count()));
    const auto sub = two_hop_subgraph(kg, start);
    const auto expect = bfs_labels(kg, start, 2);
    CHECK(std::set<std::string>(sub.graph.labels().begin(),
                                sub.graph.labels().end()) == expect);
    // Induced edges: every kept edge exists in the parent graph.
    for (const auto& [u, v] : sub.graph.edges()) {
      CHECK(kg.has_edge(kg.id_of(sub.graph.label_of(u)),
                        kg.id_of(sub.graph.label_of(v))));
    }
  }
}

TEST_CASE("union_graphs unions node and edge sets") {
  const auto kg = graph_from(
      "a\tr\tb\nb\tr\tc\nc\tr\td\nx\tr\ty\ny\tr\tz\n");

  const auto sub_b = two_hop_subgraph(kg, "b");
  const auto single = union_graphs({sub_b}, GlobalGraph::Role::seen);
  CHECK(single.graph == sub_b.graph);
  CHECK(single.category_labels() == std::vector<std::string>{"b"});

  const auto sub_y = two_hop_subgraph(kg, "y");
  const auto disjoint = union_graphs({sub_b, sub_y}, GlobalGraph::Role::seen);
  CHECK(disjoint.graph.node_count() ==
        sub_b.graph.node_count() + sub_y.graph.node_count());

  // Overlapping pair sharing exactly 3 nodes and 2 edges.
  const CategorySubgraph sub1{
      "a", KnowledgeGraph({"a", "b", "c", "d"},
                          {{"a", "b"}, {"b", "c"}, {"c", "d"}}, {})};
  const CategorySubgraph sub2{
      "e", KnowledgeGraph({"b", "c", "d", "e"},
                          {{"b", "c"}, {"c", "d"}, {"d", "e"}}, {})};
  const auto merged = union_graphs({sub1, sub2}, GlobalGraph::Role::seen);
  CHECK(merged.graph.node_count() ==
        sub1.graph.node_count() + sub2.graph.node_count() - 3);
  CHECK(merged.graph.edge_count() ==
        static_cast<int>(sub1.graph.edge_count() + sub2.graph.edge_count()) - 2);

  CHECK_THROWS_AS(union_graphs({}, GlobalGraph::Role::seen), Error);
}

TEST_CASE("union_graphs is order-independent and idempotent") {
  const auto kg = graph_from(
      "a\tr\tb\nb\tr\tc\nc\tr\td\nd\tr\te\na\tr\tc\nb\tr\te\n");
  std::vector<CategorySubgraph> subs{two_hop_subgraph(kg, "a"),
                                     two_hop_subgraph(kg, "c"),
                                     two_hop_subgraph(kg, "e")};
  const auto base = union_graphs(subs, GlobalGraph::Role::seen);

  std::vector<CategorySubgraph> permuted{subs[2], subs[0], subs[1]};
  const auto shuffled = union_graphs(permuted, GlobalGraph::Role::seen);
  CHECK(shuffled.graph == base.graph);
  CHECK(shuffled.category_ids == base.category_ids);

  std::vector<CategorySubgraph> doubled{subs[0], subs[1], subs[2], subs[1]};
  const auto dup = union_graphs(doubled, GlobalGraph::Role::seen);
  CHECK(dup.graph == base.graph);
  CHECK(dup.category_ids == base.category_ids);
}

TEST_CASE("load_word_vectors parses and validates") {
  std::ostringstream zeros;
  zeros << "cat";
  for (int i = 0; i < 300; ++i) zeros << " 0";
  zeros << "\n";
  std::istringstream in(zeros.str());
  const auto table = load_word_vectors(in, 300);
  REQUIRE(table.find("cat") != nullptr);
  CHECK(table.find("cat")->isZero());

  std::ostringstream short_line;
  short_line << "cat";
  for (int i = 0; i < 299; ++i) short_line << " 1.5";
  std::istringstream bad(short_line.str());
  CHECK_THROWS_WITH_AS(load_word_vectors(bad, 300), doctest::Contains("line 1"),
                       ParseError);

  std::istringstream three("a 1 2\nb 3 4\nc -1 0.5\n");
  const auto t3 = load_word_vectors(three, 2);
  CHECK(t3.size() == 3);
  CHECK((*t3.find("b"))[0] == 3.0);
  CHECK((*t3.find("c"))[1] == 0.5);
}

TEST_CASE("init_node_features: exact, multiword mean, out-of-vocab zero") {
  const auto kg = graph_from(
      "water_buffalo\tIsA\tanimal\nmystery\tIsA\tanimal\n");
  const auto g = union_graphs({two_hop_subgraph(kg, "animal")},
                              GlobalGraph::Role::seen);

  std::istringstream vecs("animal 1 2 3\nwater 2 4 6\nbuffalo 4 6 8\n");
  const auto wv = load_word_vectors(vecs, 3);
  const auto [features, coverage] = init_node_features(g, wv);

  const int animal = g.graph.id_of("animal");
  CHECK(features.row(animal) == Eigen::RowVector3d(1, 2, 3));
  const int buffalo = g.graph.id_of("water_buffalo");
  CHECK(features.row(buffalo) == Eigen::RowVector3d(3, 5, 7));  // token mean
  const int mystery = g.graph.id_of("mystery");
  CHECK(features.row(mystery).isZero());

  CHECK(coverage.total_nodes == 3);
  CHECK(coverage.fully_covered == 2);
  CHECK(coverage.partially_covered == 0);
  CHECK(coverage.out_of_vocab == std::vector<std::string>{"mystery"});
}

TEST_CASE("random_walk_counts: forced walks and determinism") {
  const auto iso_kg = graph_from("z\tself\tz\na\tr\tb\n");
  GlobalGraph g;
  g.graph = iso_kg;
  g.category_ids = {iso_kg.id_of("a")};
  const auto counts = random_walk_counts(g, 50, 3, 7);
  const int z = iso_kg.id_of("z");
  CHECK(counts.row_total(z) == 0);

  // Two nodes, one edge, L=1: every walk lands on the single neighbor.
  const auto pair_kg = graph_from("u\tr\tv\n");
  GlobalGraph gp;
  gp.graph = pair_kg;
  gp.category_ids = {0};
  const auto c2 = random_walk_counts(gp, 123, 1, 9);
  CHECK(c2.at(pair_kg.id_of("u"), pair_kg.id_of("v")) == 123);
  CHECK(c2.at(pair_kg.id_of("v"), pair_kg.id_of("u")) == 123);

  const auto again = random_walk_counts(gp, 123, 1, 9);
  CHECK(again.at(0, 1) == c2.at(0, 1));
  CHECK(again.at(1, 0) == c2.at(1, 0));
}

TEST_CASE("walk count modes: every step vs final step") {
  // On a two-node graph a walk of length 2 alternates u -> v -> u, so the
  // per-step count registers both nodes while the endpoint mode only u.
  const auto pair_kg = graph_from("u\tr\tv\n");
  GlobalGraph g;
  g.graph = pair_kg;
  g.category_ids = {0};
  const int u = pair_kg.id_of("u");
  const int v = pair_kg.id_of("v");

  const auto steps = random_walk_counts(g, 77, 2, 13, WalkCountMode::every_step);
  CHECK(steps.at(u, v) == 77);
  CHECK(steps.at(u, u) == 77);

  const auto ends = random_walk_counts(g, 77, 2, 13, WalkCountMode::final_step);
  CHECK(ends.at(u, u) == 77);
  CHECK(ends.at(u, v) == 0);
  CHECK(ends.row_total(u) == 77);
}

TEST_CASE("random_walk_counts match exact two-step Markov statistics") {
  const auto kg = graph_from("a\tr\tb\nb\tr\tc\nc\tr\ta\n");
  GlobalGraph g;
  g.graph = kg;
  g.category_ids = {0};

  const int walks = 10000;
  const auto counts = random_walk_counts(g, walks, 2, 20240602);

  // Oracle: enumerate all two-step walks (p = 1/deg(u) * 1/deg(s1)) and
  // accumulate exact mean and variance of the per-walk visit count of v.
  const int n = kg.node_count();
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      double mean = 0.0, second = 0.0;
      for (int s1 : kg.neighbors(u)) {
        const double p1 = 1.0 / static_cast<double>(kg.neighbors(u).size());
        for (int s2 : kg.neighbors(s1)) {
          const double p = p1 / static_cast<double>(kg.neighbors(s1).size());
          const int visits = (s1 == v ? 1 : 0) + (s2 == v ? 1 : 0);
          mean += p * visits;
          second += p * visits * visits;
        }
      }
      const double var = second - mean * mean;
      const double sigma = std::sqrt(var * walks);
      const double expected = mean * walks;
      CHECK(std::abs(static_cast<double>(counts.at(u, v)) - expected) <=
            3.0 * sigma + 1e-9);
    }
  }
}

TEST_CASE("edge_weights implements Laplace smoothing with row normalization") {
  CountMatrix zero(4);
  const auto uniform = edge_weights(zero, 4);
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 4; ++v) CHECK(uniform.weight(u, v) == doctest::Approx(0.25));

  CountMatrix hand(3);
  hand.add(0, 0, 3);
  hand.add(0, 1, 1);
  const auto w = edge_weights(hand, 3);
  CHECK(w.weight(0, 0) == doctest::Approx(4.0 / 7.0));
  CHECK(w.weight(0, 1) == doctest::Approx(2.0 / 7.0));
  CHECK(w.weight(0, 2) == doctest::Approx(1.0 / 7.0));

  // Rows sum to 1 over the universe for random counts.
  Rng rng(99);
  CountMatrix random_counts(12);
  for (int u = 0; u < 12; ++u)
    for (int k = 0; k < 6; ++k)
      random_counts.add(u, rng.uniform_int(12), rng.uniform_int(50));
  const auto rw = edge_weights(random_counts, 12);
  for (int u = 0; u < 12; ++u) {
    double sum = 0.0;
    for (int v = 0; v < 12; ++v) sum += rw.weight(u, v);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  CHECK_THROWS_AS(edge_weights(zero, 0), Error);
}

TEST_CASE("edge_weights observed-only mode") {
  CountMatrix counts(3);
  counts.add(0, 1, 3);
  counts.add(0, 2, 1);
  const auto w = edge_weights(counts, 3, EdgeWeightMatrix::Mode::observed_only);
  CHECK(w.weight(0, 1) == doctest::Approx(4.0 / 6.0));
  CHECK(w.weight(0, 2) == doctest::Approx(2.0 / 6.0));
  CHECK(w.weight(0, 0) == 0.0);
  // Empty rows fall back to uniform over the universe.
  CHECK(w.weight(1, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("prune keeps top-k unions and breaks ties by label") {
  // k at or above the max degree keeps everything.
  const auto kg = graph_from("a\tr\tb\nb\tr\tc\nc\tr\ta\nc\tr\td\n");
  GlobalGraph g;
  g.graph = kg;
  g.category_ids = {kg.id_of("a")};
  const auto counts = random_walk_counts(g, 10, 2, 3);
  const auto weights = edge_weights(counts, kg.node_count());
  const auto untouched = prune(g, weights, 10);
  CHECK(untouched.graph == g.graph);

  // Star: the center ranks its two best leaves, but every leaf's own top-1
  // is the center, so the union keeps all edges.
  const auto star = graph_from(
      "hub\tr\tl1\nhub\tr\tl2\nhub\tr\tl3\nhub\tr\tl4\nhub\tr\tl5\n");
  GlobalGraph gs;
  gs.graph = star;
  gs.category_ids = {star.id_of("hub")};
  const auto sc = random_walk_counts(gs, 20, 2, 4);
  const auto sw = edge_weights(sc, star.node_count());
  const auto pruned_star = prune(gs, sw, 2);
  CHECK(pruned_star.graph.edge_count() == 5);

  // Equal weights everywhere (zero counts): k=1 keeps the lexicographically
  // smallest neighbor; in a triangle the b-c edge is the one dropped.
  const auto tri = graph_from("a\tr\tb\nb\tr\tc\nc\tr\ta\n");
  GlobalGraph gt;
  gt.graph = tri;
  gt.category_ids = {tri.id_of("a")};
  const auto tw = edge_weights(CountMatrix(3), 3);
  const auto pruned_tri = prune(gt, tw, 1);
  CHECK(pruned_tri.graph.edge_count() == 2);
  CHECK(pruned_tri.graph.has_edge(tri.id_of("a"), tri.id_of("b")));
  CHECK(pruned_tri.graph.has_edge(tri.id_of("a"), tri.id_of("c")));
  CHECK_FALSE(pruned_tri.graph.has_edge(tri.id_of("b"), tri.id_of("c")));
}

TEST_CASE("kg artifact round-trips and is byte-deterministic") {
  const auto kg = graph_from(
      "cat\tIsA\tanimal\ndog\tIsA\tanimal\nanimal\tIsA\torganism\n"
      "cat\tHasA\ttail\ndog\tHasA\ttail\n");
  std::istringstream vec_text(
      "cat 1 0\ndog 0 1\nanimal 1 1\norganism 2 0\ntail 0 2\n");
  const auto wv = load_word_vectors(vec_text, 2);

  KgBuildParams params;
  params.walks_per_node = 25;
  params.keep_top_k = 3;
  params.seed = 11;
  KgArtifact artifact;
  artifact.seen = build_kg_side(kg, {"cat", "dog"}, wv, GlobalGraph::Role::seen,
                                params);

  std::ostringstream first, second;
  save_kg_artifact(artifact, first);
  save_kg_artifact(artifact, second);
  CHECK(first.str() == second.str());

  std::istringstream in(first.str());
  const auto loaded = load_kg_artifact(in);
  CHECK(loaded.seen.graph.graph == artifact.seen.graph.graph);
  CHECK(loaded.seen.graph.category_ids == artifact.seen.graph.category_ids);
  CHECK(loaded.seen.features == artifact.seen.features);
  CHECK(loaded.seen.weights.universe_size() == artifact.seen.weights.universe_size());
  for (int u = 0; u < loaded.seen.graph.graph.node_count(); ++u)
    for (int v = 0; v < loaded.seen.graph.graph.node_count(); ++v)
      CHECK(loaded.seen.weights.weight(u, v) == artifact.seen.weights.weight(u, v));
  CHECK_FALSE(loaded.unseen.has_value());

  std::ostringstream resaved;
  save_kg_artifact(loaded, resaved);
  CHECK(resaved.str() == first.str());

  std::istringstream junk("{\"format\": \"other\"}");
  CHECK_THROWS_AS(load_kg_artifact(junk), Error);
}
