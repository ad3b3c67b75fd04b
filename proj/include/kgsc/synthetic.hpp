#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgsc/dataset.hpp"
#include "kgsc/graph.hpp"
#include "kgsc/kg_skb.hpp"

namespace kgsc {

/// Desk-scale stand-in for a real image corpus plus commonsense graph and
/// pretrained word vectors. Categories link to shared attribute nodes; word
/// vectors and visual feature means are built from the same per-category
/// attribute mixture, so graph structure genuinely carries the information
/// needed to recognize unseen categories.
struct SyntheticWorldParams {
  int n_seen = 20;
  int n_unseen = 12;
  int n_attributes = 15;
  int min_attrs_per_category = 3;
  int max_attrs_per_category = 6;
  int samples_per_class = 50;       // training samples, seen categories only
  int test_samples_per_class = 20;  // held-out samples, every category
  /// Minimum symmetric difference between an unseen category's attribute set
  /// and every other category's. Keeps unseen clusters identifiable instead
  /// of collapsing onto a near-identical seen category.
  int min_attr_set_distance = 5;
  int word_dim = 300;
  int feature_dim = 256;
  double noise_scale = 0.05;   // within-class feature spread
  double word_noise = 0.002;   // category word-vector jitter
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticWorld {
  std::vector<TripleRecord> triples;
  WordVectorTable word_vectors;
  LabelMap labels;
  FeatureDataset train;  // seen categories
  FeatureDataset test;   // seen + unseen categories
  std::vector<std::string> seen_categories;    // sorted
  std::vector<std::string> unseen_categories;  // sorted

  /// Writes triples.tsv, vectors.txt, labels.tsv, seen.txt, unseen.txt,
  /// train.feat, test.feat into the directory.
  void write_files(const std::filesystem::path& dir) const;
};

SyntheticWorld generate_synthetic_world(const SyntheticWorldParams& params);

}  // namespace kgsc
