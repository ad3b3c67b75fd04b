#include "kgsc/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kgsc/errors.hpp"
#include "kgsc/rng.hpp"

namespace kgsc {

void SyntheticWorldParams::validate() const {
  if (n_seen < 1 || n_unseen < 1) throw Error("category counts must be at least 1");
  if (n_attributes < min_attrs_per_category)
    throw Error("attribute pool is smaller than the per-category minimum");
  if (min_attrs_per_category < 1 || max_attrs_per_category < min_attrs_per_category)
    throw Error("invalid attrs-per-category range");
  if (samples_per_class < 1 || test_samples_per_class < 1)
    throw Error("sample counts must be at least 1");
  if (min_attr_set_distance < 0)
    throw Error("attribute set distance must be non-negative");
  if (word_dim < 2 || feature_dim < 2) throw Error("dimensions must be at least 2");
  if (noise_scale < 0.0 || word_noise < 0.0)
    throw Error("noise scales must be non-negative");
}

namespace {

std::string indexed_label(const char* prefix, int i) {
  std::ostringstream ss;
  ss << prefix;
  if (i < 10) ss << '0';
  ss << i;
  return ss.str();
}

Vector random_unit(Eigen::Index dim, Rng& rng) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.gaussian();
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : random_unit(dim, rng);
}

int symmetric_difference_size(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

/// Sorted attribute subset with size in [min_k, max_k], distinct from all
/// previously chosen subsets (so no two categories are indistinguishable)
/// and at least min_distance away from each of them in symmetric difference.
std::vector<int> choose_attrs(const std::vector<int>& pool, int min_k, int max_k,
                              int min_distance, Rng& rng,
                              std::set<std::vector<int>>& used_sets) {
  max_k = std::min(max_k, static_cast<int>(pool.size()));
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const int k = min_k + rng.uniform_int(max_k - min_k + 1);
    std::vector<int> candidates = pool;
    std::vector<int> chosen;
    for (int i = 0; i < k; ++i) {
      const int idx = rng.uniform_int(static_cast<int>(candidates.size()));
      chosen.push_back(candidates[static_cast<std::size_t>(idx)]);
      candidates.erase(candidates.begin() + idx);
    }
    std::sort(chosen.begin(), chosen.end());
    if (used_sets.count(chosen)) continue;
    bool far_enough = true;
    for (const auto& other : used_sets) {
      if (symmetric_difference_size(chosen, other) < min_distance) {
        far_enough = false;
        break;
      }
    }
    if (!far_enough) continue;
    used_sets.insert(chosen);
    return chosen;
  }
  throw Error("infeasible attribute reuse constraint: cannot draw distinct "
              "attribute sets from the shared pool");
}

}  // namespace

SyntheticWorld generate_synthetic_world(const SyntheticWorldParams& params) {
  params.validate();

  SyntheticWorld world;
  for (int i = 0; i < params.n_seen; ++i)
    world.seen_categories.push_back(indexed_label("seen", i));
  for (int i = 0; i < params.n_unseen; ++i)
    world.unseen_categories.push_back(indexed_label("unseen", i));
  std::vector<std::string> attr_labels;
  for (int i = 0; i < params.n_attributes; ++i)
    attr_labels.push_back(indexed_label("attr", i));

  world.labels = LabelMap(world.seen_categories, world.unseen_categories);

  Rng attr_rng = subrng(params.seed, "world_attrs");
  Rng word_rng = subrng(params.seed, "world_words");
  Rng feat_rng = subrng(params.seed, "world_features");
  Rng mix_rng = subrng(params.seed, "world_mixtures");

  // Attribute prototypes in word space and in visual feature space.
  std::vector<Vector> attr_word(static_cast<std::size_t>(params.n_attributes));
  std::vector<Vector> attr_feat(static_cast<std::size_t>(params.n_attributes));
  for (int a = 0; a < params.n_attributes; ++a) {
    attr_word[static_cast<std::size_t>(a)] = random_unit(params.word_dim, word_rng);
    attr_feat[static_cast<std::size_t>(a)] = random_unit(params.feature_dim, feat_rng);
  }

  // Seen categories draw from the full attribute pool.
  std::vector<int> full_pool(static_cast<std::size_t>(params.n_attributes));
  for (int a = 0; a < params.n_attributes; ++a) full_pool[static_cast<std::size_t>(a)] = a;

  std::set<std::vector<int>> used_sets;
  std::vector<std::vector<int>> attrs_of_seen;
  std::set<int> seen_attr_union;
  for (int c = 0; c < params.n_seen; ++c) {
    auto chosen = choose_attrs(full_pool, params.min_attrs_per_category,
                               params.max_attrs_per_category, 1, attr_rng,
                               used_sets);
    seen_attr_union.insert(chosen.begin(), chosen.end());
    attrs_of_seen.push_back(std::move(chosen));
  }

  // Unseen categories may only reuse attributes that some seen category
  // already exercises; that shared support is what makes transfer possible.
  // The distance floor keeps each unseen mixture identifiable rather than a
  // near-duplicate of a seen one.
  std::vector<int> shared_pool(seen_attr_union.begin(), seen_attr_union.end());
  if (static_cast<int>(shared_pool.size()) < params.min_attrs_per_category)
    throw Error("infeasible attribute reuse constraint: seen categories cover "
                "too few attributes");
  std::vector<std::vector<int>> attrs_of_unseen;
  for (int c = 0; c < params.n_unseen; ++c) {
    attrs_of_unseen.push_back(choose_attrs(
        shared_pool, params.min_attrs_per_category, params.max_attrs_per_category,
        params.min_attr_set_distance, attr_rng, used_sets));
  }

  // Word vectors: attributes get their prototypes, categories the noisy
  // mixture of theirs. The same mixture weights shape the visual means.
  world.word_vectors = WordVectorTable(params.word_dim);
  for (int a = 0; a < params.n_attributes; ++a)
    world.word_vectors.insert(attr_labels[static_cast<std::size_t>(a)],
                              attr_word[static_cast<std::size_t>(a)]);

  const int n_categories = world.labels.size();
  std::vector<Vector> category_mean(static_cast<std::size_t>(n_categories));
  std::vector<const std::vector<int>*> attrs_of_category(
      static_cast<std::size_t>(n_categories));
  for (int id = 0; id < n_categories; ++id) {
    const std::string& label = world.labels.label(id);
    const bool unseen = world.labels.is_unseen(id);
    const auto ord = [&](const std::vector<std::string>& names) {
      return static_cast<std::size_t>(
          std::lower_bound(names.begin(), names.end(), label) - names.begin());
    };
    const auto& attrs = unseen ? attrs_of_unseen[ord(world.unseen_categories)]
                               : attrs_of_seen[ord(world.seen_categories)];
    attrs_of_category[static_cast<std::size_t>(id)] = &attrs;

    Vector weights(static_cast<Eigen::Index>(attrs.size()));
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      weights[i] = mix_rng.uniform(0.5, 1.5);
    weights /= weights.sum();

    Vector word = Vector::Zero(params.word_dim);
    Vector feat = Vector::Zero(params.feature_dim);
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      word += weights[i] * attr_word[static_cast<std::size_t>(attrs[static_cast<std::size_t>(i)])];
      feat += weights[i] * attr_feat[static_cast<std::size_t>(attrs[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index i = 0; i < word.size(); ++i)
      word[i] += params.word_noise * word_rng.gaussian();
    world.word_vectors.insert(label, word);
    category_mean[static_cast<std::size_t>(id)] = feat;
  }

  for (int id = 0; id < n_categories; ++id) {
    for (int a : *attrs_of_category[static_cast<std::size_t>(id)]) {
      world.triples.push_back({world.labels.label(id), "HasAttribute",
                               attr_labels[static_cast<std::size_t>(a)]});
    }
  }

  // Gaussian clusters around the category means.
  Rng sample_rng = subrng(params.seed, "world_samples");
  world.train.features.resize(
      static_cast<Eigen::Index>(params.n_seen) * params.samples_per_class,
      params.feature_dim);
  world.test.features.resize(
      static_cast<Eigen::Index>(n_categories) * params.test_samples_per_class,
      params.feature_dim);
  Eigen::Index train_row = 0, test_row = 0;
  auto draw_samples = [&](FeatureDataset& ds, Eigen::Index& row, int id, int count) {
    for (int s = 0; s < count; ++s) {
      ds.features.row(row) = category_mean[static_cast<std::size_t>(id)].transpose();
      for (Eigen::Index i = 0; i < ds.features.cols(); ++i)
        ds.features(row, i) += params.noise_scale * sample_rng.gaussian();
      ds.label_ids.push_back(id);
      ++row;
    }
  };
  for (int id = 0; id < n_categories; ++id) {
    if (!world.labels.is_unseen(id))
      draw_samples(world.train, train_row, id, params.samples_per_class);
    draw_samples(world.test, test_row, id, params.test_samples_per_class);
  }
  return world;
}

void SyntheticWorld::write_files(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "triples.tsv", std::ios::binary);
    if (!out) throw IoError("cannot write triples.tsv in " + dir.string());
    out << "# head\trelation\ttail\n";
    for (const auto& t : triples)
      out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
  {
    std::ofstream out(dir / "vectors.txt", std::ios::binary);
    if (!out) throw IoError("cannot write vectors.txt in " + dir.string());
    out.precision(17);
    std::vector<std::string> tokens;
    for (const auto& t : triples) {
      tokens.push_back(t.head);
      tokens.push_back(t.tail);
    }
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (const auto& tok : tokens) {
      const Vector* v = word_vectors.find(tok);
      if (!v) continue;
      out << tok;
      for (Eigen::Index i = 0; i < v->size(); ++i) out << ' ' << (*v)[i];
      out << '\n';
    }
  }
  labels.save_file(dir / "labels.tsv");
  {
    std::ofstream out(dir / "seen.txt", std::ios::binary);
    for (const auto& l : seen_categories) out << l << '\n';
  }
  {
    std::ofstream out(dir / "unseen.txt", std::ios::binary);
    for (const auto& l : unseen_categories) out << l << '\n';
  }
  train.save_file(dir / "train.feat");
  test.save_file(dir / "test.feat");
}

}  // namespace kgsc
