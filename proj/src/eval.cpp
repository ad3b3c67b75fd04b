#include "kgsc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "kgsc/errors.hpp"

namespace kgsc {

int classify(const Vector& s_hat, const CategoryEmbeddingTable& phi) {
  if (phi.size() == 0) throw Error("classify: empty category set");
  if (s_hat.size() != phi.dim()) throw Error("classify: dimension mismatch");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c = 0; c < phi.size(); ++c) {
    const double d = (phi.embeddings().row(c).transpose() - s_hat).norm();
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                int n_categories, bool per_class_mean) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw Error("accuracy: empty or mismatched prediction/label lists");
  for (int l : labels) {
    if (l < 0 || l >= n_categories)
      throw Error("accuracy: label outside the category set: " + std::to_string(l));
  }

  if (!per_class_mean) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (predictions[i] == labels[i]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
  }

  std::vector<int> total(static_cast<std::size_t>(n_categories), 0);
  std::vector<int> correct(static_cast<std::size_t>(n_categories), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++total[static_cast<std::size_t>(labels[i])];
    if (predictions[i] == labels[i]) ++correct[static_cast<std::size_t>(labels[i])];
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < n_categories; ++c) {
    if (total[static_cast<std::size_t>(c)] == 0) continue;
    sum += static_cast<double>(correct[static_cast<std::size_t>(c)]) /
           static_cast<double>(total[static_cast<std::size_t>(c)]);
    ++present;
  }
  if (present == 0) throw Error("accuracy: no category has samples");
  return 100.0 * sum / static_cast<double>(present);
}

double harmonic_mean(double seen_acc, double unseen_acc) {
  if (seen_acc < 0.0 || unseen_acc < 0.0)
    throw Error("harmonic mean needs non-negative accuracies");
  if (seen_acc + unseen_acc == 0.0)
    throw Error("harmonic mean undefined when both accuracies are zero");
  return 2.0 * seen_acc * unseen_acc / (seen_acc + unseen_acc);
}

void EvalConfig::validate() const {
  if (snr_list.empty()) throw Error("SNR list is empty");
  if (episodes < 1) throw Error("episode count must be at least 1");
  if (!(practical_fraction > 0.0 && practical_fraction < 1.0))
    throw Error("practical mix fraction must lie strictly between 0 and 1");
  if (threads < 1) throw Error("thread count must be at least 1");
}

EvalContext EvalContext::build(const Checkpoint& ck, const FeatureDataset& test,
                               const LabelMap& labels) {
  if (test.size() == 0) throw Error("evaluation dataset is empty");
  if (test.feature_dim() != ck.codec.feature_dim())
    throw Error("evaluation feature dim " + std::to_string(test.feature_dim()) +
                " does not match checkpoint feature dim " +
                std::to_string(ck.codec.feature_dim()));

  EvalContext ctx;
  ctx.codec = ck.codec;
  ctx.phi = ck.embeddings;
  ctx.s_clean = semantic_encode(ck.codec, test.features);
  ctx.z = channel_encode(ck.codec, ctx.s_clean);
  ctx.true_class.resize(static_cast<std::size_t>(test.size()));
  ctx.is_unseen.resize(static_cast<std::size_t>(test.size()));
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const auto& label = labels.label(test.label_ids[static_cast<std::size_t>(i)]);
    const int idx = ctx.phi.index_of(label);
    ctx.true_class[static_cast<std::size_t>(i)] = idx;
    ctx.is_unseen[static_cast<std::size_t>(i)] = ctx.phi.is_unseen(idx) ? 1 : 0;
  }
  ctx.qam.clip_lo = -4.0 * ck.symbol_std;
  ctx.qam.clip_hi = 4.0 * ck.symbol_std;
  return ctx;
}

std::vector<int> practical_mix_sample(const std::vector<int>& seen_rows,
                                      const std::vector<int>& unseen_rows,
                                      int draw_count, double fraction,
                                      std::uint64_t seed) {
  if (seen_rows.empty() || unseen_rows.empty())
    throw Error("practical mix needs both seen and unseen samples");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error("practical mix fraction must lie strictly between 0 and 1");
  if (draw_count < 1) throw Error("practical mix draw count must be positive");

  Rng rng = subrng(seed, "practical_mix");
  std::vector<int> draws;
  draws.reserve(static_cast<std::size_t>(draw_count));
  for (int i = 0; i < draw_count; ++i) {
    if (rng.uniform() < fraction) {
      draws.push_back(seen_rows[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(seen_rows.size())))]);
    } else {
      draws.push_back(unseen_rows[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(unseen_rows.size())))]);
    }
  }
  return draws;
}

namespace {

// Row-wise argmin of ‖φ_c − ŝ_i‖; ties resolve to the lowest index, which is
// the ascending label because tables are label-sorted.
std::vector<int> classify_rows(const Matrix& s_hat, const CategoryEmbeddingTable& phi) {
  const Matrix& emb = phi.embeddings();
  const Vector phi_sq = emb.rowwise().squaredNorm();
  std::vector<int> out(static_cast<std::size_t>(s_hat.rows()));
  Matrix cross = s_hat * emb.transpose();  // N x C
  for (Eigen::Index i = 0; i < s_hat.rows(); ++i) {
    const double s_sq = s_hat.row(i).squaredNorm();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < emb.rows(); ++c) {
      const double d = s_sq + phi_sq[c] - 2.0 * cross(i, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

struct EpisodeOutcome {
  EpisodeResult result;
  std::vector<int> predictions;
};

EpisodeOutcome run_episode(const EvalContext& ctx, double snr_db,
                           ChannelConfig::Mode mode, double gain,
                           double practical_fraction, std::uint64_t episode_seed,
                           const CategoryEmbeddingTable& phi) {
  ChannelConfig ch;
  ch.gain = gain;
  ch.snr_db = snr_db;
  ch.mode = mode;

  Matrix z_hat;
  if (mode == ChannelConfig::Mode::analog) {
    AnalogChannel channel(ch, derive_seed(episode_seed, "episode_noise"));
    z_hat = channel.transmit(ctx.z);
  } else {
    DigitalChannel channel(ch, ctx.qam, derive_seed(episode_seed, "episode_noise"));
    z_hat = channel.transmit(ctx.z);
  }
  const Matrix s_hat = decode_received(ctx.codec, z_hat);
  std::vector<int> predictions = classify_rows(s_hat, phi);

  const int n_categories = phi.size();
  std::vector<int> per_cat_total(static_cast<std::size_t>(n_categories), 0);
  std::vector<int> per_cat_correct(static_cast<std::size_t>(n_categories), 0);
  std::vector<int> seen_rows, unseen_rows;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int truth = ctx.true_class[i];
    ++per_cat_total[static_cast<std::size_t>(truth)];
    if (predictions[i] == truth) ++per_cat_correct[static_cast<std::size_t>(truth)];
    if (ctx.is_unseen[i])
      unseen_rows.push_back(static_cast<int>(i));
    else
      seen_rows.push_back(static_cast<int>(i));
  }

  EpisodeOutcome out;
  out.result.per_category_acc = Vector::Constant(
      n_categories, std::numeric_limits<double>::quiet_NaN());
  double seen_sum = 0.0, unseen_sum = 0.0;
  double seen_weight = 0.0, unseen_weight = 0.0;
  for (int c = 0; c < n_categories; ++c) {
    const int total = per_cat_total[static_cast<std::size_t>(c)];
    if (total == 0) continue;
    const int correct = per_cat_correct[static_cast<std::size_t>(c)];
    out.result.per_category_acc[c] =
        100.0 * static_cast<double>(correct) / static_cast<double>(total);
    // Per-class mean weighs every class equally; sample mean weighs by count.
    const double num = ctx.per_class_mean
                           ? out.result.per_category_acc[c]
                           : 100.0 * static_cast<double>(correct);
    const double den = ctx.per_class_mean ? 1.0 : static_cast<double>(total);
    if (phi.is_unseen(c)) {
      unseen_sum += num;
      unseen_weight += den;
    } else {
      seen_sum += num;
      seen_weight += den;
    }
  }
  out.result.seen_acc = seen_weight > 0.0 ? seen_sum / seen_weight : 0.0;
  out.result.unseen_acc = unseen_weight > 0.0 ? unseen_sum / unseen_weight : 0.0;

  if (!seen_rows.empty() && !unseen_rows.empty()) {
    const auto draws = practical_mix_sample(
        seen_rows, unseen_rows, static_cast<int>(predictions.size()),
        practical_fraction, derive_seed(episode_seed, "episode_mix"));
    std::size_t correct = 0;
    for (int row : draws) {
      if (predictions[static_cast<std::size_t>(row)] ==
          ctx.true_class[static_cast<std::size_t>(row)])
        ++correct;
    }
    out.result.practical_acc =
        100.0 * static_cast<double>(correct) / static_cast<double>(draws.size());
  }
  out.predictions = std::move(predictions);
  return out;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

EpisodeResult evaluate_episode(const EvalContext& ctx, double snr_db,
                               ChannelConfig::Mode mode, double gain,
                               double practical_fraction,
                               std::uint64_t episode_seed,
                               const CategoryEmbeddingTable* phi_override) {
  const CategoryEmbeddingTable& phi = phi_override ? *phi_override : ctx.phi;
  return run_episode(ctx, snr_db, mode, gain, practical_fraction, episode_seed, phi)
      .result;
}

EvalReport snr_sweep(const EvalContext& ctx, const EvalConfig& cfg,
                     const CategoryEmbeddingTable* phi_override) {
  cfg.validate();
  const CategoryEmbeddingTable& phi = phi_override ? *phi_override : ctx.phi;

  EvalReport report;
  report.category_labels = phi.labels();
  report.category_unseen.resize(static_cast<std::size_t>(phi.size()));
  for (int c = 0; c < phi.size(); ++c)
    report.category_unseen[static_cast<std::size_t>(c)] = phi.is_unseen(c) ? 1 : 0;
  report.per_category = Matrix::Zero(phi.size(),
                                     static_cast<Eigen::Index>(cfg.snr_list.size()));

  for (std::size_t snr_idx = 0; snr_idx < cfg.snr_list.size(); ++snr_idx) {
    const double snr = cfg.snr_list[snr_idx];
    std::vector<EpisodeResult> episodes(static_cast<std::size_t>(cfg.episodes));
    parallel_for(cfg.episodes, cfg.threads, [&](int e) {
      // Episode seeds derive from master + episode index; the SNR index picks
      // an independent stream per sweep point.
      const std::uint64_t episode_seed =
          derive_seed(cfg.seed + static_cast<std::uint64_t>(e), "episode", snr_idx);
      episodes[static_cast<std::size_t>(e)] =
          evaluate_episode(ctx, snr, cfg.mode, cfg.gain, cfg.practical_fraction,
                           episode_seed, &phi);
    });

    std::vector<double> seen, unseen, practical, harmonic;
    Vector per_cat_sum = Vector::Zero(phi.size());
    Vector per_cat_n = Vector::Zero(phi.size());
    for (const auto& ep : episodes) {
      seen.push_back(ep.seen_acc);
      unseen.push_back(ep.unseen_acc);
      practical.push_back(ep.practical_acc);
      if (ep.seen_acc + ep.unseen_acc > 0.0)
        harmonic.push_back(harmonic_mean(ep.seen_acc, ep.unseen_acc));
      for (int c = 0; c < phi.size(); ++c) {
        if (!std::isnan(ep.per_category_acc[c])) {
          per_cat_sum[c] += ep.per_category_acc[c];
          per_cat_n[c] += 1.0;
        }
      }
    }

    SnrRow row;
    row.snr_db = snr;
    row.seen_mean = mean_of(seen);
    row.seen_std = std_of(seen);
    row.unseen_mean = mean_of(unseen);
    row.unseen_std = std_of(unseen);
    // The reported ξ is recomputed from the reported S and U columns.
    row.harmonic = (row.seen_mean + row.unseen_mean) > 0.0
                       ? harmonic_mean(row.seen_mean, row.unseen_mean)
                       : 0.0;
    row.harmonic_std = harmonic.empty() ? 0.0 : std_of(harmonic);
    row.practical_mean = mean_of(practical);
    row.practical_std = std_of(practical);
    report.rows.push_back(row);

    for (int c = 0; c < phi.size(); ++c) {
      report.per_category(c, static_cast<Eigen::Index>(snr_idx)) =
          per_cat_n[c] > 0.0 ? per_cat_sum[c] / per_cat_n[c]
                             : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

CategoryEmbeddingTable randomize_unseen_rows(const CategoryEmbeddingTable& phi,
                                             std::uint64_t seed) {
  CategoryEmbeddingTable out = phi;
  for (int idx : phi.unseen_indices()) {
    Rng rng = subrng(seed, "random_phi", static_cast<std::uint64_t>(idx));
    Vector direction(phi.dim());
    for (Eigen::Index i = 0; i < direction.size(); ++i) direction[i] = rng.gaussian();
    const double norm = direction.norm();
    if (norm == 0.0) continue;  // astronomically unlikely; keep the true row
    const double target = phi.embeddings().row(idx).norm();
    out.set_row(idx, direction * (target / norm));
  }
  return out;
}

AblationReport ablation_random_phi(const EvalContext& ctx, const EvalConfig& cfg,
                                   std::uint64_t randomization_seed) {
  AblationReport report;
  report.true_phi = snr_sweep(ctx, cfg);
  const CategoryEmbeddingTable random_phi =
      randomize_unseen_rows(ctx.phi, randomization_seed);
  report.random_phi = snr_sweep(ctx, cfg, &random_phi);
  return report;
}

namespace {

void write_metric_row(std::ostream& out, double snr, const char* metric,
                      double mean, double std_dev) {
  out << snr << ',' << metric << ',' << mean << ',' << std_dev << '\n';
}

}  // namespace

void EvalReport::write_csv(std::ostream& out) const {
  out << "snr_db,metric,mean,std\n";
  const auto flags = out.flags();
  out.precision(6);
  out << std::fixed;
  for (const auto& row : rows) {
    write_metric_row(out, row.snr_db, "seen_accuracy", row.seen_mean, row.seen_std);
    write_metric_row(out, row.snr_db, "unseen_accuracy", row.unseen_mean,
                     row.unseen_std);
    write_metric_row(out, row.snr_db, "harmonic_mean", row.harmonic,
                     row.harmonic_std);
    write_metric_row(out, row.snr_db, "practical_accuracy", row.practical_mean,
                     row.practical_std);
  }
  out.flags(flags);
}

void EvalReport::write_per_category_csv(std::ostream& out) const {
  out << "snr_db,category,split,accuracy_mean\n";
  const auto flags = out.flags();
  out.precision(6);
  out << std::fixed;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t c = 0; c < category_labels.size(); ++c) {
      out << rows[s].snr_db << ',' << category_labels[c] << ','
          << (category_unseen[c] ? "unseen" : "seen") << ','
          << per_category(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s))
          << '\n';
    }
  }
  out.flags(flags);
}

PcaResult pca_project(const Matrix& points, int k) {
  if (points.rows() < 2) throw Error("PCA needs at least 2 points");
  if (k < 1 || k > points.cols())
    throw Error("PCA component count must lie in [1, dim]");

  PcaResult res;
  res.mean = points.colwise().mean();
  Matrix centered = points.rowwise() - res.mean.transpose();
  const Matrix cov = centered.transpose() * centered /
                     static_cast<double>(points.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
  const Vector eigenvalues = solver.eigenvalues();  // ascending
  const Matrix eigenvectors = solver.eigenvectors();

  const double total = std::max(eigenvalues.sum(), 0.0);
  res.components.resize(k, points.cols());
  res.explained_variance_ratio.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const Eigen::Index src = points.cols() - 1 - i;  // descending order
    Vector dir = eigenvectors.col(src);
    // Fixed sign: the largest-magnitude component points positive.
    Eigen::Index arg_max = 0;
    dir.cwiseAbs().maxCoeff(&arg_max);
    if (dir[arg_max] < 0.0) dir = -dir;
    res.components.row(i) = dir.transpose();
    res.explained_variance_ratio[static_cast<std::size_t>(i)] =
        total > 0.0 ? std::max(eigenvalues[src], 0.0) / total : 0.0;
  }
  res.coordinates = centered * res.components.transpose();
  return res;
}

void write_pca_csv(const PcaResult& pca, const std::vector<std::string>& labels,
                   const std::vector<std::uint8_t>& unseen, std::ostream& out) {
  if (static_cast<Eigen::Index>(labels.size()) != pca.coordinates.rows() ||
      labels.size() != unseen.size())
    throw Error("PCA CSV: label count does not match coordinates");
  out << "label,split";
  for (Eigen::Index c = 0; c < pca.coordinates.cols(); ++c)
    out << ",pc" << (c + 1);
  out << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i] << ',' << (unseen[i] ? "unseen" : "seen");
    for (Eigen::Index c = 0; c < pca.coordinates.cols(); ++c)
      out << ',' << pca.coordinates(static_cast<Eigen::Index>(i), c);
    out << '\n';
  }
}

std::vector<SimilarityRow> similarity_report(const EvalContext& ctx, double snr_db,
                                             ChannelConfig::Mode mode, double gain,
                                             int top_n, std::uint64_t seed) {
  if (top_n < 1) throw Error("similarity report needs top_n >= 1");

  ChannelConfig ch;
  ch.gain = gain;
  ch.snr_db = snr_db;
  ch.mode = mode;
  Matrix z_hat;
  if (mode == ChannelConfig::Mode::analog) {
    AnalogChannel channel(ch, derive_seed(seed, "episode_noise"));
    z_hat = channel.transmit(ctx.z);
  } else {
    DigitalChannel channel(ch, ctx.qam, derive_seed(seed, "episode_noise"));
    z_hat = channel.transmit(ctx.z);
  }
  const Matrix s_hat = decode_received(ctx.codec, z_hat);
  const std::vector<int> predictions = classify_rows(s_hat, ctx.phi);

  const int c = ctx.phi.size();
  const int keep = std::min(top_n, c);
  std::vector<SimilarityRow> rows;
  rows.reserve(static_cast<std::size_t>(s_hat.rows()));
  for (Eigen::Index i = 0; i < s_hat.rows(); ++i) {
    Vector scores(c);
    for (int j = 0; j < c; ++j)
      scores[j] = sim(s_hat.row(i).transpose(),
                      ctx.phi.embeddings().row(j).transpose());
    // Softmax over the full category set; confidences sum to 1 over 𝒴.
    const double max_score = scores.maxCoeff();
    Vector expd = (scores.array() - max_score).exp();
    Vector confidence = expd / expd.sum();

    std::vector<int> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });

    SimilarityRow row;
    row.sample = static_cast<int>(i);
    row.true_label = ctx.phi.label(ctx.true_class[static_cast<std::size_t>(i)]);
    row.predicted_label = ctx.phi.label(predictions[static_cast<std::size_t>(i)]);
    for (int r = 0; r < keep; ++r) {
      const int j = order[static_cast<std::size_t>(r)];
      row.top.emplace_back(ctx.phi.label(j), scores[j], confidence[j]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_similarity_csv(const std::vector<SimilarityRow>& rows, std::ostream& out) {
  std::size_t top_n = 0;
  for (const auto& r : rows) top_n = std::max(top_n, r.top.size());
  out << "sample,true_label,predicted_label";
  for (std::size_t i = 1; i <= top_n; ++i)
    out << ",label_" << i << ",score_" << i << ",confidence_" << i;
  out << '\n';
  for (const auto& r : rows) {
    out << r.sample << ',' << r.true_label << ',' << r.predicted_label;
    for (const auto& [label, score, confidence] : r.top)
      out << ',' << label << ',' << score << ',' << confidence;
    out << '\n';
  }
}

}  // namespace kgsc
