#include "kgsc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kgsc/errors.hpp"

namespace kgsc {

double sim(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw Error("sim: vector dimensions differ");
  return -(a - b).norm();
}

StageOneLoss stage_one_loss(const Vector& s, int true_class, const Matrix& classes,
                            bool with_grads, bool legacy_sign) {
  if (classes.rows() == 0) throw Error("stage-one loss needs at least one class");
  if (true_class < 0 || true_class >= classes.rows())
    throw Error("stage-one loss: true class index out of range");
  if (s.size() != classes.cols())
    throw Error("stage-one loss: dimension mismatch");

  const double sign = legacy_sign ? 1.0 : -1.0;
  const Eigen::Index c = classes.rows();
  Vector dist(c);
  for (Eigen::Index j = 0; j < c; ++j) dist[j] = (s - classes.row(j).transpose()).norm();
  Vector logits = sign * dist;

  const double max_logit = logits.maxCoeff();
  Vector shifted = (logits.array() - max_logit).exp();
  const double denom = shifted.sum();

  StageOneLoss out;
  out.value = -(logits[true_class] - max_logit) + std::log(denom);

  if (with_grads) {
    Vector p = shifted / denom;
    out.grad_input = Vector::Zero(s.size());
    out.grad_classes = Matrix::Zero(c, s.size());
    for (Eigen::Index j = 0; j < c; ++j) {
      const double coeff = p[j] - (j == true_class ? 1.0 : 0.0);
      if (dist[j] > 0.0) {
        // logit_j = sign·dist_j, so d logit_j / d s = sign·(s − φ_j)/dist_j.
        const Vector dir = sign * (s - classes.row(j).transpose()) / dist[j];
        out.grad_input += coeff * dir;
        out.grad_classes.row(j) = (-coeff * dir).transpose();
      }
    }
  }
  return out;
}

StageTwoLoss stage_two_loss(const Vector& s_hat, const Vector& s_clean,
                            const Vector& phi_y, double lambda, bool with_grads) {
  if (s_hat.size() != s_clean.size() || s_hat.size() != phi_y.size())
    throw Error("stage-two loss: dimension mismatch");
  if (lambda < 0.0) throw Error("stage-two loss: lambda must be non-negative");

  StageTwoLoss out;
  const Vector r = s_hat - s_clean;
  const Vector a = s_hat - phi_y;
  out.recovery = r.squaredNorm();
  out.alignment = a.squaredNorm();
  out.value = out.recovery + lambda * out.alignment;
  if (with_grads) out.grad_input = 2.0 * r + 2.0 * lambda * a;
  return out;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  if (lr < 0.0) throw Error("learning rate must be non-negative");
}

void AdamOptimizer::step(const std::vector<ParamView>& params,
                         const std::vector<ParamView>& grads) {
  if (params.size() != grads.size())
    throw Error("optimizer: parameter/gradient tensor count mismatch");
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.push_back(Vector::Zero(p.size));
      v_.push_back(Vector::Zero(p.size));
    }
  }
  if (m_.size() != params.size())
    throw Error("optimizer: parameter count changed between steps");

  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, step_);
  const double bc2 = 1.0 - std::pow(beta2_, step_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const auto& g = grads[i];
    if (p.size != g.size)
      throw Error("optimizer: tensor shape mismatch at index " + std::to_string(i));
    Eigen::Map<Vector> param(p.data, p.size);
    Eigen::Map<const Vector> grad(g.data, g.size);
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
    v_[i] = beta2_ * v_[i].array().matrix() +
            (1.0 - beta2_) * grad.array().square().matrix();
    param.array() -= lr_ * (m_[i].array() / bc1) /
                     ((v_[i].array() / bc2).sqrt() + epsilon_);
  }
}

double SnrPolicy::sample_db(Rng& rng) const {
  if (kind == Kind::fixed) return lo_db;
  return rng.uniform(lo_db, hi_db);
}

std::string SnrPolicy::to_string() const {
  std::ostringstream ss;
  if (kind == Kind::fixed) {
    ss << "fixed:" << lo_db;
  } else {
    ss << "uniform:" << lo_db << ":" << hi_db;
  }
  return ss.str();
}

SnrPolicy SnrPolicy::parse(const std::string& text) {
  SnrPolicy p;
  auto fail = [&] { throw Error("bad SNR policy (want fixed:<dB> or uniform:<lo>:<hi>): " + text); };
  auto colon = text.find(':');
  if (colon == std::string::npos) fail();
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  try {
    if (kind == "fixed") {
      p.kind = Kind::fixed;
      std::size_t pos = 0;
      p.lo_db = std::stod(rest, &pos);
      p.hi_db = p.lo_db;
      if (pos != rest.size()) fail();
    } else if (kind == "uniform") {
      p.kind = Kind::uniform;
      auto second = rest.find(':');
      if (second == std::string::npos) fail();
      std::size_t pos = 0;
      p.lo_db = std::stod(rest.substr(0, second), &pos);
      if (pos != second) fail();
      p.hi_db = std::stod(rest.substr(second + 1), &pos);
      if (pos != rest.size() - second - 1) fail();
      if (p.hi_db < p.lo_db) fail();
    } else {
      fail();
    }
  } catch (const std::invalid_argument&) {
    fail();
  } catch (const std::out_of_range&) {
    fail();
  }
  return p;
}

void TrainConfig::validate() const {
  if (lr < 0.0) throw Error("learning rate must be non-negative");
  if (lambda < 0.0) throw Error("lambda must be non-negative");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (epochs < 0) throw Error("epoch count must be non-negative");
}

namespace {

std::vector<int> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(static_cast<int>(i) + 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

std::vector<ParamView> concat_views(std::vector<ParamView> a,
                                    const std::vector<ParamView>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

StageOneResult train_stage_one(const FeatureDataset& train, const LabelMap& labels,
                               const BuiltGraph& seen, GcnModel& gcn,
                               Mlp& semantic_encoder, const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw Error("stage one: training dataset is empty");
  if (train.feature_dim() != semantic_encoder.in_dim())
    throw Error("stage one: feature dim does not match semantic encoder");
  if (semantic_encoder.out_dim() != gcn.layers().back().out_dim())
    throw Error("stage one: encoder and GCN output dimensions differ");

  const auto& g = seen.graph;
  const auto category_labels = g.category_labels();
  const auto n_classes = static_cast<Eigen::Index>(category_labels.size());

  // Dataset label -> position in the seen category list (which is
  // label-sorted, like everything else).
  std::vector<int> class_of_sample(static_cast<std::size_t>(train.size()));
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    const auto& label = labels.label(train.label_ids[static_cast<std::size_t>(i)]);
    auto it = std::lower_bound(category_labels.begin(), category_labels.end(), label);
    if (it == category_labels.end() || *it != label)
      throw Error("stage one: sample label '" + label + "' is not a seen category");
    class_of_sample[static_cast<std::size_t>(i)] =
        static_cast<int>(it - category_labels.begin());
  }

  AdamOptimizer adam(cfg.lr);
  auto params = concat_views(semantic_encoder.param_views(), gcn.param_views());
  Rng shuffle_rng = subrng(cfg.seed, "stage1_shuffle");
  const EdgeWeightMatrix* agg_weights =
      cfg.weighted_aggregation ? &seen.weights : nullptr;

  const Eigen::Index n = train.size();
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  StageOneResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n, shuffle_rng);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index b = std::min(batch, n - start);

      std::vector<GcnLayerCache> gcn_cache;
      const Matrix node_out =
          gcn.forward(g, seen.features, &gcn_cache, agg_weights);
      Matrix phi(n_classes, node_out.cols());
      for (Eigen::Index c = 0; c < n_classes; ++c)
        phi.row(c) = node_out.row(g.category_ids[static_cast<std::size_t>(c)]);

      Matrix x_batch(b, train.feature_dim());
      for (Eigen::Index r = 0; r < b; ++r)
        x_batch.row(r) = train.features.row(order[static_cast<std::size_t>(start + r)]);

      MlpCache enc_cache;
      const Matrix s_batch = semantic_encoder.forward(x_batch, &enc_cache);

      Matrix grad_s = Matrix::Zero(b, s_batch.cols());
      Matrix grad_phi = Matrix::Zero(n_classes, s_batch.cols());
      const double inv_b = 1.0 / static_cast<double>(b);
      for (Eigen::Index r = 0; r < b; ++r) {
        const int cls = class_of_sample[static_cast<std::size_t>(
            order[static_cast<std::size_t>(start + r)])];
        const auto res = stage_one_loss(s_batch.row(r).transpose(), cls, phi,
                                        true, cfg.legacy_sim_sign);
        loss_sum += res.value;
        grad_s.row(r) = res.grad_input.transpose() * inv_b;
        grad_phi += res.grad_classes * inv_b;
      }

      Matrix node_grad = Matrix::Zero(node_out.rows(), node_out.cols());
      for (Eigen::Index c = 0; c < n_classes; ++c)
        node_grad.row(g.category_ids[static_cast<std::size_t>(c)]) = grad_phi.row(c);

      auto enc_grads = semantic_encoder.backward(enc_cache, grad_s);
      auto gcn_grads = gcn.backward(g, gcn_cache, node_grad, agg_weights);
      adam.step(params, concat_views(enc_grads.param_views(), gcn_grads.param_views()));
    }
    result.epoch_mean_loss.push_back(loss_sum / static_cast<double>(n));
  }

  // Final training top-1 over the seen classes.
  const Matrix node_out = gcn.forward(g, seen.features, nullptr, agg_weights);
  Matrix phi(n_classes, node_out.cols());
  for (Eigen::Index c = 0; c < n_classes; ++c)
    phi.row(c) = node_out.row(g.category_ids[static_cast<std::size_t>(c)]);
  const Matrix s_all = semantic_encoder.forward(train.features);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < n_classes; ++c) {
      const double d = (s_all.row(i) - phi.row(c)).norm();
      if (d < best_dist) {
        best_dist = d;
        best = c;
      }
    }
    if (best == class_of_sample[static_cast<std::size_t>(i)]) ++correct;
  }
  result.final_train_accuracy =
      100.0 * static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

StageTwoResult train_stage_two(const FeatureDataset& train, const LabelMap& labels,
                               const Mlp& frozen_semantic_encoder,
                               const CategoryEmbeddingTable& phi,
                               CodecStack& codec, ChannelConfig::Mode channel_mode,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (channel_mode != ChannelConfig::Mode::analog)
    throw Error("stage two trains through the analog channel only "
                "(the digital chain is not differentiable)");
  if (train.size() == 0) throw Error("stage two: training dataset is empty");

  const Matrix s_clean = frozen_semantic_encoder.forward(train.features);
  const Eigen::Index n = s_clean.rows();

  std::vector<int> phi_row_of_sample(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    phi_row_of_sample[static_cast<std::size_t>(i)] =
        phi.index_of(labels.label(train.label_ids[static_cast<std::size_t>(i)]));
  }

  AdamOptimizer adam(cfg.lr);
  auto params = concat_views(codec.channel_encoder.param_views(),
                             codec.channel_decoder.param_views());
  if (!cfg.freeze_semantic_decoder)
    params = concat_views(std::move(params), codec.semantic_decoder.param_views());

  ChannelConfig channel_cfg;
  channel_cfg.gain = cfg.channel_gain;
  channel_cfg.mode = ChannelConfig::Mode::analog;
  AnalogChannel channel(channel_cfg, derive_seed(cfg.seed, "stage2_channel"));
  Rng snr_rng = subrng(cfg.seed, "stage2_snr");
  Rng shuffle_rng = subrng(cfg.seed, "stage2_shuffle");

  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  StageTwoResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n, shuffle_rng);
    double loss_sum = 0.0, recovery_sum = 0.0, alignment_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index b = std::min(batch, n - start);

      Matrix s_batch(b, s_clean.cols());
      for (Eigen::Index r = 0; r < b; ++r)
        s_batch.row(r) = s_clean.row(order[static_cast<std::size_t>(start + r)]);

      MlpCache ce_cache;
      const Matrix z_raw = codec.channel_encoder.forward(s_batch, &ce_cache);
      const Matrix z = power_normalize(z_raw);

      std::vector<double> sigmas(static_cast<std::size_t>(b));
      for (auto& s : sigmas) s = snr_to_sigma(cfg.snr_policy.sample_db(snr_rng), 1.0);
      const Matrix z_hat = channel.transmit(z, sigmas);

      MlpCache cd_cache, sd_cache;
      const Matrix u = codec.channel_decoder.forward(z_hat, &cd_cache);
      const Matrix s_hat = codec.semantic_decoder.forward(u, &sd_cache);

      Matrix grad_s_hat = Matrix::Zero(b, s_hat.cols());
      const double inv_b = 1.0 / static_cast<double>(b);
      for (Eigen::Index r = 0; r < b; ++r) {
        const int sample = order[static_cast<std::size_t>(start + r)];
        const auto res = stage_two_loss(
            s_hat.row(r).transpose(), s_clean.row(sample).transpose(),
            phi.embeddings()
                .row(phi_row_of_sample[static_cast<std::size_t>(sample)])
                .transpose(),
            cfg.lambda);
        loss_sum += res.value;
        recovery_sum += res.recovery;
        alignment_sum += res.alignment;
        grad_s_hat.row(r) = res.grad_input.transpose() * inv_b;
      }

      auto sd_grads = codec.semantic_decoder.backward(sd_cache, grad_s_hat);
      auto cd_grads = codec.channel_decoder.backward(cd_cache, sd_grads.input);
      const Matrix grad_z = cfg.channel_gain * cd_grads.input;
      const Matrix grad_z_raw = power_normalize_backward(z_raw, grad_z);
      auto ce_grads = codec.channel_encoder.backward(ce_cache, grad_z_raw);

      auto grad_views = concat_views(ce_grads.param_views(), cd_grads.param_views());
      if (!cfg.freeze_semantic_decoder)
        grad_views = concat_views(std::move(grad_views), sd_grads.param_views());
      adam.step(params, grad_views);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.epoch_mean_loss.push_back(loss_sum * inv_n);
    result.epoch_mean_recovery.push_back(recovery_sum * inv_n);
    result.epoch_mean_alignment.push_back(alignment_sum * inv_n);
  }

  const Matrix z_final = channel_encode(codec, s_clean);
  const double mean = z_final.mean();
  result.symbol_std =
      std::sqrt((z_final.array() - mean).square().sum() /
                static_cast<double>(z_final.size()));
  return result;
}

namespace {

constexpr char kCheckpointMagic[8] = {'K', 'G', 'S', 'C', 'C', 'K', '0', '1'};

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

Matrix read_matrix(std::istream& in) {
  const auto rows = static_cast<Eigen::Index>(read_u32(in));
  const auto cols = static_cast<Eigen::Index>(read_u32(in));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_f64(in);
  return m;
}

void write_vector(std::ostream& out, const Vector& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v[i]);
}

Vector read_vector(std::istream& in) {
  const auto n = static_cast<Eigen::Index>(read_u32(in));
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_f64(in);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error("unexpected end of checkpoint");
  return s;
}

void write_mlp(std::ostream& out, const Mlp& mlp) {
  write_u32(out, static_cast<std::uint32_t>(mlp.layers().size()));
  for (const auto& layer : mlp.layers()) {
    out.put(layer.relu ? 1 : 0);
    write_matrix(out, layer.weight);
    write_vector(out, layer.bias);
  }
}

Mlp read_mlp(std::istream& in) {
  const auto n_layers = read_u32(in);
  std::vector<AffineLayer> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    AffineLayer layer;
    layer.relu = in.get() == 1;
    layer.weight = read_matrix(in);
    layer.bias = read_vector(in);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

}  // namespace

void Checkpoint::save(std::ostream& out) const {
  std::ostringstream buf(std::ios::binary);
  buf.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(buf, kVersion);
  write_u32(buf, static_cast<std::uint32_t>(stage));

  write_u32(buf, static_cast<std::uint32_t>(gcn.layers().size()));
  for (const auto& layer : gcn.layers()) {
    write_f64(buf, layer.epsilon);
    write_matrix(buf, layer.weight);
    buf.put(layer.residual_proj ? 1 : 0);
    if (layer.residual_proj) write_matrix(buf, *layer.residual_proj);
    write_vector(buf, layer.gamma);
    write_vector(buf, layer.eta);
  }

  write_mlp(buf, codec.semantic_encoder);
  write_mlp(buf, codec.channel_encoder);
  write_mlp(buf, codec.channel_decoder);
  write_mlp(buf, codec.semantic_decoder);

  write_u32(buf, static_cast<std::uint32_t>(embeddings.size()));
  write_u32(buf, static_cast<std::uint32_t>(embeddings.dim()));
  for (int i = 0; i < embeddings.size(); ++i) {
    write_string(buf, embeddings.label(i));
    buf.put(embeddings.is_unseen(i) ? 1 : 0);
    for (Eigen::Index j = 0; j < embeddings.dim(); ++j)
      write_f64(buf, embeddings.embeddings()(i, j));
  }

  write_f64(buf, symbol_std);

  write_u32(buf, static_cast<std::uint32_t>(config_echo.size()));
  for (const auto& [k, v] : config_echo) {
    write_string(buf, k);
    write_string(buf, v);
  }

  const std::string payload = buf.str();
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  write_u64(out, fnv1a64(payload.data(), payload.size()));
}

void Checkpoint::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  save(out);
}

Checkpoint Checkpoint::load(std::istream& in) {
  std::string all(std::istreambuf_iterator<char>(in), {});
  if (all.size() < sizeof(kCheckpointMagic) + 8)
    throw Error("checkpoint is truncated");
  const std::string payload = all.substr(0, all.size() - 8);
  std::istringstream tail(all.substr(all.size() - 8), std::ios::binary);
  const std::uint64_t stored = read_u64(tail);
  if (stored != fnv1a64(payload.data(), payload.size()))
    throw Error("checkpoint checksum mismatch (file corrupted)");

  std::istringstream buf(payload, std::ios::binary);
  char magic[8];
  buf.read(magic, sizeof(magic));
  if (!buf || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw Error("not a kgsc checkpoint (bad magic)");
  const std::uint32_t version = read_u32(buf);
  if (version != kVersion)
    throw Error("unsupported checkpoint version: " + std::to_string(version));

  Checkpoint ck;
  ck.stage = static_cast<int>(read_u32(buf));

  const auto n_layers = read_u32(buf);
  std::vector<GcnLayerParams> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    GcnLayerParams p;
    p.epsilon = read_f64(buf);
    p.weight = read_matrix(buf);
    if (buf.get() == 1) p.residual_proj = read_matrix(buf);
    p.gamma = read_vector(buf);
    p.eta = read_vector(buf);
    layers.push_back(std::move(p));
  }
  ck.gcn = GcnModel(std::move(layers));

  ck.codec.semantic_encoder = read_mlp(buf);
  ck.codec.channel_encoder = read_mlp(buf);
  ck.codec.channel_decoder = read_mlp(buf);
  ck.codec.semantic_decoder = read_mlp(buf);

  const auto n_embeddings = read_u32(buf);
  const auto dim = static_cast<Eigen::Index>(read_u32(buf));
  std::vector<std::string> labels;
  std::vector<bool> unseen;
  Matrix rows(static_cast<Eigen::Index>(n_embeddings), dim);
  for (std::uint32_t i = 0; i < n_embeddings; ++i) {
    labels.push_back(read_string(buf));
    unseen.push_back(buf.get() == 1);
    for (Eigen::Index j = 0; j < dim; ++j)
      rows(static_cast<Eigen::Index>(i), j) = read_f64(buf);
  }
  ck.embeddings = CategoryEmbeddingTable(std::move(labels), std::move(unseen),
                                         std::move(rows));

  ck.symbol_std = read_f64(buf);

  const auto n_config = read_u32(buf);
  for (std::uint32_t i = 0; i < n_config; ++i) {
    std::string k = read_string(buf);
    std::string v = read_string(buf);
    ck.config_echo.emplace(std::move(k), std::move(v));
  }
  return ck;
}

Checkpoint Checkpoint::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return load(in);
}

}  // namespace kgsc
