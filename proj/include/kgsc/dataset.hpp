#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kgsc/linalg.hpp"

namespace kgsc {

/// id <-> category label <-> seen/unseen flag. Ids are consecutive from 0 in
/// label-sorted order, matching node and embedding-table ordering everywhere
/// else.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::vector<std::string> seen, std::vector<std::string> unseen);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int id) const { return labels_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  int id_of(std::string_view label) const;  // throws Error if unknown
  bool is_unseen(int id) const { return unseen_[static_cast<std::size_t>(id)]; }
  std::vector<std::string> seen_labels() const;
  std::vector<std::string> unseen_labels() const;

  void save(std::ostream& out) const;  // "id\tlabel\tseen|unseen" lines
  void save_file(const std::filesystem::path& path) const;
  static LabelMap load(std::istream& in);
  static LabelMap load_file(const std::filesystem::path& path);

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<bool> unseen_;
};

/// Labeled feature vectors. Binary file layout: magic "KGSCFT01", u32
/// version, u64 sample count, u32 feature dim, then per sample an i32 label
/// id followed by the little-endian f64 components.
struct FeatureDataset {
  Matrix features;             // N x F
  std::vector<int> label_ids;  // one per row

  Eigen::Index size() const { return features.rows(); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static FeatureDataset load(std::istream& in);
  static FeatureDataset load_file(const std::filesystem::path& path);

  /// Row indices per label id, for per-class sampling and accuracy.
  std::vector<std::vector<int>> rows_by_label(int label_count) const;
};

// Little-endian primitives shared by the binary formats.
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_i32(std::ostream& out, std::int32_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
std::int32_t read_i32(std::istream& in);
double read_f64(std::istream& in);

}  // namespace kgsc
