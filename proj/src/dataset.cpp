#include "kgsc/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kgsc/errors.hpp"

namespace kgsc {

namespace {

constexpr char kFeatureMagic[8] = {'K', 'G', 'S', 'C', 'F', 'T', '0', '1'};

void write_bytes_le(std::ostream& out, std::uint64_t v, int n_bytes) {
  char buf[8];
  for (int i = 0; i < n_bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, n_bytes);
}

std::uint64_t read_bytes_le(std::istream& in, int n_bytes) {
  char buf[8];
  in.read(buf, n_bytes);
  if (!in) throw Error("unexpected end of binary stream");
  std::uint64_t v = 0;
  for (int i = 0; i < n_bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_bytes_le(out, v, 4); }
void write_u64(std::ostream& out, std::uint64_t v) { write_bytes_le(out, v, 8); }
void write_i32(std::ostream& out, std::int32_t v) {
  write_bytes_le(out, static_cast<std::uint32_t>(v), 4);
}
void write_f64(std::ostream& out, double v) {
  write_bytes_le(out, std::bit_cast<std::uint64_t>(v), 8);
}

std::uint32_t read_u32(std::istream& in) {
  return static_cast<std::uint32_t>(read_bytes_le(in, 4));
}
std::uint64_t read_u64(std::istream& in) { return read_bytes_le(in, 8); }
std::int32_t read_i32(std::istream& in) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(read_bytes_le(in, 4)));
}
double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_bytes_le(in, 8));
}

LabelMap::LabelMap(std::vector<std::string> seen, std::vector<std::string> unseen) {
  struct Entry {
    std::string label;
    bool unseen;
  };
  std::vector<Entry> entries;
  for (auto& l : seen) entries.push_back({std::move(l), false});
  for (auto& l : unseen) entries.push_back({std::move(l), true});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].label == entries[i - 1].label)
      throw Error("seen and unseen category sets overlap at: " + entries[i].label);
  }
  for (auto& e : entries) {
    labels_.push_back(std::move(e.label));
    unseen_.push_back(e.unseen);
  }
}

int LabelMap::id_of(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label)
    throw Error("unknown category label: " + std::string(label));
  return static_cast<int>(it - labels_.begin());
}

std::vector<std::string> LabelMap::seen_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < size(); ++i)
    if (!unseen_[static_cast<std::size_t>(i)]) out.push_back(labels_[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::string> LabelMap::unseen_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < size(); ++i)
    if (unseen_[static_cast<std::size_t>(i)]) out.push_back(labels_[static_cast<std::size_t>(i)]);
  return out;
}

void LabelMap::save(std::ostream& out) const {
  for (int i = 0; i < size(); ++i) {
    out << i << '\t' << labels_[static_cast<std::size_t>(i)] << '\t'
        << (unseen_[static_cast<std::size_t>(i)] ? "unseen" : "seen") << '\n';
  }
}

void LabelMap::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write label map: " + path.string());
  save(out);
}

LabelMap LabelMap::load(std::istream& in) {
  LabelMap map;
  std::string line;
  std::size_t lineno = 0;
  int expected_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int id;
    std::string label, flag;
    if (!(ss >> id >> label >> flag))
      throw ParseError("label map line is not 'id label seen|unseen'", lineno);
    if (id != expected_id)
      throw ParseError("label ids must be consecutive from 0", lineno);
    if (flag != "seen" && flag != "unseen")
      throw ParseError("label flag must be 'seen' or 'unseen'", lineno);
    map.labels_.push_back(label);
    map.unseen_.push_back(flag == "unseen");
    ++expected_id;
  }
  if (map.labels_.empty()) throw Error("label map is empty");
  if (!std::is_sorted(map.labels_.begin(), map.labels_.end()))
    throw Error("label map must list labels in sorted order");
  return map;
}

LabelMap LabelMap::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label map: " + path.string());
  return load(in);
}

void FeatureDataset::save(std::ostream& out) const {
  if (static_cast<Eigen::Index>(label_ids.size()) != features.rows())
    throw Error("feature dataset has mismatched labels and rows");
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  write_u32(out, 1);
  write_u64(out, static_cast<std::uint64_t>(features.rows()));
  write_u32(out, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    write_i32(out, label_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < features.cols(); ++j) write_f64(out, features(i, j));
  }
}

void FeatureDataset::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path.string());
  save(out);
}

FeatureDataset FeatureDataset::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0)
    throw Error("not a kgsc feature file (bad magic)");
  const std::uint32_t version = read_u32(in);
  if (version != 1) throw Error("unsupported feature file version");
  const std::uint64_t n = read_u64(in);
  const std::uint32_t dim = read_u32(in);
  if (dim == 0) throw Error("feature file has zero dimension");

  FeatureDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  ds.label_ids.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ds.label_ids[i] = read_i32(in);
    for (std::uint32_t j = 0; j < dim; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          read_f64(in);
  }
  return ds;
}

FeatureDataset FeatureDataset::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path.string());
  return load(in);
}

std::vector<std::vector<int>> FeatureDataset::rows_by_label(int label_count) const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(label_count));
  for (Eigen::Index i = 0; i < size(); ++i) {
    const int id = label_ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= label_count)
      throw Error("sample label id out of range: " + std::to_string(id));
    out[static_cast<std::size_t>(id)].push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace kgsc
