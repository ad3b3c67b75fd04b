#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kgsc/hash.hpp"

namespace kgsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Flat view over one trainable tensor's storage. The optimizer and the
/// checkpoint writer address parameters through ordered lists of these.
struct ParamView {
  double* data = nullptr;
  Eigen::Index size = 0;
};

struct ConstParamView {
  const double* data = nullptr;
  Eigen::Index size = 0;
};

inline ParamView view_of(Matrix& m) { return {m.data(), m.size()}; }
inline ParamView view_of(Vector& v) { return {v.data(), v.size()}; }
inline ConstParamView view_of(const Matrix& m) { return {m.data(), m.size()}; }
inline ConstParamView view_of(const Vector& v) { return {v.data(), v.size()}; }

inline std::uint64_t checksum(const std::vector<ConstParamView>& views) {
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& v : views) {
    h = fnv1a64(v.data, static_cast<std::size_t>(v.size) * sizeof(double), h);
  }
  return h;
}

}  // namespace kgsc
