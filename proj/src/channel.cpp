#include "kgsc/channel.hpp"

#include <cmath>
#include <limits>

#include "kgsc/errors.hpp"

namespace kgsc {

void ChannelConfig::validate() const {
  if (gain < 0.0 || gain > 1.0)
    throw Error("channel gain must lie in [0, 1]");
}

ChannelConfig::Mode channel_mode_from_string(const std::string& name) {
  if (name == "analog") return ChannelConfig::Mode::analog;
  if (name == "digital16qam") return ChannelConfig::Mode::digital16qam;
  throw Error("unknown channel mode: " + name);
}

std::string to_string(ChannelConfig::Mode mode) {
  return mode == ChannelConfig::Mode::analog ? "analog" : "digital16qam";
}

double snr_to_sigma(double snr_db, double signal_power) {
  if (!(signal_power > 0.0))
    throw Error("signal power must be positive");
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

AnalogChannel::AnalogChannel(const ChannelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), sigma_(snr_to_sigma(cfg.snr_db, 1.0)), rng_(seed) {
  cfg_.validate();
}

Vector AnalogChannel::transmit(const Vector& z) {
  Vector out = cfg_.gain * z;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] += sigma_ * rng_.gaussian();
  return out;
}

Matrix AnalogChannel::transmit(const Matrix& z) {
  Matrix out = cfg_.gain * z;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) += sigma_ * rng_.gaussian();
  return out;
}

Matrix AnalogChannel::transmit(const Matrix& z,
                               const std::vector<double>& sigma_per_row) {
  if (static_cast<Eigen::Index>(sigma_per_row.size()) != z.rows())
    throw Error("per-row sigma count does not match symbol rows");
  Matrix out = cfg_.gain * z;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) += sigma_per_row[static_cast<std::size_t>(i)] * rng_.gaussian();
  return out;
}

void QamConfig::validate() const {
  if (bits_per_component < 2 || bits_per_component % 2 != 0 ||
      bits_per_component > 30)
    throw Error("bits_per_component must be a small even integer");
  if (!(clip_lo < clip_hi)) throw Error("quantizer clip range is empty");
}

std::vector<std::uint8_t> quantize(const Vector& z, const QamConfig& q) {
  q.validate();
  const double step = q.step();
  const int levels = q.levels();
  std::vector<std::uint8_t> bits;
  bits.reserve(static_cast<std::size_t>(z.size()) *
               static_cast<std::size_t>(q.bits_per_component));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    int idx = static_cast<int>(std::floor((z[i] - q.clip_lo) / step));
    idx = std::clamp(idx, 0, levels - 1);
    for (int b = q.bits_per_component - 1; b >= 0; --b)
      bits.push_back(static_cast<std::uint8_t>((idx >> b) & 1));
  }
  return bits;
}

Vector dequantize(std::span<const std::uint8_t> bits, const QamConfig& q) {
  q.validate();
  if (bits.size() % static_cast<std::size_t>(q.bits_per_component) != 0)
    throw Error("bit count is not a multiple of bits_per_component");
  const double step = q.step();
  const auto n = static_cast<Eigen::Index>(
      bits.size() / static_cast<std::size_t>(q.bits_per_component));
  Vector out(n);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int idx = 0;
    for (int b = 0; b < q.bits_per_component; ++b)
      idx = (idx << 1) | bits[pos++];
    out[i] = q.clip_lo + (idx + 0.5) * step;
  }
  return out;
}

namespace {

// Gray code per axis: bit pair -> amplitude level in {-3,-1,+1,+3}/sqrt(10).
constexpr std::array<double, 4> kGrayLevels = {-3.0, -1.0, 1.0, 3.0};
constexpr std::array<int, 4> kGrayFromIndex = {0b00, 0b01, 0b11, 0b10};

// kQamScale normalizes the square constellation to unit average energy:
// per-axis mean of {9,1,1,9}/4 = 5, two axes -> 10.
const double kQamScale = 1.0 / std::sqrt(10.0);

int axis_index_from_bits(std::uint8_t hi, std::uint8_t lo) {
  const int gray = (hi << 1) | lo;
  for (int i = 0; i < 4; ++i)
    if (kGrayFromIndex[static_cast<std::size_t>(i)] == gray) return i;
  return 0;  // unreachable for 0/1 bits
}

int nearest_axis_index(double x) {
  // Decision thresholds sit halfway between scaled levels.
  const double t = x / kQamScale;
  if (t < -2.0) return 0;
  if (t < 0.0) return 1;
  if (t < 2.0) return 2;
  return 3;
}

}  // namespace

const std::array<std::complex<double>, 16>& qam16_constellation() {
  static const std::array<std::complex<double>, 16> points = [] {
    std::array<std::complex<double>, 16> pts;
    for (int i = 0; i < 16; ++i) {
      const int i_axis = axis_index_from_bits((i >> 3) & 1, (i >> 2) & 1);
      const int q_axis = axis_index_from_bits((i >> 1) & 1, i & 1);
      pts[static_cast<std::size_t>(i)] = {
          kGrayLevels[static_cast<std::size_t>(i_axis)] * kQamScale,
          kGrayLevels[static_cast<std::size_t>(q_axis)] * kQamScale};
    }
    return pts;
  }();
  return points;
}

std::vector<std::complex<double>> qam16_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 4 != 0)
    throw Error("16-QAM needs a bit count divisible by 4");
  const auto& constellation = qam16_constellation();
  std::vector<std::complex<double>> symbols;
  symbols.reserve(bits.size() / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    const int word = (bits[i] << 3) | (bits[i + 1] << 2) | (bits[i + 2] << 1) |
                     bits[i + 3];
    symbols.push_back(constellation[static_cast<std::size_t>(word)]);
  }
  return symbols;
}

std::vector<std::uint8_t> qam16_demodulate(
    std::span<const std::complex<double>> symbols) {
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * 4);
  for (const auto& s : symbols) {
    const int gi = kGrayFromIndex[static_cast<std::size_t>(nearest_axis_index(s.real()))];
    const int gq = kGrayFromIndex[static_cast<std::size_t>(nearest_axis_index(s.imag()))];
    bits.push_back(static_cast<std::uint8_t>((gi >> 1) & 1));
    bits.push_back(static_cast<std::uint8_t>(gi & 1));
    bits.push_back(static_cast<std::uint8_t>((gq >> 1) & 1));
    bits.push_back(static_cast<std::uint8_t>(gq & 1));
  }
  return bits;
}

DigitalChannel::DigitalChannel(const ChannelConfig& cfg, const QamConfig& qam,
                               std::uint64_t seed)
    : cfg_(cfg), qam_(qam), rng_(seed) {
  cfg_.validate();
  qam_.validate();
  // snr_db is per-symbol Es/N0 with unit-energy symbols; noise is split
  // evenly across the two axes.
  const double n0 = std::isinf(cfg.snr_db) && cfg.snr_db > 0
                        ? 0.0
                        : std::pow(10.0, -cfg.snr_db / 10.0);
  noise_sigma_per_axis_ = std::sqrt(n0 / 2.0);
}

Vector DigitalChannel::transmit(const Vector& z) {
  auto bits = quantize(z, qam_);
  auto symbols = qam16_modulate(bits);
  for (auto& s : symbols) {
    s = cfg_.gain * s + std::complex<double>(noise_sigma_per_axis_ * rng_.gaussian(),
                                             noise_sigma_per_axis_ * rng_.gaussian());
  }
  auto received_bits = qam16_demodulate(symbols);
  return dequantize(received_bits, qam_);
}

Matrix DigitalChannel::transmit(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    out.row(i) = transmit(Vector(z.row(i).transpose())).transpose();
  return out;
}

}  // namespace kgsc
