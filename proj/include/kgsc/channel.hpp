#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kgsc/linalg.hpp"
#include "kgsc/rng.hpp"

namespace kgsc {

struct ChannelConfig {
  enum class Mode { analog, digital16qam };

  double gain = 1.0;  // h in [0, 1]
  double snr_db = 15.0;
  Mode mode = Mode::analog;

  void validate() const;
};

ChannelConfig::Mode channel_mode_from_string(const std::string& name);
std::string to_string(ChannelConfig::Mode mode);

/// σ = √(signal_power / 10^(snr_db/10)). Positive infinity maps to σ = 0.
double snr_to_sigma(double snr_db, double signal_power);

/// ẑ = h·z + n, n ~ N(0, σ²I) per component, σ derived from snr_db against
/// unit signal power (symbol vectors are power-normalized upstream).
/// Deterministic per (seed, call sequence).
class AnalogChannel {
 public:
  AnalogChannel(const ChannelConfig& cfg, std::uint64_t seed);

  Vector transmit(const Vector& z);
  Matrix transmit(const Matrix& z);  // independent noise on every entry
  /// Per-row noise levels, for per-sample SNR training policies.
  Matrix transmit(const Matrix& z, const std::vector<double>& sigma_per_row);

  const ChannelConfig& config() const { return cfg_; }

 private:
  ChannelConfig cfg_;
  double sigma_;
  Rng rng_;
};

/// Real-vector <-> bit mapping around the 16-QAM modem. The paper fixes the
/// modulation but not this mapping; a clipped uniform mid-rise quantizer is
/// used.
struct QamConfig {
  int bits_per_component = 8;  // even, so components map to whole symbols
  double clip_lo = -4.0;
  double clip_hi = 4.0;

  void validate() const;
  int levels() const { return 1 << bits_per_component; }
  double step() const { return (clip_hi - clip_lo) / levels(); }
};

std::vector<std::uint8_t> quantize(const Vector& z, const QamConfig& q);
Vector dequantize(std::span<const std::uint8_t> bits, const QamConfig& q);

/// Gray-coded square 16-QAM at unit average symbol energy, 4 bits/symbol.
const std::array<std::complex<double>, 16>& qam16_constellation();
std::vector<std::complex<double>> qam16_modulate(std::span<const std::uint8_t> bits);
/// Minimum-distance hard decision.
std::vector<std::uint8_t> qam16_demodulate(std::span<const std::complex<double>> symbols);

/// quantize -> 16-QAM -> complex AWGN at per-symbol Es/N0 = snr_db with gain
/// applied to symbols -> demodulate -> dequantize. Not differentiable; for
/// deployment-mode evaluation only.
class DigitalChannel {
 public:
  DigitalChannel(const ChannelConfig& cfg, const QamConfig& qam, std::uint64_t seed);

  Vector transmit(const Vector& z);
  Matrix transmit(const Matrix& z);

  const QamConfig& qam() const { return qam_; }

 private:
  ChannelConfig cfg_;
  QamConfig qam_;
  double noise_sigma_per_axis_;
  Rng rng_;
};

}  // namespace kgsc
