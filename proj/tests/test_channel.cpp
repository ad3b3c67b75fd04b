#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>

#include "kgsc/channel.hpp"
#include "kgsc/errors.hpp"

using namespace kgsc;

namespace {

// Textbook closed-form SER for Gray-coded square 16-QAM at a given per-symbol
// Es/N0 (linear): the independent per-axis error is 2(1-1/sqrt(M)) Q(...)
// and a symbol survives only if both axes do.
double qam16_ser_closed_form(double es_n0_linear) {
  const double q_arg = std::sqrt(0.2 * es_n0_linear);  // 3/(M-1) = 0.2
  const double q = 0.5 * std::erfc(q_arg / std::sqrt(2.0));
  const double p_axis = 2.0 * (1.0 - 0.25) * q;
  return 1.0 - (1.0 - p_axis) * (1.0 - p_axis);
}

}  // namespace

TEST_CASE("snr_to_sigma definition") {
  CHECK(snr_to_sigma(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(snr_to_sigma(10.0, 1.0) == doctest::Approx(std::pow(10.0, -0.5)));
  CHECK(snr_to_sigma(-10.0, 1.0) == doctest::Approx(std::sqrt(10.0)));
  CHECK(snr_to_sigma(std::numeric_limits<double>::infinity(), 1.0) == 0.0);
  CHECK_THROWS_AS(snr_to_sigma(0.0, 0.0), Error);
  CHECK_THROWS_AS(snr_to_sigma(0.0, -1.0), Error);
}

TEST_CASE("analog channel: exactness at infinite SNR, reproducibility") {
  Rng rng(3);
  Vector z(64);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-2.0, 2.0);

  ChannelConfig cfg;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  cfg.gain = 1.0;
  AnalogChannel noiseless(cfg, 1);
  CHECK(noiseless.transmit(z) == z);

  cfg.snr_db = 0.0;
  AnalogChannel a(cfg, 42), b(cfg, 42), c(cfg, 43);
  const Vector za = a.transmit(z);
  CHECK(za == b.transmit(z));
  CHECK(za != c.transmit(z));
}

TEST_CASE("analog channel noise calibration over 1e6 draws") {
  const int n = 1000000;
  ChannelConfig cfg;
  cfg.snr_db = 0.0;  // sigma = 1
  cfg.gain = 0.0;    // pure noise
  AnalogChannel channel(cfg, 123);
  const Matrix zeros = Matrix::Zero(1000, 1000);
  const Matrix noise = channel.transmit(zeros);
  const double var = noise.array().square().mean();
  CHECK(std::abs(var - 1.0) < 0.02);

  // Empirical SNR within 0.1 dB of the configured value.
  ChannelConfig cfg2;
  cfg2.snr_db = 5.0;
  cfg2.gain = 1.0;
  AnalogChannel ch2(cfg2, 321);
  Rng rng(77);
  Matrix z(1000, 1000);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.gaussian();
  z /= std::sqrt(z.array().square().mean());  // unit signal power
  const Matrix z_hat = ch2.transmit(z);
  const double noise_power = (z_hat - z).array().square().mean();
  const double signal_power = z.array().square().mean();
  const double snr_emp = 10.0 * std::log10(signal_power / noise_power);
  CHECK(std::abs(snr_emp - 5.0) < 0.1);
  CHECK(static_cast<double>(n) == 1e6);
}

TEST_CASE("quantizer: bin centers, clipping, bounded round-trip error") {
  QamConfig q;  // 8 bits on [-4, 4]
  const double step = q.step();
  CHECK(step == doctest::Approx(8.0 / 256.0));

  Vector centers(3);
  centers << q.clip_lo + 0.5 * step, q.clip_lo + 10.5 * step, q.clip_hi - 0.5 * step;
  const auto bits = quantize(centers, q);
  const Vector back = dequantize(bits, q);
  CHECK((back - centers).cwiseAbs().maxCoeff() < 1e-12);

  Vector above(1);
  above << q.clip_hi + 3.0;
  CHECK(dequantize(quantize(above, q), q)[0] ==
        doctest::Approx(q.clip_hi - 0.5 * step));

  Rng rng(5);
  Vector z(512);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-4.0, 4.0);
  const Vector rt = dequantize(quantize(z, q), q);
  CHECK((rt - z).cwiseAbs().maxCoeff() <= 8.0 / 256.0 / 2.0 + 1e-12);
}

TEST_CASE("16-QAM constellation: unit energy and Gray neighbors") {
  const auto& points = qam16_constellation();
  double energy = 0.0;
  for (const auto& p : points) energy += std::norm(p);
  CHECK(std::abs(energy / 16.0 - 1.0) < 1e-12);

  // Any two points at the minimum grid spacing differ in exactly one bit.
  const double min_spacing = 2.0 / std::sqrt(10.0);
  int adjacent_pairs = 0;
  for (int a = 0; a < 16; ++a) {
    for (int b = a + 1; b < 16; ++b) {
      const double d = std::abs(points[static_cast<std::size_t>(a)] -
                                points[static_cast<std::size_t>(b)]);
      if (std::abs(d - min_spacing) < 1e-9) {
        ++adjacent_pairs;
        const int diff = a ^ b;
        CHECK(__builtin_popcount(static_cast<unsigned>(diff)) == 1);
      }
    }
  }
  CHECK(adjacent_pairs == 24);  // 4x4 grid: 2 * 4 * 3 horizontal+vertical pairs
}

TEST_CASE("16-QAM noiseless round trip is bit exact") {
  Rng rng(9);
  std::vector<std::uint8_t> bits(10000);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.uniform_int(2));
  const auto symbols = qam16_modulate(bits);
  CHECK(symbols.size() == bits.size() / 4);
  CHECK(qam16_demodulate(symbols) == bits);

  std::vector<std::uint8_t> bad(6, 0);
  CHECK_THROWS_AS(qam16_modulate(bad), Error);
}

TEST_CASE("Monte-Carlo 16-QAM SER matches the closed form at 10 dB") {
  const double snr_db = 10.0;
  const double n0 = std::pow(10.0, -snr_db / 10.0);
  const double sigma_axis = std::sqrt(n0 / 2.0);

  Rng rng(20240609);
  const int n_symbols = 1000000;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_symbols) * 4);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.uniform_int(2));
  auto symbols = qam16_modulate(bits);
  const auto clean = symbols;
  for (auto& s : symbols)
    s += std::complex<double>(sigma_axis * rng.gaussian(),
                              sigma_axis * rng.gaussian());
  const auto decided_bits = qam16_demodulate(symbols);
  const auto decided = qam16_modulate(decided_bits);

  int errors = 0;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (decided[i] != clean[i]) ++errors;
  const double ser = static_cast<double>(errors) / n_symbols;
  const double expect = qam16_ser_closed_form(std::pow(10.0, snr_db / 10.0));
  CHECK(std::abs(ser - expect) / expect < 0.10);
}

TEST_CASE("digital channel: grid outputs, exactness at high SNR, monotone MSE") {
  Rng rng(12);
  Vector z(128);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-3.0, 3.0);

  QamConfig q;
  ChannelConfig cfg;
  cfg.mode = ChannelConfig::Mode::digital16qam;
  cfg.snr_db = 300.0;  // noise is vanishingly small vs decision margins
  DigitalChannel clean_channel(cfg, q, 5);
  const Vector clean = clean_channel.transmit(z);
  CHECK(clean == dequantize(quantize(z, q), q));

  cfg.snr_db = -10.0;
  DigitalChannel noisy(cfg, q, 6);
  const Vector low = noisy.transmit(z);
  const double step = q.step();
  for (Eigen::Index i = 0; i < low.size(); ++i) {
    // Every output sits on a dequantizer bin center.
    const double pos = (low[i] - q.clip_lo) / step - 0.5;
    CHECK(std::abs(pos - std::round(pos)) < 1e-9);
  }

  cfg.snr_db = 15.0;
  DigitalChannel mid(cfg, q, 7);
  const Vector high = mid.transmit(z);
  const double mse_low = (low - z).squaredNorm();
  const double mse_high = (high - z).squaredNorm();
  CHECK(mse_low > mse_high);
}
