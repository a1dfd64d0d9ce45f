#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/FFT>

#include "egoemg/augment.hpp"
#include "egoemg/error.hpp"
#include "egoemg/rng.hpp"

namespace egoemg {

namespace {

enum EmgStream : std::uint32_t {
  kDropoutStream = 1,
  kMaskStream = 2,
  kNoiseStream = 3,
  kJitterStream = 4,
};

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void EmgAugConfig::validate() const {
  if (!probability(channel_dropout_p) || !probability(noise_p)) {
    fail(ErrorKind::kConfiguration, "EMG augmentation probabilities must lie in [0, 1]");
  }
  if (n_freq_masks < 0 || max_mask_bins < 0) fail(ErrorKind::kConfiguration, "mask counts must be non-negative");
  if (!(noise_snr_db_min <= noise_snr_db_max)) fail(ErrorKind::kConfiguration, "SNR range must be ordered");
  if (!(jitter_ms >= 0.0)) fail(ErrorKind::kConfiguration, "jitter must be non-negative");
}

EmgAugConfig EmgAugConfig::disabled() {
  EmgAugConfig c;
  c.channel_dropout_p = 0.0;
  c.n_freq_masks = 0;
  c.noise_p = 0.0;
  c.jitter_ms = 0.0;
  return c;
}

void apply_frequency_masks(std::vector<std::complex<double>>& spectrum, const std::vector<FrequencyMask>& masks) {
  const auto n = static_cast<int>(spectrum.size());
  for (const FrequencyMask& m : masks) {
    for (int k = m.first; k < m.first + m.width; ++k) {
      if (k < 0 || k > n / 2) continue;
      spectrum[static_cast<std::size_t>(k)] = 0.0;
      if (k > 0) spectrum[static_cast<std::size_t>(n - k)] = 0.0;
    }
  }
}

EmgWindow augment_emg(const EmgWindow& window, std::uint64_t seed, const EmgAugConfig& config,
                      std::uint64_t sample_id, EmgAugTrace* trace) {
  config.validate();
  window.validate();
  EmgAugTrace local;
  EmgAugTrace& t = trace ? *trace : local;
  t = {};
  EmgWindow out = window;
  Eigen::MatrixXd& x = out.samples;
  const Eigen::Index n = x.rows();
  const Eigen::Index channels = x.cols();
  if (n == 0) return out;

  CounterRng dropout_rng(seed, sample_id, kDropoutStream);
  for (Eigen::Index c = 0; c < channels; ++c) {
    if (dropout_rng.bernoulli(config.channel_dropout_p)) {
      x.col(c).setZero();
      t.dropped_channels.push_back(static_cast<int>(c));
    }
  }

  if (config.n_freq_masks > 0) {
    CounterRng mask_rng(seed, sample_id, kMaskStream);
    const auto bins = static_cast<std::int64_t>(n / 2 + 1);
    bool any = false;
    for (int m = 0; m < config.n_freq_masks; ++m) {
      const std::int64_t width = mask_rng.uniform_int(0, std::min<std::int64_t>(config.max_mask_bins, bins));
      const std::int64_t first = mask_rng.uniform_int(0, bins - width);
      t.masks.push_back({static_cast<int>(first), static_cast<int>(width)});
      any = any || width > 0;
    }
    if (any) {
      Eigen::FFT<double> fft;
      std::vector<double> column(static_cast<std::size_t>(n));
      std::vector<std::complex<double>> spectrum;
      std::vector<std::complex<double>> restored;
      for (Eigen::Index c = 0; c < channels; ++c) {
        Eigen::Map<Eigen::VectorXd>(column.data(), n) = x.col(c);
        fft.fwd(spectrum, column);
        apply_frequency_masks(spectrum, t.masks);
        fft.inv(restored, spectrum);
        for (Eigen::Index i = 0; i < n; ++i) x(i, c) = restored[static_cast<std::size_t>(i)].real();
      }
    }
  }

  CounterRng noise_rng(seed, sample_id, kNoiseStream);
  if (noise_rng.bernoulli(config.noise_p)) {
    t.noise_applied = true;
    t.snr_db = noise_rng.uniform(config.noise_snr_db_min, config.noise_snr_db_max);
    const double ratio = std::pow(10.0, t.snr_db / 10.0);
    for (Eigen::Index c = 0; c < channels; ++c) {
      const double power = x.col(c).squaredNorm() / static_cast<double>(n);
      const double sigma = std::sqrt(power / ratio);
      for (Eigen::Index i = 0; i < n; ++i) x(i, c) += sigma * noise_rng.normal();
    }
  }

  const auto max_shift = static_cast<std::int64_t>(std::lround(config.jitter_ms * window.sample_rate / 1000.0));
  if (max_shift > 0) {
    CounterRng jitter_rng(seed, sample_id, kJitterStream);
    t.shift_samples = static_cast<int>(jitter_rng.uniform_int(-max_shift, max_shift));
    if (t.shift_samples != 0) {
      const Eigen::MatrixXd shifted = x;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = std::clamp<Eigen::Index>(i - t.shift_samples, 0, n - 1);
        x.row(i) = shifted.row(src);
      }
    }
  }
  return out;
}

}  // namespace egoemg
