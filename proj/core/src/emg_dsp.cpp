#include "egoemg/emg_dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <tuple>
#include <unsupported/Eigen/FFT>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

constexpr int kMinPaddedLength = 4096;
constexpr double kImagResidueLimit = 1e-9;

// Raised cosine from 0 at u = 0 to 1 at u = 1.
double rise(double u) { return 0.5 * (1.0 - std::cos(std::numbers::pi * u)); }

bool is_smooth(int n) {
  for (int p : {2, 3, 5}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

}  // namespace

void EmgWindow::validate() const {
  if (samples.cols() != kEmgChannels) {
    fail(ErrorKind::kShapeMismatch,
         "EMG window needs " + std::to_string(kEmgChannels) + " channels, got " +
             std::to_string(samples.cols()));
  }
  if (!(sample_rate > 0.0)) fail(ErrorKind::kInvalidInput, "sample rate must be positive");
}

void FilterShape::validate() const {
  const bool ordered = 0.0 <= highpass_start && highpass_start < highpass_end &&
                       highpass_end <= lowpass_start && lowpass_start < lowpass_end;
  if (!ordered) fail(ErrorKind::kConfiguration, "band edges must be ordered");
  if (!(0.0 <= notch_zero_half_width && notch_zero_half_width < notch_shoulder_half_width)) {
    fail(ErrorKind::kConfiguration, "notch widths must satisfy 0 <= zero < shoulder");
  }
  if (!(max_bin_spacing > 0.0)) fail(ErrorKind::kConfiguration, "bin spacing bound must be positive");
  for (double c : notch_centres) {
    if (!(c > 0.0)) fail(ErrorKind::kConfiguration, "notch centres must be positive");
  }
}

double mask_gain(double hz, const FilterShape& shape) {
  hz = std::abs(hz);
  if (hz <= shape.highpass_start || hz >= shape.lowpass_end) return 0.0;
  double g = 1.0;
  if (hz < shape.highpass_end) {
    g = rise((hz - shape.highpass_start) / (shape.highpass_end - shape.highpass_start));
  } else if (hz > shape.lowpass_start) {
    g = rise((shape.lowpass_end - hz) / (shape.lowpass_end - shape.lowpass_start));
  }
  for (double centre : shape.notch_centres) {
    const double d = std::abs(hz - centre);
    if (d <= shape.notch_zero_half_width) return 0.0;
    if (d < shape.notch_shoulder_half_width) {
      g *= rise((d - shape.notch_zero_half_width) /
                (shape.notch_shoulder_half_width - shape.notch_zero_half_width));
    }
  }
  return g;
}

FilterMask build_filter_mask(int n_fft, double sample_rate, const FilterShape& shape) {
  shape.validate();
  if (n_fft < 64) fail(ErrorKind::kConfiguration, "n_fft must be at least 64");
  if (!(sample_rate > 1800.0)) fail(ErrorKind::kConfiguration, "sample rate must exceed 1800 Hz");
  const double spacing = sample_rate / n_fft;
  if (spacing > shape.max_bin_spacing) {
    fail(ErrorKind::kConfiguration, "n_fft " + std::to_string(n_fft) + " gives " + std::to_string(spacing) +
                                        " Hz bins, too coarse for the notches");
  }
  FilterMask mask;
  mask.n_fft = n_fft;
  mask.sample_rate = sample_rate;
  mask.gains.assign(static_cast<std::size_t>(n_fft), 0.0);
  for (int k = 1; k <= n_fft / 2; ++k) {
    const double g = mask_gain(k * spacing, shape);
    mask.gains[static_cast<std::size_t>(k)] = g;
    mask.gains[static_cast<std::size_t>(n_fft - k)] = g;
  }
  return mask;
}

std::shared_ptr<const FilterMask> cached_filter_mask(int n_fft, double sample_rate, const FilterShape& shape) {
  using Key = std::tuple<int, double, FilterShape>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const FilterMask>> table;
  Key key{n_fft, sample_rate, shape};
  {
    std::lock_guard lock(mutex);
    if (auto it = table.find(key); it != table.end()) return it->second;
  }
  auto mask = std::make_shared<const FilterMask>(build_filter_mask(n_fft, sample_rate, shape));
  std::lock_guard lock(mutex);
  return table.emplace(std::move(key), std::move(mask)).first->second;
}

int filter_fft_length(Eigen::Index length) {
  if (length <= 0) fail(ErrorKind::kLength, "cannot filter an empty window");
  if (length > std::numeric_limits<int>::max()) fail(ErrorKind::kLength, "window too long");
  int n = std::max(static_cast<int>(length), kMinPaddedLength);
  while (!is_smooth(n)) ++n;
  return n;
}

EmgWindow filter_emg(const EmgWindow& window, const FilterShape& shape) {
  window.validate();
  if (window.kind != SignalKind::kRaw) fail(ErrorKind::kInvalidInput, "window is already filtered");
  if (!window.samples.allFinite()) fail(ErrorKind::kInvalidInput, "EMG samples must be finite");

  const Eigen::Index n = window.length();
  const int n_fft = filter_fft_length(n);
  const auto mask = cached_filter_mask(n_fft, window.sample_rate, shape);

  EmgWindow out;
  out.sample_rate = window.sample_rate;
  out.kind = SignalKind::kFiltered;
  out.samples.resize(n, window.samples.cols());

  Eigen::FFT<double> fft;
  std::vector<double> buffer(static_cast<std::size_t>(n_fft));
  std::vector<std::complex<double>> spectrum;
  std::vector<std::complex<double>> restored;
  for (Eigen::Index c = 0; c < window.samples.cols(); ++c) {
    const double mean = window.samples.col(c).mean();
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (Eigen::Index t = 0; t < n; ++t) buffer[static_cast<std::size_t>(t)] = window.samples(t, c) - mean;
    fft.fwd(spectrum, buffer);
    for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= mask->gains[k];
    fft.inv(restored, spectrum);
    for (Eigen::Index t = 0; t < n; ++t) {
      const std::complex<double> v = restored[static_cast<std::size_t>(t)];
      if (std::abs(v.imag()) > kImagResidueLimit) {
        fail(ErrorKind::kDomain, "filtered signal has a non-negligible imaginary part");
      }
      out.samples(t, c) = v.real();
    }
  }
  return out;
}

void write_mask_csv(std::ostream& out, const FilterMask& mask) {
  out << "frequency_hz,gain\n";
  const auto flags = out.flags();
  const auto precision = out.precision(10);
  for (int k = 0; k <= mask.n_fft / 2; ++k) {
    out << mask.bin_frequency(k) << ',' << mask.gains[static_cast<std::size_t>(k)] << '\n';
  }
  out.precision(precision);
  out.flags(flags);
}

}  // namespace egoemg
