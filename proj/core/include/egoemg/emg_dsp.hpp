#pragma once

#include <Eigen/Core>
#include <compare>
#include <iosfwd>
#include <memory>
#include <vector>

namespace egoemg {

inline constexpr int kEmgChannels = 16;  // 8 per wrist: left 0-7, right 8-15
inline constexpr double kEmgSampleRate = 2000.0;

enum class SignalKind { kRaw, kFiltered };

/// Samples are [time x channel] in mV, one column per channel.
struct EmgWindow {
  Eigen::MatrixXd samples;
  double sample_rate = kEmgSampleRate;
  SignalKind kind = SignalKind::kRaw;

  Eigen::Index length() const { return samples.rows(); }
  /// Throws kShapeMismatch unless there are exactly 16 channels, and
  /// kInvalidInput for a non-positive rate.
  void validate() const;
};

/// Band shape of the cleaning mask, all in Hz. Notches are zero within
/// `notch_zero_half_width` of each centre and rise along a raised cosine to
/// unity at `notch_shoulder_half_width`.
struct FilterShape {
  std::vector<double> notch_centres{50.0, 100.0};
  double notch_zero_half_width = 1.0;
  double notch_shoulder_half_width = 3.0;
  double highpass_start = 17.0;
  double highpass_end = 23.0;
  double lowpass_start = 847.0;
  double lowpass_end = 900.0;
  double max_bin_spacing = 1.0;

  void validate() const;
  auto operator<=>(const FilterShape&) const = default;
};

/// Continuous gain of the mask at frequency `hz` (>= 0).
double mask_gain(double hz, const FilterShape& shape = {});

/// Gains for every bin of an n_fft-point DFT. gains[k] == gains[n_fft - k].
struct FilterMask {
  std::vector<double> gains;
  int n_fft = 0;
  double sample_rate = 0.0;

  double bin_frequency(int k) const { return k * sample_rate / n_fft; }
};

/// Throws kConfiguration when n_fft < 64, the rate is not above 1800 Hz, or
/// the bins are too coarse to resolve the notches.
FilterMask build_filter_mask(int n_fft, double sample_rate, const FilterShape& shape = {});

/// Memoized build_filter_mask; safe to call from any thread.
std::shared_ptr<const FilterMask> cached_filter_mask(int n_fft, double sample_rate,
                                                     const FilterShape& shape = {});

/// Transform length used for a window of `length` samples: the smallest
/// 2,3,5-smooth length at least max(length, 4096). The window is zero-padded
/// to it.
int filter_fft_length(Eigen::Index length);

/// Per channel: remove the mean, apply the mask in the frequency domain,
/// return to the time domain. Throws kInvalidInput for a filtered input or
/// non-finite samples.
EmgWindow filter_emg(const EmgWindow& window, const FilterShape& shape = {});

/// Two-column CSV (frequency_hz,gain) over bins 0..n_fft/2.
void write_mask_csv(std::ostream& out, const FilterMask& mask);

}  // namespace egoemg
