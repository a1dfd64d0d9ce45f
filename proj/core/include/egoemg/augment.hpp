#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

#include "egoemg/emg_dsp.hpp"
#include "egoemg/graph_features.hpp"
#include "egoemg/hand_model.hpp"

namespace egoemg {

// ---- EMG ----------------------------------------------------------------

struct EmgAugConfig {
  double channel_dropout_p = 0.25;
  int n_freq_masks = 3;
  int max_mask_bins = 128;
  double noise_snr_db_min = 25.0;
  double noise_snr_db_max = 35.0;
  double noise_p = 0.5;
  double jitter_ms = 40.0;  // shifts are uniform in +/- this

  void validate() const;
  /// Every operation switched off; augment_emg then returns its input.
  static EmgAugConfig disabled();
};

/// Half-open range of one-sided spectrum bins [first, first + width).
struct FrequencyMask {
  int first = 0;
  int width = 0;
};

struct EmgAugTrace {
  std::vector<int> dropped_channels;
  std::vector<FrequencyMask> masks;
  bool noise_applied = false;
  double snr_db = 0.0;
  int shift_samples = 0;  // output[t] = input[t - shift], edges replicated
};

/// Channel dropout, then frequency masking, then additive noise, then
/// temporal jitter. Each stage draws from its own stream keyed by
/// (seed, sample_id, stage), so disabling one stage leaves the others'
/// draws unchanged.
EmgWindow augment_emg(const EmgWindow& window, std::uint64_t seed, const EmgAugConfig& config = {},
                      std::uint64_t sample_id = 0, EmgAugTrace* trace = nullptr);

/// Zeroes the masked bins of a full-length spectrum together with their
/// mirror images; every other bin is left untouched.
void apply_frequency_masks(std::vector<std::complex<double>>& spectrum, const std::vector<FrequencyMask>& masks);

// ---- markers ------------------------------------------------------------

using MarkerSet = std::array<Vec3, kNumMarkers>;

enum class MarkerOp : int {
  kBoneLength = 0,
  kGlobalScale,
  kSwap,
  kDropout,
  kBlend,
  kGaussianNoise,
  kDrift,
  kSpike,
};
inline constexpr int kNumMarkerOps = 8;
std::string_view to_string(MarkerOp op);

struct MarkerAugConfig {
  double bypass_p = 0.5;
  double bone_scale_pct = 5.0;
  double global_scale_min = 0.6;
  double global_scale_max = 1.4;
  double swap_radius_mm = 15.0;
  double swap_p = 0.3;
  int max_swaps = 3;
  int max_dropout = 3;  // shared by explicit dropout and per-marker noise dropout
  double blend_self_weight = 0.5;
  double gaussian_sigma_mm = 1.0;
  double per_marker_dropout_p = 0.1;
  double drift_mm = 5.0;
  int max_drift_markers = 3;
  double spike_scale_min = 2.0;
  double spike_scale_max = 5.0;
  double spike_p = 0.1;
  std::array<bool, kNumMarkerOps> enabled{true, true, true, true, true, true, true, true};

  void validate() const;
  /// No bypass and only `op` enabled, firing whenever it is probabilistic.
  static MarkerAugConfig only(MarkerOp op);
};

/// One perturbation that was actually applied. `markers` lists the touched
/// markers (pairs for swaps); `values` carries the drawn magnitudes: bone
/// scale factors per tree edge, the global factor, drift lengths in mm, or
/// the spike multiple of the hand scale.
struct AppliedOp {
  MarkerOp op;
  std::vector<int> markers;
  std::vector<double> values;
};

struct MarkerAugResult {
  MarkerSet markers;
  bool bypassed = false;
  std::vector<AppliedOp> applied;
};

/// Structural ops (bone length, global scale about the wrist marker), then
/// identity ops (swap, dropout, blend), then noise ops (Gaussian noise with
/// per-marker dropout, drift, spike). Dropped markers are replaced by the
/// mean of their graph neighbours; noise dropouts are set to the origin.
MarkerAugResult augment_markers(const MarkerSet& markers, const SkeletonGraph& graph, double hand_scale_mm,
                                std::uint64_t seed, const MarkerAugConfig& config = {},
                                std::uint64_t sample_id = 0);

}  // namespace egoemg
