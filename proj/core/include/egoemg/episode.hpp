#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egoemg/container.hpp"
#include "egoemg/emg_dsp.hpp"
#include "egoemg/hand_model.hpp"
#include "egoemg/occlusion.hpp"

namespace egoemg {

inline constexpr double kPoseRate = 120.0;
inline constexpr int kNumGestures = 60;

enum class GestureFamily { kSingleHand, kSymmetricBimanual, kAsymmetricBimanual };
std::string to_string(GestureFamily family);

/// The 60 gesture labels in vocabulary order.
const std::vector<std::string>& gesture_vocabulary();
bool is_known_gesture(const std::string& label);
/// Throws kInvalidInput for labels outside the vocabulary.
GestureFamily gesture_family(const std::string& label);

/// Timestamps are host-clock milliseconds, strictly increasing.
struct EmgStream {
  Eigen::VectorXd timestamps_ms;
  Eigen::MatrixXd samples;  // [N x 16], mV
  double sample_rate = kEmgSampleRate;
  SignalKind kind = SignalKind::kRaw;

  Eigen::Index length() const { return samples.rows(); }
  /// Copy of samples [offset, offset + length).
  EmgWindow window(Eigen::Index offset, Eigen::Index length) const;
};

struct PoseStream {
  Eigen::VectorXd timestamps_ms;
  Eigen::MatrixXd angles_deg;  // [F x 22]

  Eigen::Index frames() const { return angles_deg.rows(); }
  bool empty() const { return frames() == 0; }
  JointAngles22 frame(Eigen::Index i, Handedness hand) const;
};

/// Any number of tracked markers; row f holds x, y, z of every marker.
struct MarkerStream {
  Eigen::VectorXd timestamps_ms;
  Eigen::MatrixXd positions_mm;  // [F x 3M]

  Eigen::Index frames() const { return positions_mm.rows(); }
  Eigen::Index markers() const { return positions_mm.cols() / 3; }
};

struct Episode {
  std::uint32_t participant_id = 0;
  std::string gesture_label = "Rest";
  EmgStream emg;
  PoseStream pose_right;
  PoseStream pose_left;  // may be empty for single-hand captures
  std::optional<MarkerStream> markers;
  std::optional<PinholeCamera> calibration;
  /// Payloads carried byte-for-byte without interpretation (IMU, video...).
  std::map<std::string, std::string> opaque;

  const PoseStream& pose(Handedness hand) const { return hand == Handedness::kRight ? pose_right : pose_left; }
  /// Throws kInvalidInput on unknown labels, shape mismatches or timestamps
  /// that are not strictly increasing.
  void validate() const;
};

Container episode_to_container(const Episode& episode);
/// Unknown blocks are skipped and reported in `warnings`.
Episode episode_from_container(const Container& container, std::vector<std::string>* warnings = nullptr);

void write_episode(const Episode& episode, const std::filesystem::path& path);
Episode read_episode(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

inline constexpr double kSynthInterferenceHz = 50.0;
inline constexpr double kSynthMinDuration = 4.0;

/// Desk-scale test episode. Both hands follow smooth band-limited joint
/// trajectories inside the joint limits; every EMG channel is band-limited
/// noise whose envelope is a fixed linear function of joint speeds, plus
/// mains interference at 50 Hz. Deterministic in `seed`.
Episode synth_episode(std::uint64_t seed, double duration_s, const std::string& gesture_label,
                      std::uint32_t participant_id = 0);

}  // namespace egoemg
