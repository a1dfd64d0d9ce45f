#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "egoemg/episode.hpp"
#include "egoemg/featurizer.hpp"

namespace egoemg {

/// Linear interpolation of every column of `values` ([n x c], one row per
/// source timestamp) onto `target`. Exact at source timestamps. Targets
/// outside [source.front(), source.back()] raise kOutOfRange.
Eigen::MatrixXd resample_to_timeline(const Eigen::VectorXd& source, const Eigen::MatrixXd& values,
                                     const Eigen::VectorXd& target);

/// Offsets 0, stride, 2 stride, ... of every full window.
std::vector<Eigen::Index> window_offsets(Eigen::Index total, Eigen::Index length, Eigen::Index stride);

struct WindowSample {
  Eigen::Index offset = 0;
  EmgWindow window;
  /// Host time of every output frame (centre of its receptive field).
  Eigen::VectorXd frame_times_ms;
  /// [frames x 22] per hand; empty when the episode lacks that hand.
  Eigen::MatrixXd targets_right;
  Eigen::MatrixXd targets_left;
  /// Window-relative sample index of the centre, length / 2 rounded down.
  Eigen::Index center_index = 0;
  /// Pose frame nearest to the centre sample's timestamp, per hand (-1 if absent).
  Eigen::Index center_pose_frame_right = -1;
  Eigen::Index center_pose_frame_left = -1;
};

struct WindowSet {
  std::vector<WindowSample> windows;
  std::vector<std::string> warnings;
};

/// Cuts full-length windows at a fixed stride (stride 0 means the window
/// length). Too-short episodes give no windows and a warning; so does a
/// window whose frames fall outside the pose stream.
WindowSet extract_windows(const Episode& episode, Eigen::Index length = kDefaultWindowSamples,
                          Eigen::Index stride = 0);

}  // namespace egoemg
