#include "egoemg/timeline.hpp"

#include <algorithm>
#include <cmath>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

Eigen::Index nearest_index(const Eigen::VectorXd& t, double x) {
  const double* begin = t.data();
  const double* end = begin + t.size();
  const double* it = std::lower_bound(begin, end, x);
  if (it == begin) return 0;
  if (it == end) return t.size() - 1;
  return (x - *(it - 1) <= *it - x) ? (it - begin) - 1 : it - begin;
}

}  // namespace

Eigen::MatrixXd resample_to_timeline(const Eigen::VectorXd& source, const Eigen::MatrixXd& values,
                                     const Eigen::VectorXd& target) {
  if (values.rows() != source.size()) fail(ErrorKind::kShapeMismatch, "one value row per source timestamp required");
  if (source.size() == 0) fail(ErrorKind::kInvalidInput, "empty source stream");
  for (Eigen::Index i = 1; i < source.size(); ++i) {
    if (!(source[i] > source[i - 1])) fail(ErrorKind::kInvalidInput, "source timestamps must be strictly increasing");
  }
  const double* begin = source.data();
  const double* end = begin + source.size();
  Eigen::MatrixXd out(target.size(), values.cols());
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    const double x = target[k];
    if (!(x >= source[0] && x <= source[source.size() - 1])) {
      fail(ErrorKind::kOutOfRange, "target time " + std::to_string(x) + " lies outside the source range [" +
                                       std::to_string(source[0]) + ", " + std::to_string(source[source.size() - 1]) +
                                       "]");
    }
    const double* it = std::lower_bound(begin, end, x);
    const Eigen::Index hi = it - begin;
    if (*it == x) {
      out.row(k) = values.row(hi);
      continue;
    }
    const Eigen::Index lo = hi - 1;
    const double w = (x - source[lo]) / (source[hi] - source[lo]);
    out.row(k) = values.row(lo) + w * (values.row(hi) - values.row(lo));
  }
  return out;
}

std::vector<Eigen::Index> window_offsets(Eigen::Index total, Eigen::Index length, Eigen::Index stride) {
  if (length <= 0 || stride <= 0) fail(ErrorKind::kInvalidInput, "window length and stride must be positive");
  std::vector<Eigen::Index> out;
  for (Eigen::Index off = 0; off + length <= total; off += stride) out.push_back(off);
  return out;
}

WindowSet extract_windows(const Episode& episode, Eigen::Index length, Eigen::Index stride) {
  if (stride == 0) stride = length;
  WindowSet set;
  const Eigen::Index total = episode.emg.length();
  if (total < length) {
    set.warnings.push_back("episode has " + std::to_string(total) + " EMG samples, fewer than the window length " +
                           std::to_string(length));
    return set;
  }
  const Eigen::Index frames = featurizer_lengths(length)[5];
  if (frames < 1) fail(ErrorKind::kLength, "window length " + std::to_string(length) + " yields no feature frames");

  for (Eigen::Index off : window_offsets(total, length, stride)) {
    WindowSample w;
    w.offset = off;
    w.window = episode.emg.window(off, length);
    w.frame_times_ms.resize(frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
      // frame_center_sample is an integer for odd receptive fields.
      const auto s = off + static_cast<Eigen::Index>(frame_center_sample(t));
      w.frame_times_ms[t] = episode.emg.timestamps_ms[s];
    }
    w.center_index = length / 2;
    const double center_time = episode.emg.timestamps_ms[off + w.center_index];
    try {
      for (const Handedness hand : {Handedness::kRight, Handedness::kLeft}) {
        const PoseStream& p = episode.pose(hand);
        if (p.empty()) continue;
        Eigen::MatrixXd targets = resample_to_timeline(p.timestamps_ms, p.angles_deg, w.frame_times_ms);
        const Eigen::Index nearest = nearest_index(p.timestamps_ms, center_time);
        if (hand == Handedness::kRight) {
          w.targets_right = std::move(targets);
          w.center_pose_frame_right = nearest;
        } else {
          w.targets_left = std::move(targets);
          w.center_pose_frame_left = nearest;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kOutOfRange) throw;
      set.warnings.push_back("window at offset " + std::to_string(off) + " skipped: " + e.what());
      continue;
    }
    set.windows.push_back(std::move(w));
  }
  return set;
}

}  // namespace egoemg
