#include <algorithm>
#include <cmath>
#include <numbers>

#include "egoemg/episode.hpp"
#include "egoemg/error.hpp"
#include "egoemg/rng.hpp"

namespace egoemg {

namespace {

constexpr std::uint32_t kPoseStream = 200;   // + hand
constexpr std::uint32_t kCarrierStream = 300;  // + channel
constexpr std::uint32_t kMainsStream = 340;
constexpr std::uint64_t kMixingSeed = 0x5eed;
constexpr int kHarmonics = 3;

// Envelope = kEnvelopeFloor + kEnvelopeGain * sum_j B[c, j] |joint speed j| (deg/s).
constexpr double kEnvelopeFloor = 0.02;
constexpr double kEnvelopeGain = 1e-4;
constexpr double kMainsAmplitude = 0.05;
constexpr double kCarrierLowHz = 20.0;
constexpr double kCarrierHighHz = 450.0;

struct Trajectory {
  double centre = 0.0;
  double amplitude = 0.0;
  std::array<double, kHarmonics> weight{}, freq{}, phase{};

  double value(double t) const {
    double s = 0.0;
    for (int k = 0; k < kHarmonics; ++k) s += weight[k] * std::sin(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
    return centre + amplitude * s;
  }
  double speed(double t) const {
    double s = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      s += weight[k] * 2.0 * std::numbers::pi * freq[k] * std::cos(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
    }
    return amplitude * s;
  }
};

/// Stays within [5%, 95%] of each joint range: the centre sits in the middle
/// 40% and the swing is at most a quarter span.
std::array<Trajectory, kNumDofs> draw_trajectories(CounterRng& rng, const HandSkeleton& skeleton) {
  std::array<Trajectory, kNumDofs> out;
  for (int j = 0; j < kNumDofs; ++j) {
    const JointLimit& lim = skeleton.limit(j);
    Trajectory& tr = out[static_cast<std::size_t>(j)];
    tr.centre = lim.min_deg + lim.span() * rng.uniform(0.3, 0.7);
    tr.amplitude = 0.25 * lim.span() * rng.uniform(0.4, 1.0);
    double total = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      tr.weight[k] = rng.uniform(0.2, 1.0);
      tr.freq[k] = rng.uniform(0.2, 1.5);
      tr.phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      total += tr.weight[k];
    }
    for (double& w : tr.weight) w /= total;
  }
  return out;
}

Eigen::MatrixXd mixing_matrix() {
  CounterRng rng(kMixingSeed, 0, 0);
  Eigen::MatrixXd b(kEmgChannels / 2, kNumDofs);
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = rng.uniform();
  }
  return b;
}

double one_pole_alpha(double cutoff_hz, double rate) {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz / rate);
}

}  // namespace

Episode synth_episode(std::uint64_t seed, double duration_s, const std::string& gesture_label,
                      std::uint32_t participant_id) {
  if (!(duration_s >= kSynthMinDuration) || !std::isfinite(duration_s)) {
    fail(ErrorKind::kInvalidInput, "synthetic episodes need a duration of at least 4 s");
  }
  const auto& vocab = gesture_vocabulary();
  const auto git = std::find(vocab.begin(), vocab.end(), gesture_label);
  if (git == vocab.end()) fail(ErrorKind::kInvalidInput, "unknown gesture label '" + gesture_label + "'");
  const std::uint64_t sample_id = (static_cast<std::uint64_t>(git - vocab.begin()) << 32) | participant_id;

  const HandSkeleton skeleton = HandSkeleton::default_right();
  Episode e;
  e.participant_id = participant_id;
  e.gesture_label = gesture_label;

  std::array<std::array<Trajectory, kNumDofs>, 2> traj;
  for (int hand = 0; hand < 2; ++hand) {
    CounterRng rng(seed, sample_id, kPoseStream + static_cast<std::uint32_t>(hand));
    traj[static_cast<std::size_t>(hand)] = draw_trajectories(rng, skeleton);
  }

  const auto frames = static_cast<Eigen::Index>(std::floor(duration_s * kPoseRate)) + 1;
  for (int hand = 0; hand < 2; ++hand) {
    PoseStream& p = hand == 0 ? e.pose_left : e.pose_right;
    p.timestamps_ms.resize(frames);
    p.angles_deg.resize(frames, kNumDofs);
    for (Eigen::Index f = 0; f < frames; ++f) {
      const double t = static_cast<double>(f) / kPoseRate;
      p.timestamps_ms[f] = 1000.0 * t;
      for (int j = 0; j < kNumDofs; ++j) {
        const JointLimit& lim = skeleton.limit(j);
        p.angles_deg(f, j) = std::clamp(traj[static_cast<std::size_t>(hand)][static_cast<std::size_t>(j)].value(t),
                                        lim.min_deg, lim.max_deg);
      }
    }
  }

  const double rate = kEmgSampleRate;
  const auto n = static_cast<Eigen::Index>(std::llround(duration_s * rate));
  e.emg.sample_rate = rate;
  e.emg.timestamps_ms.resize(n);
  e.emg.samples.resize(n, kEmgChannels);
  for (Eigen::Index i = 0; i < n; ++i) e.emg.timestamps_ms[i] = 1000.0 * static_cast<double>(i) / rate;

  // Joint speeds of each hand at every EMG sample, mixed into 8 envelopes.
  const Eigen::MatrixXd mix = mixing_matrix();
  Eigen::MatrixXd envelope(n, kEmgChannels);
  Eigen::VectorXd speeds(kNumDofs);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    for (int hand = 0; hand < 2; ++hand) {
      for (int j = 0; j < kNumDofs; ++j) {
        speeds[j] = std::abs(traj[static_cast<std::size_t>(hand)][static_cast<std::size_t>(j)].speed(t));
      }
      envelope.row(i).segment(hand * kEmgChannels / 2, kEmgChannels / 2) =
          (kEnvelopeFloor + kEnvelopeGain * (mix * speeds).array()).matrix().transpose();
    }
  }

  CounterRng mains_rng(seed, sample_id, kMainsStream);
  const double a_low = one_pole_alpha(kCarrierLowHz, rate);
  const double a_high = one_pole_alpha(kCarrierHighHz, rate);
  for (int c = 0; c < kEmgChannels; ++c) {
    CounterRng rng(seed, sample_id, kCarrierStream + static_cast<std::uint32_t>(c));
    const double mains_amp = kMainsAmplitude * mains_rng.uniform(0.5, 1.5);
    const double mains_phase = mains_rng.uniform(0.0, 2.0 * std::numbers::pi);
    double low = 0.0;
    double high = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = rng.normal();
      low += a_low * (w - low);
      high += a_high * (w - high);
      const double t = static_cast<double>(i) / rate;
      e.emg.samples(i, c) = envelope(i, c) * (high - low) +
                            mains_amp * std::sin(2.0 * std::numbers::pi * kSynthInterferenceHz * t + mains_phase);
    }
  }
  return e;
}

}  // namespace egoemg
