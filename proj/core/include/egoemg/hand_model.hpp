#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace egoemg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Handedness { kLeft, kRight };

std::string to_string(Handedness hand);
Handedness opposite(Handedness hand);

inline constexpr int kNumDofs = 22;
inline constexpr int kNumFingerDofs = 20;
inline constexpr int kNumLandmarks = 20;
inline constexpr int kNumFingertips = 5;

/// Semantic slots of the 22-DoF target vector.
namespace dof {
inline constexpr int kThumbCmcFe = 0;
inline constexpr int kThumbCmcAa = 1;
inline constexpr int kThumbMcpFe = 2;
inline constexpr int kThumbIpFe = 3;
inline constexpr int kIndexMcpAa = 4;
inline constexpr int kIndexMcpFe = 5;
inline constexpr int kIndexPipFe = 6;
inline constexpr int kIndexDipFe = 7;
inline constexpr int kMiddleMcpAa = 8;
inline constexpr int kMiddleMcpFe = 9;
inline constexpr int kMiddlePipFe = 10;
inline constexpr int kMiddleDipFe = 11;
inline constexpr int kRingMcpAa = 12;
inline constexpr int kRingMcpFe = 13;
inline constexpr int kRingPipFe = 14;
inline constexpr int kRingDipFe = 15;
inline constexpr int kPinkyMcpAa = 16;
inline constexpr int kPinkyMcpFe = 17;
inline constexpr int kPinkyPipFe = 18;
inline constexpr int kPinkyDipFe = 19;
inline constexpr int kWristFe = 20;
inline constexpr int kWristRu = 21;

/// DoFs whose sign flips under left/right mirroring: every abduction/adduction
/// slot plus wrist radial/ulnar deviation.
inline constexpr std::array<int, 6> kMirrorNegated{1, 4, 8, 12, 16, 21};

/// Short human-readable label such as "index.mcp.fe".
std::string name(int index);
bool is_flexion(int index);
}  // namespace dof

/// One hand's joint angles in degrees, ordered by the dof:: slots.
struct JointAngles22 {
  std::array<double, kNumDofs> values{};
  Handedness hand = Handedness::kRight;

  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  static JointAngles22 zero(Handedness hand = Handedness::kRight) {
    return JointAngles22{{}, hand};
  }
  bool all_finite() const;
  friend bool operator==(const JointAngles22&, const JointAngles22&) = default;
};

struct LandmarkSet {
  std::array<Vec3, kNumLandmarks> points;
};

struct JointLimit {
  double min_deg = 0.0;
  double max_deg = 0.0;
  double span() const { return max_deg - min_deg; }
};

/// A rigid segment of the kinematic tree. The bone frame sits at `offset` in
/// its parent frame and rotates about `axis` by angle[dof]; a bone with
/// dof < 0 is a fixed frame (fingertip ends, the palm).
struct Bone {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  int dof = -1;
};

/// A landmark is a point fixed in some bone frame.
struct LandmarkDef {
  int bone = 0;
  Vec3 offset = Vec3::Zero();
};

/// Kinematic chain definition for a right hand. Construction validates every
/// structural invariant; an instance is always usable.
class HandSkeleton {
 public:
  HandSkeleton(std::vector<Bone> bones, std::array<JointLimit, kNumDofs> limits,
               std::array<LandmarkDef, kNumLandmarks> landmarks,
               std::array<int, kNumFingertips> fingertips);

  /// Built-in right-hand skeleton; identical to assets/default_hand.skel.
  static HandSkeleton default_right();
  static HandSkeleton from_text(const std::string& text);
  static HandSkeleton load(const std::filesystem::path& path);
  std::string to_text() const;

  const std::vector<Bone>& bones() const { return bones_; }
  const std::array<JointLimit, kNumDofs>& limits() const { return limits_; }
  const JointLimit& limit(int dof_index) const { return limits_[static_cast<std::size_t>(dof_index)]; }
  const std::array<LandmarkDef, kNumLandmarks>& landmarks() const { return landmarks_; }
  const std::array<int, kNumFingertips>& fingertips() const { return fingertips_; }
  /// Bone driven by the given DoF.
  int bone_of_dof(int dof_index) const { return dof_bone_[static_cast<std::size_t>(dof_index)]; }
  /// True when `ancestor` lies on the path from the root to `bone` (inclusive).
  bool is_ancestor(int ancestor, int bone) const;
  /// Longest root-to-landmark sum of rest offset norms, mm.
  double max_chain_length() const;

  /// Copy with every rest offset (bones and landmarks) multiplied by s.
  HandSkeleton scaled(double s) const;

 private:
  std::vector<Bone> bones_;
  std::array<JointLimit, kNumDofs> limits_;
  std::array<LandmarkDef, kNumLandmarks> landmarks_;
  std::array<int, kNumFingertips> fingertips_;
  std::array<int, kNumDofs> dof_bone_{};
};

/// Rotation of `angle_deg` degrees about the unit `axis`.
/// Throws ErrorKind::kInvalidInput when |axis| deviates from 1 by more than 1e-6.
Mat3 rodrigues(const Vec3& axis, double angle_deg);

/// World-frame placement of every bone for one pose.
struct SkeletonPose {
  std::vector<Mat3> rotation;
  std::vector<Vec3> origin;
};

SkeletonPose pose_skeleton(const HandSkeleton& skeleton, const JointAngles22& angles);

/// Landmarks of a right-hand pose. Left-hand angles are evaluated on the
/// mirror image of the skeleton (reflection through the y = 0 plane).
LandmarkSet forward_kinematics(const HandSkeleton& skeleton, const JointAngles22& angles);

/// d(landmark coordinates)/d(angle in degrees), rows ordered
/// (landmark 0 x, y, z, landmark 1 x, ...). Right-hand convention only.
using LandmarkJacobian = Eigen::Matrix<double, 3 * kNumLandmarks, kNumDofs>;
LandmarkJacobian landmark_jacobian(const HandSkeleton& skeleton, const JointAngles22& angles);

std::array<Vec3, kNumFingertips> fingertip_positions(const HandSkeleton& skeleton,
                                                     const JointAngles22& angles);

JointAngles22 mirror_pose(const JointAngles22& angles);
JointAngles22 clamp_to_limits(const JointAngles22& angles, const HandSkeleton& skeleton);

}  // namespace egoemg
