#include "egoemg/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "egoemg/error.hpp"

namespace egoemg {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Reflection through the y = 0 plane; maps the right hand onto the left.
Vec3 reflect_y(const Vec3& p) { return {p.x(), -p.y(), p.z()}; }

}  // namespace

std::string to_string(Handedness hand) {
  return hand == Handedness::kLeft ? "left" : "right";
}

Handedness opposite(Handedness hand) {
  return hand == Handedness::kLeft ? Handedness::kRight : Handedness::kLeft;
}

namespace dof {

std::string name(int index) {
  static const std::array<const char*, kNumDofs> kNames{
      "thumb.cmc.fe",  "thumb.cmc.aa",  "thumb.mcp.fe",  "thumb.ip.fe",
      "index.mcp.aa",  "index.mcp.fe",  "index.pip.fe",  "index.dip.fe",
      "middle.mcp.aa", "middle.mcp.fe", "middle.pip.fe", "middle.dip.fe",
      "ring.mcp.aa",   "ring.mcp.fe",   "ring.pip.fe",   "ring.dip.fe",
      "pinky.mcp.aa",  "pinky.mcp.fe",  "pinky.pip.fe",  "pinky.dip.fe",
      "wrist.fe",      "wrist.ru"};
  if (index < 0 || index >= kNumDofs) fail(ErrorKind::kOutOfRange, "dof index " + std::to_string(index));
  return kNames[static_cast<std::size_t>(index)];
}

bool is_flexion(int index) {
  return std::find(kMirrorNegated.begin(), kMirrorNegated.end(), index) == kMirrorNegated.end();
}

}  // namespace dof

bool JointAngles22::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

HandSkeleton::HandSkeleton(std::vector<Bone> bones, std::array<JointLimit, kNumDofs> limits,
                           std::array<LandmarkDef, kNumLandmarks> landmarks,
                           std::array<int, kNumFingertips> fingertips)
    : bones_(std::move(bones)),
      limits_(limits),
      landmarks_(landmarks),
      fingertips_(fingertips) {
  if (bones_.empty()) fail(ErrorKind::kInvalidInput, "skeleton has no bones");
  if (bones_[0].parent != -1 || !bones_[0].offset.isZero(0.0)) {
    fail(ErrorKind::kInvalidInput, "bone 0 must be the root and sit at the wrist origin");
  }
  dof_bone_.fill(-1);
  const int n = static_cast<int>(bones_.size());
  for (int i = 0; i < n; ++i) {
    const Bone& b = bones_[static_cast<std::size_t>(i)];
    if (i > 0 && (b.parent < 0 || b.parent >= i)) {
      // Parents precede children, which makes the bone graph a tree by construction.
      fail(ErrorKind::kInvalidInput, "bone '" + b.name + "' parent must precede it");
    }
    if (!b.offset.allFinite()) fail(ErrorKind::kInvalidInput, "bone '" + b.name + "' offset not finite");
    if (b.dof >= kNumDofs) fail(ErrorKind::kInvalidInput, "bone '" + b.name + "' dof out of range");
    if (b.dof >= 0) {
      if (std::abs(b.axis.norm() - 1.0) > 1e-9) {
        fail(ErrorKind::kInvalidInput, "bone '" + b.name + "' axis is not unit-norm");
      }
      if (dof_bone_[static_cast<std::size_t>(b.dof)] != -1) {
        fail(ErrorKind::kInvalidInput, "dof " + std::to_string(b.dof) + " drives two bones");
      }
      dof_bone_[static_cast<std::size_t>(b.dof)] = i;
    }
  }
  for (int d = 0; d < kNumDofs; ++d) {
    if (dof_bone_[static_cast<std::size_t>(d)] < 0) {
      fail(ErrorKind::kInvalidInput, "dof " + std::to_string(d) + " drives no bone");
    }
    const JointLimit& lim = limits_[static_cast<std::size_t>(d)];
    if (!(std::isfinite(lim.min_deg) && std::isfinite(lim.max_deg) && lim.min_deg < lim.max_deg)) {
      fail(ErrorKind::kInvalidInput, "limit for dof " + std::to_string(d) + " requires min < max");
    }
  }
  for (const LandmarkDef& lm : landmarks_) {
    if (lm.bone < 0 || lm.bone >= n || !lm.offset.allFinite()) {
      fail(ErrorKind::kInvalidInput, "landmark references an invalid bone");
    }
  }
  for (int tip : fingertips_) {
    if (tip < 0 || tip >= kNumLandmarks) fail(ErrorKind::kInvalidInput, "fingertip index out of range");
  }
}

bool HandSkeleton::is_ancestor(int ancestor, int bone) const {
  for (int b = bone; b >= 0; b = bones_[static_cast<std::size_t>(b)].parent) {
    if (b == ancestor) return true;
  }
  return false;
}

double HandSkeleton::max_chain_length() const {
  double best = 0.0;
  for (const LandmarkDef& lm : landmarks_) {
    double length = lm.offset.norm();
    for (int b = lm.bone; b >= 0; b = bones_[static_cast<std::size_t>(b)].parent) {
      length += bones_[static_cast<std::size_t>(b)].offset.norm();
    }
    best = std::max(best, length);
  }
  return best;
}

HandSkeleton HandSkeleton::scaled(double s) const {
  std::vector<Bone> bones = bones_;
  for (Bone& b : bones) b.offset *= s;
  std::array<LandmarkDef, kNumLandmarks> landmarks = landmarks_;
  for (LandmarkDef& lm : landmarks) lm.offset *= s;
  return HandSkeleton(std::move(bones), limits_, landmarks, fingertips_);
}

Mat3 rodrigues(const Vec3& axis, double angle_deg) {
  const double norm = axis.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    fail(ErrorKind::kInvalidInput, "rotation axis must be unit-norm (|axis| = " + std::to_string(norm) + ")");
  }
  const double theta = angle_deg * kDegToRad;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 k;
  k << 0.0, -axis.z(), axis.y(),
       axis.z(), 0.0, -axis.x(),
       -axis.y(), axis.x(), 0.0;
  // R = I + sin(theta) K + (1 - cos(theta)) K^2
  return Mat3::Identity() + s * k + (1.0 - c) * (k * k);
}

SkeletonPose pose_skeleton(const HandSkeleton& skeleton, const JointAngles22& angles) {
  const auto& bones = skeleton.bones();
  SkeletonPose pose;
  pose.rotation.resize(bones.size());
  pose.origin.resize(bones.size());
  for (std::size_t i = 0; i < bones.size(); ++i) {
    const Bone& b = bones[i];
    const Mat3 local = b.dof >= 0 ? rodrigues(b.axis, angles[b.dof]) : Mat3::Identity();
    if (b.parent < 0) {
      pose.rotation[i] = local;
      pose.origin[i] = b.offset;
    } else {
      const auto p = static_cast<std::size_t>(b.parent);
      pose.origin[i] = pose.origin[p] + pose.rotation[p] * b.offset;
      pose.rotation[i] = pose.rotation[p] * local;
    }
  }
  return pose;
}

namespace {

LandmarkSet landmarks_from_pose(const HandSkeleton& skeleton, const SkeletonPose& pose) {
  LandmarkSet out;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const LandmarkDef& lm = skeleton.landmarks()[static_cast<std::size_t>(i)];
    const auto b = static_cast<std::size_t>(lm.bone);
    out.points[static_cast<std::size_t>(i)] = pose.origin[b] + pose.rotation[b] * lm.offset;
  }
  return out;
}

}  // namespace

LandmarkSet forward_kinematics(const HandSkeleton& skeleton, const JointAngles22& angles) {
  if (!angles.all_finite()) fail(ErrorKind::kInvalidInput, "joint angles must be finite");
  if (angles.hand == Handedness::kRight) {
    return landmarks_from_pose(skeleton, pose_skeleton(skeleton, angles));
  }
  const JointAngles22 as_right = mirror_pose(angles);
  LandmarkSet out = landmarks_from_pose(skeleton, pose_skeleton(skeleton, as_right));
  for (Vec3& p : out.points) p = reflect_y(p);
  return out;
}

LandmarkJacobian landmark_jacobian(const HandSkeleton& skeleton, const JointAngles22& angles) {
  const SkeletonPose pose = pose_skeleton(skeleton, angles);
  const LandmarkSet lms = landmarks_from_pose(skeleton, pose);
  LandmarkJacobian jac = LandmarkJacobian::Zero();
  for (int d = 0; d < kNumDofs; ++d) {
    const int bone = skeleton.bone_of_dof(d);
    const auto bi = static_cast<std::size_t>(bone);
    // The joint axis expressed in world coordinates is R_bone * axis (the
    // local rotation commutes with its own axis).
    const Vec3 axis_world = pose.rotation[bi] * skeleton.bones()[bi].axis;
    const Vec3& pivot = pose.origin[bi];
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (!skeleton.is_ancestor(bone, skeleton.landmarks()[static_cast<std::size_t>(i)].bone)) continue;
      jac.block<3, 1>(3 * i, d) = kDegToRad * axis_world.cross(lms.points[static_cast<std::size_t>(i)] - pivot);
    }
  }
  return jac;
}

std::array<Vec3, kNumFingertips> fingertip_positions(const HandSkeleton& skeleton,
                                                     const JointAngles22& angles) {
  const LandmarkSet lms = forward_kinematics(skeleton, angles);
  std::array<Vec3, kNumFingertips> tips;
  for (int f = 0; f < kNumFingertips; ++f) {
    tips[static_cast<std::size_t>(f)] =
        lms.points[static_cast<std::size_t>(skeleton.fingertips()[static_cast<std::size_t>(f)])];
  }
  return tips;
}

JointAngles22 mirror_pose(const JointAngles22& angles) {
  JointAngles22 out = angles;
  out.hand = opposite(angles.hand);
  for (int i : dof::kMirrorNegated) out[i] = -angles[i];
  return out;
}

JointAngles22 clamp_to_limits(const JointAngles22& angles, const HandSkeleton& skeleton) {
  JointAngles22 out = angles;
  for (int d = 0; d < kNumDofs; ++d) {
    const JointLimit& lim = skeleton.limit(d);
    out[d] = std::clamp(angles[d], lim.min_deg, lim.max_deg);
  }
  return out;
}

}  // namespace egoemg
