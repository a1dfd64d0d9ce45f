#include "egoemg/wrist_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "egoemg/error.hpp"

namespace egoemg {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kMinSine = 1e-6;          // collinearity threshold, scale-free
constexpr double kMinHandLengthMm = 1e-6;  // below this wrist and MCP coincide
constexpr double kParallelTol = 1e-9;

}  // namespace

ForearmFrame forearm_frame(const Vec3& marker_a, const Vec3& marker_b, const Vec3& marker_c,
                           Handedness hand) {
  const Vec3 ab = marker_b - marker_a;
  const Vec3 ac = marker_c - marker_a;
  const double ab_len = ab.norm();
  const double ac_len = ac.norm();
  if (!(ab_len > 0.0 && ac_len > 0.0) || !ab.allFinite() || !ac.allFinite()) {
    fail(ErrorKind::kDegenerateFrame, "armband markers coincide");
  }
  if (ab.cross(ac).norm() / (ab_len * ac_len) < kMinSine) {
    fail(ErrorKind::kDegenerateFrame, "armband markers are collinear");
  }
  ForearmFrame frame;
  frame.hand = hand;
  frame.forward = ab / ab_len;
  frame.left = (ac - ac.dot(frame.forward) * frame.forward).normalized();
  frame.normal = hand == Handedness::kRight ? frame.forward.cross(frame.left).normalized()
                                            : frame.left.cross(frame.forward).normalized();
  return frame;
}

WristAngles wrist_angles(const ForearmFrame& frame, const Vec3& wrist, const Vec3& middle_mcp) {
  const Vec3 hand_vec = middle_mcp - wrist;
  const double length = hand_vec.norm();
  if (!std::isfinite(length) || length <= kMinHandLengthMm) {
    fail(ErrorKind::kDegenerateHandVector, "wrist and middle MCP coincide");
  }
  const Vec3 h = hand_vec / length;
  const double hn = std::clamp(h.dot(frame.normal), -1.0, 1.0);

  WristAngles out;
  out.flexion_deg = std::asin(hn) * kRadToDeg;
  if (std::abs(hn) > 1.0 - kParallelTol) {
    out.deviation_degenerate = true;
    return out;
  }
  const Vec3 projected = h - hn * frame.normal;
  out.deviation_deg = std::atan2(projected.dot(frame.left), projected.dot(frame.forward)) * kRadToDeg;
  return out;
}

}  // namespace egoemg
