#pragma once

#include "egoemg/hand_model.hpp"

namespace egoemg {

/// Orthonormal forearm frame built from three armband markers.
///   forward: along the forearm (marker a -> marker b)
///   left:    across the dorsal surface, orthogonalized against `forward`
///   normal:  forward x left for a right hand, left x forward for a left hand
struct ForearmFrame {
  Vec3 forward = Vec3::UnitX();
  Vec3 left = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  Handedness hand = Handedness::kRight;
};

struct WristAngles {
  double flexion_deg = 0.0;    // extension positive, always in [-90, 90]
  double deviation_deg = 0.0;  // radial deviation positive
  // Set when the hand vector is (anti)parallel to the frame normal; the
  // deviation angle is then undefined and reported as 0.
  bool deviation_degenerate = false;
};

/// Throws ErrorKind::kDegenerateFrame when the markers are (nearly) collinear.
ForearmFrame forearm_frame(const Vec3& marker_a, const Vec3& marker_b, const Vec3& marker_c,
                           Handedness hand);

/// Throws ErrorKind::kDegenerateHandVector when wrist and MCP coincide.
WristAngles wrist_angles(const ForearmFrame& frame, const Vec3& wrist, const Vec3& middle_mcp);

}  // namespace egoemg
