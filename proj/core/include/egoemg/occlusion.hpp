#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <vector>

#include "egoemg/hand_model.hpp"

namespace egoemg {

struct TriangleMesh {
  std::vector<Vec3> vertices;                // mm
  std::vector<std::array<int, 3>> triangles; // vertex indices

  /// Throws kInvalidInput for out-of-range indices or a triangle with area
  /// below 1e-9 mm^2.
  void validate() const;
  double triangle_area(std::size_t t) const;
  double surface_area() const;
};

/// World-to-camera extrinsics (x_cam = R x_world + t) and pinhole
/// intrinsics. Pixel (i, j) covers [i, i+1) x [j, j+1); its centre sits at
/// (i + 0.5, j + 0.5).
struct PinholeCamera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 1;
  int height = 1;

  /// Throws kInvalidInput unless fx, fy > 0, the image is non-empty and the
  /// rotation is orthonormal with determinant +1 (within 1e-9).
  void validate() const;
  Mat3 intrinsics() const;
};

inline constexpr double kNearPlaneMm = 1e-6;
inline constexpr double kNoDepth = std::numeric_limits<double>::infinity();

struct DepthBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // row-major, kNoDepth where nothing is drawn

  double at(int x, int y) const {
    return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

TriangleMesh transform_to_camera(const TriangleMesh& mesh, const PinholeCamera& camera);

/// Z-buffer of a camera-frame mesh. Triangles with a vertex at z <= 1e-6 mm
/// are dropped whole; both faces are drawn. Coverage samples pixel centres
/// with a half-open edge rule so pixels on a shared edge belong to exactly
/// one triangle; depth is interpolated perspective-correctly. Rows may be
/// split over `threads` workers without changing the result.
DepthBuffer rasterize_depth(const TriangleMesh& camera_mesh, const PinholeCamera& camera, unsigned threads = 1);

/// A vertex is visible when any finite depth inside the (clamped) window
/// centred on its pixel lies within `epsilon_mm` of its own depth.
std::vector<bool> vertex_visibility(const TriangleMesh& camera_mesh, const PinholeCamera& camera,
                                    const DepthBuffer& buffer, double epsilon_mm = 5.0, int window = 5);

/// Per-vertex share of the surface: each triangle gives a third of its area
/// to each corner.
std::vector<double> vertex_area_weights(const TriangleMesh& mesh);

struct OcclusionReport {
  double s_occ = 0.0;
  std::vector<bool> visible;
  std::vector<double> weights;  // mm^2
};

/// Throws kUndefinedScore when the mesh has zero area.
OcclusionReport self_occlusion_score(const TriangleMesh& mesh, const PinholeCamera& camera, double epsilon_mm = 5.0,
                                     int window = 5, unsigned threads = 1);

/// `v x y z` and `f i j k` lines, 1-based indices as in OBJ; `#` starts a
/// comment and other OBJ records are ignored.
TriangleMesh read_mesh_text(std::istream& in);
void write_mesh_text(std::ostream& out, const TriangleMesh& mesh);
/// Records `K` (9 numbers, row-major), `R` (9, row-major), `t` (3) and
/// `resolution W H`, one per line.
PinholeCamera read_camera_text(std::istream& in);
void write_camera_text(std::ostream& out, const PinholeCamera& camera);
/// Height x width little-endian float32, row-major.
void write_depth_raw(std::ostream& out, const DepthBuffer& buffer);

}  // namespace egoemg
