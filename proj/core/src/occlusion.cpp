#include "egoemg/occlusion.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "egoemg/error.hpp"

namespace egoemg {

namespace {

struct ScreenVertex {
  double x;
  double y;
  double inv_z;
};

// Twice the signed area of (a, b, p); positive when p lies to the left of
// a -> b in a y-up frame.
double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Half-open ownership: a pixel centre exactly on an edge is covered only by
// the triangle for which that edge is a "top" or "left" edge. Opposite
// triangles see a shared edge in reverse direction, so exactly one owns it.
bool owns_edge(const ScreenVertex& a, const ScreenVertex& b) {
  const double dy = b.y - a.y;
  return dy > 0.0 || (dy == 0.0 && b.x < a.x);
}

ScreenVertex project(const Vec3& p, const PinholeCamera& cam) {
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy, 1.0 / p.z()};
}

void draw_triangle(ScreenVertex v0, ScreenVertex v1, ScreenVertex v2, int row_begin, int row_end,
                   DepthBuffer& buf) {
  double area = edge(v0, v1, v2.x, v2.y);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(v1, v2);
    area = -area;
  }
  const double min_x = std::min({v0.x, v1.x, v2.x});
  const double max_x = std::max({v0.x, v1.x, v2.x});
  const double min_y = std::min({v0.y, v1.y, v2.y});
  const double max_y = std::max({v0.y, v1.y, v2.y});
  const auto clamp_to = [](double v, int lo, int hi) {
    return static_cast<int>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
  };
  const int x0 = clamp_to(std::ceil(min_x - 0.5), 0, buf.width);
  const int x1 = clamp_to(std::floor(max_x - 0.5), -1, buf.width - 1);
  const int y0 = clamp_to(std::ceil(min_y - 0.5), row_begin, row_end);
  const int y1 = clamp_to(std::floor(max_y - 0.5), row_begin - 1, row_end - 1);
  const bool own0 = owns_edge(v1, v2);
  const bool own1 = owns_edge(v2, v0);
  const bool own2 = owns_edge(v0, v1);
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double w0 = edge(v1, v2, px, py);
      const double w1 = edge(v2, v0, px, py);
      const double w2 = edge(v0, v1, px, py);
      const bool inside = (w0 > 0.0 || (w0 == 0.0 && own0)) && (w1 > 0.0 || (w1 == 0.0 && own1)) &&
                          (w2 > 0.0 || (w2 == 0.0 && own2));
      if (!inside) continue;
      const double inv_z = (w0 * v0.inv_z + w1 * v1.inv_z + w2 * v2.inv_z) / area;
      const double z = 1.0 / inv_z;
      double& slot = buf.depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(buf.width) +
                               static_cast<std::size_t>(x)];
      if (z < slot) slot = z;
    }
  }
}

std::string next_record(std::istream& in, std::istringstream& fields) {
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    fields.clear();
    fields.str(line);
    std::string tag;
    if (fields >> tag) return tag;
  }
  return {};
}

template <typename T>
T read_field(std::istringstream& fields, const std::string& what) {
  T v{};
  if (!(fields >> v)) fail(ErrorKind::kInvalidInput, "malformed " + what + " record");
  return v;
}

}  // namespace

void TriangleMesh::validate() const {
  const auto n = static_cast<long long>(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int idx : triangles[t]) {
      if (idx < 0 || idx >= n) fail(ErrorKind::kInvalidInput, "triangle " + std::to_string(t) + " has a bad index");
    }
    if (!(triangle_area(t) >= 1e-9)) {
      fail(ErrorKind::kInvalidInput, "triangle " + std::to_string(t) + " is degenerate");
    }
  }
  for (const Vec3& v : vertices) {
    if (!v.allFinite()) fail(ErrorKind::kInvalidInput, "mesh vertices must be finite");
  }
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[static_cast<std::size_t>(tri[0])];
  const Vec3& b = vertices[static_cast<std::size_t>(tri[1])];
  const Vec3& c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriangleMesh::surface_area() const {
  double total = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
  return total;
}

void PinholeCamera::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) fail(ErrorKind::kInvalidInput, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorKind::kInvalidInput, "image resolution must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy) || !translation.allFinite()) {
    fail(ErrorKind::kInvalidInput, "camera parameters must be finite");
  }
  const double orth = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(orth <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    fail(ErrorKind::kInvalidInput, "camera rotation must be a proper rotation");
  }
}

Mat3 PinholeCamera::intrinsics() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

TriangleMesh transform_to_camera(const TriangleMesh& mesh, const PinholeCamera& camera) {
  camera.validate();
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = camera.rotation * v + camera.translation;
  return out;
}

DepthBuffer rasterize_depth(const TriangleMesh& camera_mesh, const PinholeCamera& camera, unsigned threads) {
  camera.validate();
  DepthBuffer buf;
  buf.width = camera.width;
  buf.height = camera.height;
  buf.depth.assign(static_cast<std::size_t>(buf.width) * static_cast<std::size_t>(buf.height), kNoDepth);

  std::vector<std::array<ScreenVertex, 3>> screen;
  screen.reserve(camera_mesh.triangles.size());
  for (const auto& tri : camera_mesh.triangles) {
    std::array<ScreenVertex, 3> sv{};
    bool in_front = true;
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = camera_mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      if (!(p.z() > kNearPlaneMm)) {
        in_front = false;
        break;
      }
      sv[static_cast<std::size_t>(k)] = project(p, camera);
    }
    if (in_front) screen.push_back(sv);
  }

  const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(buf.height));
  auto run_rows = [&](int row_begin, int row_end) {
    for (const auto& sv : screen) draw_triangle(sv[0], sv[1], sv[2], row_begin, row_end, buf);
  };
  if (workers == 1) {
    run_rows(0, buf.height);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const int begin = static_cast<int>(static_cast<long long>(buf.height) * w / workers);
      const int end = static_cast<int>(static_cast<long long>(buf.height) * (w + 1) / workers);
      pool.emplace_back(run_rows, begin, end);
    }
  }
  return buf;
}

std::vector<bool> vertex_visibility(const TriangleMesh& camera_mesh, const PinholeCamera& camera,
                                    const DepthBuffer& buffer, double epsilon_mm, int window) {
  camera.validate();
  if (buffer.width != camera.width || buffer.height != camera.height) {
    fail(ErrorKind::kShapeMismatch, "depth buffer does not match the camera resolution");
  }
  if (window < 1) fail(ErrorKind::kInvalidInput, "visibility window must be at least one pixel");
  const int reach_lo = (window - 1) / 2;
  const int reach_hi = window / 2;
  std::vector<bool> visible(camera_mesh.vertices.size(), false);
  for (std::size_t i = 0; i < camera_mesh.vertices.size(); ++i) {
    const Vec3& p = camera_mesh.vertices[i];
    if (!(p.z() > kNearPlaneMm)) continue;
    const ScreenVertex s = project(p, camera);
    if (!(s.x >= 0.0 && s.x < camera.width && s.y >= 0.0 && s.y < camera.height)) continue;
    const int px = static_cast<int>(std::floor(s.x));
    const int py = static_cast<int>(std::floor(s.y));
    bool hit = false;
    for (int y = std::max(0, py - reach_lo); y <= std::min(camera.height - 1, py + reach_hi) && !hit; ++y) {
      for (int x = std::max(0, px - reach_lo); x <= std::min(camera.width - 1, px + reach_hi); ++x) {
        const double d = buffer.at(x, y);
        if (std::isfinite(d) && std::abs(d - p.z()) <= epsilon_mm) {
          hit = true;
          break;
        }
      }
    }
    visible[i] = hit;
  }
  return visible;
}

std::vector<double> vertex_area_weights(const TriangleMesh& mesh) {
  std::vector<double> w(mesh.vertices.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    for (int idx : mesh.triangles[t]) w[static_cast<std::size_t>(idx)] += third;
  }
  return w;
}

OcclusionReport self_occlusion_score(const TriangleMesh& mesh, const PinholeCamera& camera, double epsilon_mm,
                                     int window, unsigned threads) {
  mesh.validate();
  const TriangleMesh cam_mesh = transform_to_camera(mesh, camera);
  const DepthBuffer buffer = rasterize_depth(cam_mesh, camera, threads);
  OcclusionReport report;
  report.visible = vertex_visibility(cam_mesh, camera, buffer, epsilon_mm, window);
  report.weights = vertex_area_weights(mesh);
  double total = 0.0;
  double seen = 0.0;
  for (std::size_t i = 0; i < report.weights.size(); ++i) {
    total += report.weights[i];
    if (report.visible[i]) seen += report.weights[i];
  }
  if (!(total > 0.0)) fail(ErrorKind::kUndefinedScore, "mesh has zero surface area");
  report.s_occ = 1.0 - seen / total;
  return report;
}

TriangleMesh read_mesh_text(std::istream& in) {
  TriangleMesh mesh;
  std::istringstream fields;
  for (std::string tag = next_record(in, fields); !tag.empty(); tag = next_record(in, fields)) {
    if (tag == "v") {
      const double x = read_field<double>(fields, "vertex");
      const double y = read_field<double>(fields, "vertex");
      const double z = read_field<double>(fields, "vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<int, 3> tri{};
      for (int& idx : tri) {
        std::string token = read_field<std::string>(fields, "face");
        token = token.substr(0, token.find('/'));
        try {
          idx = std::stoi(token) - 1;
        } catch (const std::exception&) {
          fail(ErrorKind::kInvalidInput, "malformed face index '" + token + "'");
        }
      }
      mesh.triangles.push_back(tri);
    }
  }
  mesh.validate();
  return mesh;
}

void write_mesh_text(std::ostream& out, const TriangleMesh& mesh) {
  out.precision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

PinholeCamera read_camera_text(std::istream& in) {
  PinholeCamera cam;
  bool have_k = false, have_r = false, have_t = false, have_res = false;
  std::istringstream fields;
  for (std::string tag = next_record(in, fields); !tag.empty(); tag = next_record(in, fields)) {
    if (tag == "K") {
      Mat3 k;
      for (int i = 0; i < 9; ++i) k(i / 3, i % 3) = read_field<double>(fields, "K");
      cam.fx = k(0, 0);
      cam.fy = k(1, 1);
      cam.cx = k(0, 2);
      cam.cy = k(1, 2);
      have_k = true;
    } else if (tag == "R") {
      for (int i = 0; i < 9; ++i) cam.rotation(i / 3, i % 3) = read_field<double>(fields, "R");
      have_r = true;
    } else if (tag == "t") {
      for (int i = 0; i < 3; ++i) cam.translation[i] = read_field<double>(fields, "t");
      have_t = true;
    } else if (tag == "resolution") {
      cam.width = read_field<int>(fields, "resolution");
      cam.height = read_field<int>(fields, "resolution");
      have_res = true;
    } else {
      fail(ErrorKind::kInvalidInput, "unknown camera record '" + tag + "'");
    }
  }
  if (!(have_k && have_r && have_t && have_res)) {
    fail(ErrorKind::kInvalidInput, "camera file needs K, R, t and resolution records");
  }
  cam.validate();
  return cam;
}

void write_camera_text(std::ostream& out, const PinholeCamera& camera) {
  out.precision(17);
  const Mat3 k = camera.intrinsics();
  out << "K";
  for (int i = 0; i < 9; ++i) out << ' ' << k(i / 3, i % 3);
  out << "\nR";
  for (int i = 0; i < 9; ++i) out << ' ' << camera.rotation(i / 3, i % 3);
  out << "\nt " << camera.translation.x() << ' ' << camera.translation.y() << ' ' << camera.translation.z();
  out << "\nresolution " << camera.width << ' ' << camera.height << '\n';
}

void write_depth_raw(std::ostream& out, const DepthBuffer& buffer) {
  for (double d : buffer.depth) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    out.write(bytes, 4);
  }
}

}  // namespace egoemg
