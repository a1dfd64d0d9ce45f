#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "egoemg/error.hpp"
#include "egoemg/graph_features.hpp"
#include "egoemg/hand_model.hpp"

namespace egoemg::test {

inline constexpr double kPi = 3.14159265358979323846;

/// Kind of the egoemg::Error thrown by fn, or nullopt when it returns.
inline std::optional<ErrorKind> error_kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Pose drawn uniformly inside each limit interval shrunk by `margin` of its span per side.
inline JointAngles22 random_pose(std::mt19937_64& gen, const HandSkeleton& skeleton, double margin = 0.05,
                                 Handedness hand = Handedness::kRight) {
  JointAngles22 a = JointAngles22::zero(hand);
  for (int i = 0; i < kNumDofs; ++i) {
    const auto& lim = skeleton.limit(i);
    std::uniform_real_distribution<double> u(lim.min_deg + margin * lim.span(), lim.max_deg - margin * lim.span());
    a[i] = u(gen);
  }
  return a;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

/// All-pairs hop counts by Floyd-Warshall, independent of the library's BFS.
inline Eigen::MatrixXi floyd_warshall(const SkeletonGraph& g) {
  const int n = g.n_nodes;
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (const auto& [a, b] : g.edges) d(a, b) = d(b, a) = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
  return d;
}

/// Random spanning tree plus extra random edges; always connected.
inline SkeletonGraph random_connected_graph(std::mt19937_64& gen, int n, int extra_edges) {
  SkeletonGraph g;
  g.n_nodes = n;
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  auto add = [&](int a, int b) {
    if (a == b || has[a][b]) return;
    has[a][b] = has[b][a] = true;
    g.edges.emplace_back(a, b);
  };
  for (int i = 1; i < n; ++i) add(i, std::uniform_int_distribution<int>(0, i - 1)(gen));
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int e = 0; e < extra_edges; ++e) add(node(gen), node(gen));
  return g;
}

inline SkeletonGraph path_graph(int n) {
  SkeletonGraph g;
  g.n_nodes = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("egoemg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Amplitude of the `hz` component of x (sampled at `rate`) by a direct DFT
/// correlation, not the library FFT.
inline double tone_amplitude(const Eigen::VectorXd& x, double hz, double rate) {
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double ph = 2.0 * kPi * hz * static_cast<double>(n) / rate;
    re += x[n] * std::cos(ph);
    im -= x[n] * std::sin(ph);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(x.size());
}

inline double rms(const Eigen::VectorXd& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

}  // namespace egoemg::test
