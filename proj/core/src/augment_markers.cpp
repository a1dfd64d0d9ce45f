#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "egoemg/augment.hpp"
#include "egoemg/error.hpp"
#include "egoemg/rng.hpp"

namespace egoemg {

namespace {

constexpr std::uint32_t kBypassStream = 100;
constexpr std::uint32_t stream_of(MarkerOp op) { return 101 + static_cast<std::uint32_t>(op); }

Vec3 random_direction(CounterRng& rng) {
  for (;;) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

// k distinct indices from [0, n), in draw order.
std::vector<int> sample_distinct(CounterRng& rng, int n, int k) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

// Parent of every node in the breadth-first tree rooted at node 0, plus the
// visiting order. The root's parent is -1.
std::pair<std::vector<int>, std::vector<int>> bfs_tree(const std::vector<std::vector<int>>& adj) {
  std::vector<int> parent(adj.size(), -2);
  std::vector<int> order;
  std::queue<int> frontier;
  parent[0] = -1;
  frontier.push(0);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    order.push_back(u);
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (parent[static_cast<std::size_t>(v)] == -2) {
        parent[static_cast<std::size_t>(v)] = u;
        frontier.push(v);
      }
    }
  }
  return {parent, order};
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::string_view to_string(MarkerOp op) {
  switch (op) {
    case MarkerOp::kBoneLength: return "bone-length";
    case MarkerOp::kGlobalScale: return "global-scale";
    case MarkerOp::kSwap: return "swap";
    case MarkerOp::kDropout: return "dropout";
    case MarkerOp::kBlend: return "blend";
    case MarkerOp::kGaussianNoise: return "gaussian-noise";
    case MarkerOp::kDrift: return "drift";
    case MarkerOp::kSpike: return "spike";
  }
  return "unknown";
}

void MarkerAugConfig::validate() const {
  for (double p : {bypass_p, swap_p, per_marker_dropout_p, spike_p, blend_self_weight}) {
    if (!probability(p)) fail(ErrorKind::kConfiguration, "marker augmentation probabilities and weights must lie in [0, 1]");
  }
  const bool ordered = bone_scale_pct >= 0.0 && bone_scale_pct < 100.0 && 0.0 < global_scale_min &&
                       global_scale_min <= global_scale_max && 0.0 < spike_scale_min &&
                       spike_scale_min <= spike_scale_max;
  if (!ordered) fail(ErrorKind::kConfiguration, "marker augmentation ranges must be ordered and positive");
  if (swap_radius_mm < 0.0 || gaussian_sigma_mm < 0.0 || drift_mm < 0.0) {
    fail(ErrorKind::kConfiguration, "marker augmentation distances must be non-negative");
  }
  if (max_swaps < 0 || max_dropout < 0 || max_drift_markers < 0 || max_dropout > kNumMarkers ||
      max_drift_markers > kNumMarkers) {
    fail(ErrorKind::kConfiguration, "marker augmentation caps must lie in [0, 21]");
  }
}

MarkerAugConfig MarkerAugConfig::only(MarkerOp op) {
  MarkerAugConfig c;
  c.bypass_p = 0.0;
  c.enabled.fill(false);
  c.enabled[static_cast<std::size_t>(op)] = true;
  if (op == MarkerOp::kSwap) c.swap_p = 1.0;
  if (op == MarkerOp::kSpike) c.spike_p = 1.0;
  return c;
}

MarkerAugResult augment_markers(const MarkerSet& markers, const SkeletonGraph& graph, double hand_scale_mm,
                                std::uint64_t seed, const MarkerAugConfig& config, std::uint64_t sample_id) {
  config.validate();
  graph.validate();
  if (graph.n_nodes != kNumMarkers) fail(ErrorKind::kShapeMismatch, "marker graph must have 21 nodes");
  if (!(hand_scale_mm > 0.0)) fail(ErrorKind::kInvalidInput, "hand scale must be positive");

  MarkerAugResult result;
  result.markers = markers;
  CounterRng bypass_rng(seed, sample_id, kBypassStream);
  if (bypass_rng.bernoulli(config.bypass_p)) {
    result.bypassed = true;
    return result;
  }

  MarkerSet& m = result.markers;
  const auto adj = graph.adjacency();
  auto on = [&](MarkerOp op) { return config.enabled[static_cast<std::size_t>(op)]; };
  auto rng_for = [&](MarkerOp op) { return CounterRng(seed, sample_id, stream_of(op)); };

  // Structural.
  if (on(MarkerOp::kBoneLength)) {
    CounterRng rng = rng_for(MarkerOp::kBoneLength);
    const auto [parent, order] = bfs_tree(adj);
    const MarkerSet before = m;
    AppliedOp rec{MarkerOp::kBoneLength, {}, {}};
    const double spread = config.bone_scale_pct / 100.0;
    for (int node : order) {
      const int p = parent[static_cast<std::size_t>(node)];
      if (p < 0) continue;
      const double s = rng.uniform(1.0 - spread, 1.0 + spread);
      const auto ni = static_cast<std::size_t>(node);
      const auto pi = static_cast<std::size_t>(p);
      m[ni] = m[pi] + s * (before[ni] - before[pi]);
      rec.markers.push_back(node);
      rec.values.push_back(s);
    }
    result.applied.push_back(std::move(rec));
  }
  if (on(MarkerOp::kGlobalScale)) {
    CounterRng rng = rng_for(MarkerOp::kGlobalScale);
    const double s = rng.uniform(config.global_scale_min, config.global_scale_max);
    const Vec3 root = m[0];
    for (Vec3& p : m) p = root + s * (p - root);
    result.applied.push_back({MarkerOp::kGlobalScale, {}, {s}});
  }

  // Identity.
  if (on(MarkerOp::kSwap) && config.max_swaps > 0) {
    CounterRng rng = rng_for(MarkerOp::kSwap);
    std::vector<std::pair<int, int>> candidates;
    for (int i = 0; i < kNumMarkers; ++i) {
      for (int j = i + 1; j < kNumMarkers; ++j) {
        if ((m[static_cast<std::size_t>(i)] - m[static_cast<std::size_t>(j)]).norm() <= config.swap_radius_mm) {
          candidates.emplace_back(i, j);
        }
      }
    }
    for (std::size_t i = candidates.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(candidates[i - 1], candidates[j]);
    }
    std::array<bool, kNumMarkers> used{};
    AppliedOp rec{MarkerOp::kSwap, {}, {}};
    int swaps = 0;
    for (auto [a, b] : candidates) {
      if (swaps >= config.max_swaps) break;
      const bool fire = rng.bernoulli(config.swap_p);
      if (!fire || used[static_cast<std::size_t>(a)] || used[static_cast<std::size_t>(b)]) continue;
      std::swap(m[static_cast<std::size_t>(a)], m[static_cast<std::size_t>(b)]);
      used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = true;
      rec.markers.push_back(a);
      rec.markers.push_back(b);
      ++swaps;
    }
    if (swaps > 0) result.applied.push_back(std::move(rec));
  }
  int dropped = 0;
  if (on(MarkerOp::kDropout) && config.max_dropout > 0) {
    CounterRng rng = rng_for(MarkerOp::kDropout);
    const int count = static_cast<int>(rng.uniform_int(0, config.max_dropout));
    const std::vector<int> chosen = sample_distinct(rng, kNumMarkers, count);
    const MarkerSet before = m;
    for (int i : chosen) {
      const auto& nb = adj[static_cast<std::size_t>(i)];
      Vec3 mean = Vec3::Zero();
      for (int j : nb) mean += before[static_cast<std::size_t>(j)];
      m[static_cast<std::size_t>(i)] = mean / static_cast<double>(nb.size());
    }
    dropped = count;
    if (count > 0) result.applied.push_back({MarkerOp::kDropout, chosen, {}});
  }
  if (on(MarkerOp::kBlend)) {
    CounterRng rng = rng_for(MarkerOp::kBlend);
    const MarkerSet before = m;
    const double self = config.blend_self_weight;
    for (int i = 0; i < kNumMarkers; ++i) {
      const auto& nb = adj[static_cast<std::size_t>(i)];
      // Flat Dirichlet weights over the neighbours.
      std::vector<double> w(nb.size());
      for (double& x : w) x = -std::log1p(-rng.uniform());
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      Vec3 mix = Vec3::Zero();
      for (std::size_t k = 0; k < nb.size(); ++k) mix += (w[k] / total) * before[static_cast<std::size_t>(nb[k])];
      m[static_cast<std::size_t>(i)] = self * before[static_cast<std::size_t>(i)] + (1.0 - self) * mix;
    }
    result.applied.push_back({MarkerOp::kBlend, {}, {self}});
  }

  // Noise.
  if (on(MarkerOp::kGaussianNoise)) {
    CounterRng rng = rng_for(MarkerOp::kGaussianNoise);
    for (Vec3& p : m) {
      for (int a = 0; a < 3; ++a) p[a] += config.gaussian_sigma_mm * rng.normal();
    }
    AppliedOp rec{MarkerOp::kGaussianNoise, {}, {config.gaussian_sigma_mm}};
    for (int i = 0; i < kNumMarkers; ++i) {
      const bool fire = rng.bernoulli(config.per_marker_dropout_p);
      if (fire && dropped < config.max_dropout) {
        m[static_cast<std::size_t>(i)] = Vec3::Zero();
        rec.markers.push_back(i);
        ++dropped;
      }
    }
    result.applied.push_back(std::move(rec));
  }
  if (on(MarkerOp::kDrift) && config.max_drift_markers > 0) {
    CounterRng rng = rng_for(MarkerOp::kDrift);
    const int count = static_cast<int>(rng.uniform_int(0, config.max_drift_markers));
    const std::vector<int> chosen = sample_distinct(rng, kNumMarkers, count);
    AppliedOp rec{MarkerOp::kDrift, chosen, {}};
    for (int i : chosen) {
      const double length = rng.uniform(0.0, config.drift_mm);
      m[static_cast<std::size_t>(i)] += length * random_direction(rng);
      rec.values.push_back(length);
    }
    if (count > 0) result.applied.push_back(std::move(rec));
  }
  if (on(MarkerOp::kSpike)) {
    CounterRng rng = rng_for(MarkerOp::kSpike);
    if (rng.bernoulli(config.spike_p)) {
      const int i = static_cast<int>(rng.uniform_int(0, kNumMarkers - 1));
      const double multiple = rng.uniform(config.spike_scale_min, config.spike_scale_max);
      m[static_cast<std::size_t>(i)] += multiple * hand_scale_mm * random_direction(rng);
      result.applied.push_back({MarkerOp::kSpike, {i}, {multiple}});
    }
  }
  return result;
}

}  // namespace egoemg
