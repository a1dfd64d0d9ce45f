#include "egoemg/ik_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Cholesky>

#include "egoemg/error.hpp"

namespace egoemg {
namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Warm starts are pulled this fraction of the range inside each limit so the
// inverse reparameterization stays well conditioned.
constexpr double kWarmStartMargin = 0.01;
// Cap on the first trial step of each line search, in logit units. Large
// early steps otherwise drive DoFs into saturation, where cold solves can
// settle at a limit-pinned local minimum.
constexpr double kMaxLogitStep = 1.0;

// Initial inverse-Hessian model for the optimizer, built from the
// Gauss-Newton matrix of the loss in z at the start point. A warm start sits
// next to the optimum of this zero-residual fit, so the full inverse is
// nearly exact there and the solve finishes in a few quasi-Newton steps. From
// the mid-range cold start that model is misleading and only its diagonal is
// kept; the landmark lever arms still differ by orders of magnitude between
// the wrist and a DIP joint, which this Jacobi scaling absorbs.
Eigen::MatrixXd gauss_newton_model(const DofVector& z, const HandSkeleton& skeleton, bool full) {
  const JointAngles22 angles = to_angles(sigmoid_reparam(z, skeleton));
  const DofVector dadz = sigmoid_reparam_derivative(z, skeleton);
  const LandmarkJacobian jz = landmark_jacobian(skeleton, angles) * dadz.asDiagonal();
  Eigen::MatrixXd h = (2.0 / kNumLandmarks) * (jz.transpose() * jz);
  const double ridge = 1e-8 * h.diagonal().maxCoeff() + 1e-300;
  h.diagonal().array() += ridge;
  if (full) return h.llt().solve(Eigen::MatrixXd::Identity(kNumDofs, kNumDofs));
  return h.diagonal().cwiseInverse().asDiagonal();
}

}  // namespace

void IkConfig::validate() const {
  if (outer_steps < 1 || max_inner_iters < 1 || history_size < 1 || chunk_size < 1) {
    fail(ErrorKind::kConfiguration, "IK counts must all be >= 1");
  }
  if (!(learning_rate > 0.0)) fail(ErrorKind::kConfiguration, "IK learning rate must be > 0");
  if (!(gradient_tolerance >= 0.0)) fail(ErrorKind::kConfiguration, "IK gradient tolerance must be >= 0");
}

LbfgsOptions IkConfig::optimizer_options() const {
  LbfgsOptions opt;
  opt.max_outer_steps = outer_steps;
  opt.max_inner_iters = max_inner_iters;
  opt.learning_rate = learning_rate;
  opt.history_size = history_size;
  opt.gradient_tolerance = gradient_tolerance;
  return opt;
}

DofVector sigmoid_reparam(const DofVector& z, const HandSkeleton& skeleton) {
  DofVector a;
  for (int d = 0; d < kNumDofs; ++d) {
    const JointLimit& lim = skeleton.limit(d);
    const double value = lim.min_deg + lim.span() * logistic(z[d]);
    // Saturated logits would round onto the bound; keep the result inside.
    a[d] = std::clamp(value, std::nextafter(lim.min_deg, lim.max_deg),
                      std::nextafter(lim.max_deg, lim.min_deg));
  }
  return a;
}

DofVector inverse_sigmoid_reparam(const DofVector& a, const HandSkeleton& skeleton) {
  DofVector z;
  for (int d = 0; d < kNumDofs; ++d) {
    const JointLimit& lim = skeleton.limit(d);
    if (!(a[d] > lim.min_deg && a[d] < lim.max_deg)) {
      fail(ErrorKind::kDomain, "angle " + std::to_string(a[d]) + " for " + dof::name(d) +
                                   " is not strictly inside its limits");
    }
    const double u = (a[d] - lim.min_deg) / lim.span();
    z[d] = std::log(u) - std::log1p(-u);
  }
  return z;
}

DofVector sigmoid_reparam_derivative(const DofVector& z, const HandSkeleton& skeleton) {
  DofVector out;
  for (int d = 0; d < kNumDofs; ++d) {
    const double s = logistic(z[d]);
    out[d] = skeleton.limit(d).span() * s * (1.0 - s);
  }
  return out;
}

JointAngles22 to_angles(const DofVector& a, Handedness hand) {
  JointAngles22 out = JointAngles22::zero(hand);
  for (int d = 0; d < kNumDofs; ++d) out[d] = a[d];
  return out;
}

DofVector to_vector(const JointAngles22& angles) {
  DofVector v;
  for (int d = 0; d < kNumDofs; ++d) v[d] = angles[d];
  return v;
}

std::pair<double, DofVector> ik_loss_and_gradient(const DofVector& z, const LandmarkSet& targets,
                                                  const HandSkeleton& skeleton) {
  const JointAngles22 angles = to_angles(sigmoid_reparam(z, skeleton));
  const LandmarkSet predicted = forward_kinematics(skeleton, angles);
  const LandmarkJacobian jac = landmark_jacobian(skeleton, angles);

  Eigen::Matrix<double, 3 * kNumLandmarks, 1> residual;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const auto k = static_cast<std::size_t>(i);
    residual.segment<3>(3 * i) = predicted.points[k] - targets.points[k];
  }
  const double loss = residual.squaredNorm() / kNumLandmarks;
  const DofVector grad_a = (2.0 / kNumLandmarks) * (jac.transpose() * residual);
  return {loss, grad_a.cwiseProduct(sigmoid_reparam_derivative(z, skeleton))};
}

IkResult fit_joint_angles(const LandmarkSet& targets, const HandSkeleton& skeleton, const IkConfig& config,
                          const std::optional<JointAngles22>& warm_start,
                          const std::optional<Similarity>& alignment) {
  config.validate();
  LandmarkSet aligned = targets;
  if (alignment) {
    for (Vec3& p : aligned.points) p = alignment->apply(p);
  }
  for (const Vec3& p : aligned.points) {
    if (!p.allFinite()) fail(ErrorKind::kInvalidInput, "IK targets must be finite");
  }

  DofVector z0 = DofVector::Zero();
  if (warm_start) {
    DofVector a = to_vector(*warm_start);
    for (int d = 0; d < kNumDofs; ++d) {
      const JointLimit& lim = skeleton.limit(d);
      const double margin = kWarmStartMargin * lim.span();
      a[d] = std::clamp(a[d], lim.min_deg + margin, lim.max_deg - margin);
    }
    z0 = inverse_sigmoid_reparam(a, skeleton);
  }

  const DifferentiableFn objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    auto [loss, g] = ik_loss_and_gradient(z, aligned, skeleton);
    grad = g;
    return loss;
  };
  LbfgsOptions options = config.optimizer_options();
  options.initial_inverse_hessian = gauss_newton_model(z0, skeleton, warm_start.has_value());
  options.max_step = kMaxLogitStep;
  const LbfgsResult opt = lbfgs_minimize(objective, Eigen::VectorXd(z0), options);

  IkResult result;
  result.angles = to_angles(sigmoid_reparam(DofVector(opt.x), skeleton));
  const LandmarkSet fitted = forward_kinematics(skeleton, result.angles);
  double sum_sq = 0.0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double sq = (fitted.points[k] - aligned.points[k]).squaredNorm();
    result.per_landmark_error[k] = std::sqrt(sq);
    sum_sq += sq;
  }
  result.residual_mse = sum_sq / kNumLandmarks;
  result.converged = opt.converged;
  result.iterations_used = opt.iterations;
  result.evaluations = opt.evaluations;
  return result;
}

std::vector<IkResult> fit_sequence(const std::vector<LandmarkSet>& frames, const HandSkeleton& skeleton,
                                   const IkConfig& config) {
  config.validate();
  std::vector<IkResult> out;
  out.reserve(frames.size());
  std::optional<JointAngles22> previous;
  const auto chunk = static_cast<std::size_t>(config.chunk_size);
  for (std::size_t begin = 0; begin < frames.size(); begin += chunk) {
    const std::size_t end = std::min(frames.size(), begin + chunk);
    for (std::size_t f = begin; f < end; ++f) {
      out.push_back(fit_joint_angles(frames[f], skeleton, config, previous));
      previous = out.back().angles;
    }
  }
  return out;
}

std::vector<std::vector<IkResult>> fit_batch(const std::vector<std::vector<LandmarkSet>>& sequences,
                                             const HandSkeleton& skeleton, const IkConfig& config,
                                             unsigned max_threads) {
  if (sequences.empty()) fail(ErrorKind::kInvalidInput, "fit_batch needs at least one sequence");
  config.validate();
  std::vector<std::vector<IkResult>> results(sequences.size());
  unsigned threads = max_threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : max_threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(sequences.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned id) {
    try {
      for (std::size_t i = next++; i < sequences.size(); i = next++) {
        results[i] = fit_sequence(sequences[i], skeleton, config);
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace egoemg
