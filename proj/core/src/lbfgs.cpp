#include "egoemg/lbfgs.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace egoemg {

std::string to_string(LbfgsStop stop) {
  switch (stop) {
    case LbfgsStop::kGradientTolerance: return "gradient-tolerance";
    case LbfgsStop::kStalled: return "stalled";
    case LbfgsStop::kStepBudget: return "step-budget";
    case LbfgsStop::kLineSearchFailed: return "line-search-failed";
    case LbfgsStop::kNonFinite: return "non-finite";
  }
  return "unknown";
}

namespace {

using Eigen::VectorXd;
using Eigen::MatrixXd;

// Minimizer of the cubic interpolating (x1, f1, g1) and (x2, f2, g2),
// clamped to [lo, hi]; falls back to the midpoint when the cubic has no
// real minimizer.
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2,
                       double lo, double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (d2_sq >= 0.0 && std::isfinite(d2_sq)) {
    const double d2 = std::sqrt(d2_sq);
    double t;
    if (x1 <= x2) {
      t = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    } else {
      t = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    }
    if (std::isfinite(t)) return std::clamp(t, lo, hi);
  }
  return 0.5 * (lo + hi);
}

struct Probe {
  double t = 0.0;
  double f = 0.0;
  VectorXd g;
  double gtd = 0.0;
};

struct SearchOutcome {
  bool success = false;
  Probe accepted;  // on failure: lowest Armijo-satisfying probe, if any
  bool have_fallback = false;
  int evaluations = 0;
  bool armijo = false;
  bool curvature = false;
};

class StrongWolfeSearch {
 public:
  StrongWolfeSearch(const DifferentiableFn& fn, const VectorXd& x, const VectorXd& d, double f0,
                    double gtd0, const LbfgsOptions& opt)
      : fn_(fn), x_(x), d_(d), f0_(f0), gtd0_(gtd0), opt_(opt), d_max_(d.cwiseAbs().maxCoeff()) {}

  SearchOutcome run(double t_init) {
    SearchOutcome out;
    Probe prev{0.0, f0_, VectorXd(), gtd0_};
    Probe cur;
    if (!evaluate(t_init, cur)) return finish_failure(out);

    Probe lo, hi;
    bool bracketed = false;
    for (int iter = 0;; ++iter) {
      if (!armijo(cur) || (iter > 0 && cur.f >= prev.f)) {
        lo = prev;
        hi = cur;
        bracketed = true;
        break;
      }
      if (curvature(cur)) return finish_success(out, cur);
      if (cur.gtd >= 0.0) {
        lo = cur;
        hi = prev;
        bracketed = true;
        break;
      }
      if (iter + 1 >= opt_.max_bracketing || evals_ >= opt_.max_line_search_evals) break;
      const double min_step = cur.t + 0.01 * (cur.t - prev.t);
      const double max_step = 10.0 * cur.t;
      const double t_next = cubic_minimizer(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, min_step, max_step);
      prev = cur;
      if (!evaluate(t_next, cur)) return finish_failure(out);
    }
    if (!bracketed) return finish_failure(out);
    return zoom(out, lo, hi);
  }

 private:
  bool armijo(const Probe& p) const { return p.f <= f0_ + opt_.sufficient_decrease * p.t * gtd0_; }
  bool curvature(const Probe& p) const { return std::abs(p.gtd) <= -opt_.curvature * gtd0_; }

  bool evaluate(double t, Probe& p) {
    if (evals_ >= opt_.max_line_search_evals) return false;
    ++evals_;
    p.t = t;
    p.g.resize(x_.size());
    p.f = fn_(x_ + t * d_, p.g);
    if (!std::isfinite(p.f) || !p.g.allFinite()) return false;
    p.gtd = p.g.dot(d_);
    if (armijo(p) && p.f < f0_ && (!best_ || p.f < best_->f)) best_ = p;
    return true;
  }

  SearchOutcome zoom(SearchOutcome& out, Probe lo, Probe hi) {
    bool insufficient_progress = false;
    while (evals_ < opt_.max_line_search_evals) {
      const double lo_t = std::min(lo.t, hi.t);
      const double hi_t = std::max(lo.t, hi.t);
      if ((hi_t - lo_t) * d_max_ < 1e-14 * std::max(1.0, x_.cwiseAbs().maxCoeff())) break;
      double t = cubic_minimizer(lo.t, lo.f, lo.gtd, hi.t, hi.f, hi.gtd, lo_t, hi_t);
      // Keep the trial away from the interval ends unless progress stalls.
      const double eps = 0.1 * (hi_t - lo_t);
      if (std::min(hi_t - t, t - lo_t) < eps) {
        if (insufficient_progress || t >= hi_t || t <= lo_t) {
          t = std::abs(t - hi_t) < std::abs(t - lo_t) ? hi_t - eps : lo_t + eps;
          insufficient_progress = false;
        } else {
          insufficient_progress = true;
        }
      } else {
        insufficient_progress = false;
      }
      Probe cur;
      if (!evaluate(t, cur)) break;
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (curvature(cur)) return finish_success(out, cur);
        if (cur.gtd * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return finish_failure(out);
  }

  SearchOutcome finish_success(SearchOutcome& out, const Probe& p) {
    out.success = true;
    out.accepted = p;
    out.evaluations = evals_;
    out.armijo = armijo(p);
    out.curvature = curvature(p);
    return out;
  }

  SearchOutcome finish_failure(SearchOutcome& out) {
    out.success = false;
    out.evaluations = evals_;
    if (best_) {
      out.have_fallback = true;
      out.accepted = *best_;
    }
    return out;
  }

  const DifferentiableFn& fn_;
  const VectorXd& x_;
  const VectorXd& d_;
  double f0_;
  double gtd0_;
  const LbfgsOptions& opt_;
  double d_max_;
  int evals_ = 0;
  std::optional<Probe> best_;
};

struct CurvaturePair {
  VectorXd s;
  VectorXd y;
  double rho = 0.0;
};

VectorXd two_loop_direction(const VectorXd& g, const std::deque<CurvaturePair>& history,
                            const MatrixXd& h0) {
  const bool scaled = h0.rows() == g.size();
  VectorXd q = -g;
  if (history.empty()) return scaled ? VectorXd(h0 * q) : q;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  const CurvaturePair& last = history.back();
  if (scaled) {
    const VectorXd h0y = h0 * last.y;
    q = (h0 * q) * (last.s.dot(last.y) / last.y.dot(h0y));
  } else {
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const DifferentiableFn& objective, const VectorXd& x0,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = x0;
  result.gradient.resize(x0.size());
  result.loss = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.loss) || !result.gradient.allFinite()) {
    result.stop = LbfgsStop::kNonFinite;
    return result;
  }
  if (result.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
    result.converged = true;
    result.stop = LbfgsStop::kGradientTolerance;
    return result;
  }

  std::deque<CurvaturePair> history;
  std::vector<double> losses{result.loss};
  const MatrixXd& h0 = options.initial_inverse_hessian;
  if (h0.size() != 0 && (h0.rows() != x0.size() || h0.cols() != x0.size() || !h0.allFinite() ||
                         Eigen::LLT<MatrixXd>(h0).info() != Eigen::Success)) {
    result.stop = LbfgsStop::kNonFinite;
    return result;
  }
  const long budget = static_cast<long>(options.max_outer_steps) * options.max_inner_iters;
  const MatrixXd identity_scaling;
  bool plain_restart = false;
  for (int step = 0; step < budget; ++step) {
    result.outer_steps = step / options.max_inner_iters + 1;
    const MatrixXd& scaling = plain_restart ? identity_scaling : options.initial_inverse_hessian;
    VectorXd d = two_loop_direction(result.gradient, history, scaling);
    double gtd = result.gradient.dot(d);
    if (!(gtd < 0.0) || !d.allFinite()) {
      history.clear();
      d = two_loop_direction(result.gradient, history, scaling);
      gtd = result.gradient.dot(d);
    }
    // The learning rate sizes steepest-descent steps only; once curvature
    // pairs exist the two-loop direction is already scaled and the unit step
    // is tried first.
    double t_init = 1.0;
    if (history.empty()) {
      t_init = step == 0 ? std::min(1.0, 1.0 / result.gradient.lpNorm<1>()) * options.learning_rate
                         : options.learning_rate;
    }

    if (options.max_step > 0.0) {
      t_init = std::min(t_init, options.max_step / d.cwiseAbs().maxCoeff());
    }
    StrongWolfeSearch search(objective, result.x, d, result.loss, gtd, options);
    const SearchOutcome ls = search.run(t_init);
    result.evaluations += ls.evaluations;
    if (!ls.success) {
      if (ls.have_fallback) {
        result.x += ls.accepted.t * d;
        result.loss = ls.accepted.f;
        result.gradient = ls.accepted.g;
      }
      // One restart from plain steepest descent before giving up.
      const bool was_plain = plain_restart && history.empty();
      if (!was_plain && result.gradient.cwiseAbs().maxCoeff() >= options.gradient_tolerance) {
        history.clear();
        plain_restart = true;
        continue;
      }
      result.stop = LbfgsStop::kLineSearchFailed;
      result.converged = result.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance;
      return result;
    }

    const VectorXd s = ls.accepted.t * d;
    const VectorXd y = ls.accepted.g - result.gradient;
    const double ys = y.dot(s);
    // Scale-free curvature test; an absolute threshold starves the history
    // once steps become small near the optimum.
    if (ys > 1e-10 * s.norm() * y.norm()) {
      if (static_cast<int>(history.size()) == options.history_size) history.pop_front();
      history.push_back({s, y, 1.0 / ys});
    }
    plain_restart = false;
    result.x += s;
    result.loss = ls.accepted.f;
    result.gradient = ls.accepted.g;
    result.iterations = step + 1;
    result.trace.push_back({result.loss, ls.accepted.t, ls.evaluations, ls.armijo, ls.curvature});
    losses.push_back(result.loss);

    if (result.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
      result.converged = true;
      result.stop = LbfgsStop::kGradientTolerance;
      return result;
    }
    const auto window = static_cast<std::size_t>(options.stall_window);
    if (losses.size() > window) {
      const double older = losses[losses.size() - 1 - window];
      if (older - result.loss <= options.relative_decrease_tolerance * std::abs(older)) {
        result.converged = true;
        result.stop = LbfgsStop::kStalled;
          return result;
      }
    }
  }
  result.stop = LbfgsStop::kStepBudget;
  return result;
}

}  // namespace egoemg
