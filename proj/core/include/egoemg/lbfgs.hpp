#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace egoemg {

/// Returns f(x) and writes the gradient into `grad` (already sized like x).
using DifferentiableFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_outer_steps = 100;
  // Quasi-Newton iterations per outer step. Curvature history persists
  // across outer steps, so the total iteration budget is outer * inner.
  int max_inner_iters = 50;
  // Objective evaluations allowed inside one line search.
  int max_line_search_evals = 25;
  double learning_rate = 0.1;
  int history_size = 10;
  double gradient_tolerance = 1e-8;
  double sufficient_decrease = 1e-4;  // c1
  double curvature = 0.9;             // c2
  int max_bracketing = 20;
  // Converged when the loss improved by less than this relative amount over
  // `stall_window` accepted steps.
  double relative_decrease_tolerance = 1e-12;
  int stall_window = 3;
  // Upper bound on the infinity norm of the first trial step of each line
  // search; 0 disables the cap.
  double max_step = 0.0;
  // Optional symmetric positive definite M for the initial inverse Hessian,
  // H0 = gamma * M with gamma = s'y / y'My from the newest pair. Empty means
  // the identity (classic scalar scaling).
  Eigen::MatrixXd initial_inverse_hessian;
};

struct LbfgsStep {
  double loss = 0.0;
  double step_length = 0.0;
  int evaluations = 0;
  bool armijo = false;
  bool curvature = false;
};

enum class LbfgsStop {
  kGradientTolerance,
  kStalled,
  kStepBudget,
  kLineSearchFailed,
  kNonFinite,
};

std::string to_string(LbfgsStop stop);

struct LbfgsResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  Eigen::VectorXd gradient;
  bool converged = false;
  LbfgsStop stop = LbfgsStop::kStepBudget;
  int outer_steps = 0;       // outer steps started
  int iterations = 0;        // accepted quasi-Newton iterations
  int evaluations = 0;
  std::vector<LbfgsStep> trace;  // one entry per accepted step
};

/// Limited-memory BFGS with a strong Wolfe line search (cubic interpolation
/// in both the bracketing and zoom phases). Steepest-descent iterations (no
/// curvature history yet, or history reset) start the search at
/// `learning_rate`, scaled by min(1, 1/|g|_1) on the very first iteration;
/// quasi-Newton iterations start at the unit step.
/// Never throws for a failed search: the best iterate is returned with
/// converged = false.
/// A failed search first restarts from plain steepest descent with the
/// history cleared; a second consecutive failure ends the solve.
LbfgsResult lbfgs_minimize(const DifferentiableFn& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

}  // namespace egoemg
