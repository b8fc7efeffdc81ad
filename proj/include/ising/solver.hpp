#pragma once

/// Box-constrained smooth minimization: projected limited-memory BFGS with
/// a deterministic multi-start schedule, plus the hinge feasibility check
/// for auxiliary assignments.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ising/boltzmann.hpp"
#include "ising/model.hpp"

namespace ising::solver {

struct SolverOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;   // on the projected gradient, inf-norm
  double step_tolerance = 1e-10;      // on the accepted step, inf-norm
  int starts = 8;
  std::uint64_t seed = 0;
  int memory = 10;                    // L-BFGS history pairs
};

void validate_options(const SolverOptions& options);

/// One line of the optimization trace.
struct TraceRecord {
  int start = 0;
  int iteration = 0;
  double value = 0.0;
  double step_norm = 0.0;                // inf-norm of the previous step
  double projected_gradient_norm = 0.0;  // inf-norm
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// Smooth objective for the generic minimizer: returns the value at x and,
/// when `grad` is non-null, fills the gradient.
using ValueGradientFn =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct FunctionSolveResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;      // iterations spent by the winning start
  bool converged = false;  // winning start met a tolerance
  std::vector<double> start_values;  // best value per start, NaN on failure
};

/// Minimizes fn over the box. Start schedule: start 0 is the origin
/// (clamped into the box); start k >= 1 is uniform in the box shrunk
/// around its center by 2^(1-k). The schedule is deterministic in
/// options.seed. Throws std::runtime_error if every start fails to
/// produce a finite value.
FunctionSolveResult minimize_function(const ValueGradientFn& fn, int dim,
                                      const Interval& box,
                                      const SolverOptions& options,
                                      const TraceSink& trace = {});

/// Whether minimize() computes the analytic gradient or falls back to
/// central differences (for benchmarking the analytic path against).
enum class GradientMode { Analytic, FiniteDifference };

struct SolveResult {
  HamiltonianCoefficients psi;
  double f_star = 0.0;
  double rho = 0.0;  // success probability 1 - exp(f_star), clamped
  int iterations = 0;
  bool converged = false;
  std::vector<double> start_values;
};

/// Minimizes the smoothed failure objective for the given state sets.
SolveResult minimize(const StateSets& sets, const Interval& box,
                     const boltzmann::ObjectiveConfig& config,
                     const SolverOptions& options,
                     const TraceSink& trace = {},
                     GradientMode mode = GradientMode::Analytic);

struct FeasibilityResult {
  bool feasible = false;
  /// min over (correct, wrong) pairs of H(wrong) - H(correct) at the
  /// returned psi; >= 1 - hinge tolerance when feasible.
  double margin = 0.0;
  HamiltonianCoefficients psi;
  double hinge = 0.0;  // residual sum_i max(0, 1 + H_correct - H_wrong)
};

/// Decides whether some psi in the box separates every correct state from
/// every wrong state of its row by a unit energy margin. The hinge loss
/// sum max(0, 1 + H_correct - H_wrong) is zero exactly on such psi; the
/// minimization runs on its square, which has a continuous gradient, and
/// feasibility is judged on the plain hinge at the solution.
FeasibilityResult feasibility_check(const StateSets& sets,
                                    const Interval& box,
                                    const SolverOptions& options);

}  // namespace ising::solver
