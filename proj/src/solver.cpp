#include "ising/solver.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "detail/rng.hpp"

namespace ising::solver {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr double kMinStepScale = 1e-20;
constexpr double kCurvatureFloor = 1e-12;

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Interval& box) {
  return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

/// Inf-norm of x - proj(x - g): the first-order stationarity measure for
/// box constraints; zero exactly at KKT points.
double projected_gradient_norm(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& g, const Interval& box) {
  return (x - clamp_to_box(x - g, box)).lpNorm<Eigen::Infinity>();
}

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;  // 1 / (s . y)
};

/// Two-loop recursion; initial Hessian gamma * I with
/// gamma = (s.y)/(y.y) of the newest pair.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g,
                                const std::deque<CurvaturePair>& pairs) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
    q -= alpha[k] * pairs[k].y;
  }
  if (!pairs.empty()) {
    const CurvaturePair& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * pairs[k].y.dot(q);
    q += (alpha[k] - beta) * pairs[k].s;
  }
  return -q;
}

struct StartOutcome {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  bool usable = false;
};

StartOutcome run_single_start(const ValueGradientFn& fn, Eigen::VectorXd x,
                              const Interval& box,
                              const SolverOptions& options, int start,
                              const TraceSink& trace) {
  StartOutcome out;
  Eigen::VectorXd g(x.size());
  double f = fn(x, &g);
  if (!std::isfinite(f)) return out;

  std::deque<CurvaturePair> pairs;
  double step_norm = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double pg = projected_gradient_norm(x, g, box);
    if (trace) trace({start, iter, f, step_norm, pg});
    out.iterations = iter;
    if (pg <= options.gradient_tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd d = lbfgs_direction(g, pairs);
    const double gd = g.dot(d);
    if (!(gd < -1e-12 * g.norm() * d.norm())) {
      d = -g;  // curvature history unusable here; fall back to steepest descent
      pairs.clear();
    }

    // Backtracking Armijo search along the projected path. The sufficient
    // decrease test uses the actual (projected) displacement, which keeps
    // it valid when the trial point lands on the box faces. A quasi-Newton
    // direction can project onto an ascent displacement at active bounds,
    // so when its whole arc fails the search retries once along the
    // gradient, whose projected displacements always descend.
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        if (pairs.empty()) break;  // first pass already searched -g
        pairs.clear();
        d = -g;
      }
      double t = pairs.empty() ? 1.0 / std::max(1.0, g.norm()) : 1.0;
      while (t >= kMinStepScale) {
        x_new = clamp_to_box(x + t * d, box);
        const Eigen::VectorXd dx = x_new - x;
        const double dx_norm = dx.lpNorm<Eigen::Infinity>();
        if (dx_norm == 0.0) break;  // projection erased the step
        f_new = fn(x_new, nullptr);
        const double directional = g.dot(dx);
        if (std::isfinite(f_new) &&
            f_new <= f + kArmijoSlope * std::min(directional, 0.0) &&
            f_new < f) {
          accepted = true;
          break;
        }
        t *= kBacktrackFactor;
      }
    }
    if (!accepted) {
      // No descent point found along the arc; the iterate is as stationary
      // as the line search can certify.
      out.converged = pg <= options.gradient_tolerance;
      break;
    }

    Eigen::VectorXd g_new(x.size());
    const double f_check = fn(x_new, &g_new);
    (void)f_check;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > kCurvatureFloor * s.norm() * y.norm()) {
      pairs.push_back({s, y, 1.0 / sy});
      if (std::ssize(pairs) > options.memory) pairs.pop_front();
    }

    step_norm = s.lpNorm<Eigen::Infinity>();
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    if (step_norm <= options.step_tolerance) {
      out.converged = true;
      out.iterations = iter + 1;
      break;
    }
    out.iterations = iter + 1;
  }

  out.x = std::move(x);
  out.value = f;
  out.usable = true;
  return out;
}

}  // namespace

void validate_options(const SolverOptions& options) {
  if (options.max_iterations < 1)
    throw std::invalid_argument("solver: max_iterations must be >= 1");
  if (!(options.gradient_tolerance > 0.0))
    throw std::invalid_argument("solver: gradient_tolerance must be > 0");
  if (!(options.step_tolerance >= 0.0))
    throw std::invalid_argument("solver: step_tolerance must be >= 0");
  if (options.starts < 1)
    throw std::invalid_argument("solver: starts must be >= 1");
  if (options.memory < 1)
    throw std::invalid_argument("solver: memory must be >= 1");
}

FunctionSolveResult minimize_function(const ValueGradientFn& fn, int dim,
                                      const Interval& box,
                                      const SolverOptions& options,
                                      const TraceSink& trace) {
  validate_options(options);
  if (dim < 1) throw std::invalid_argument("solver: dimension must be >= 1");
  if (!box.valid()) throw std::invalid_argument("solver: empty box");

  FunctionSolveResult result;
  result.start_values.assign(static_cast<std::size_t>(options.starts),
                             std::numeric_limits<double>::quiet_NaN());
  bool have_best = false;

  const double center = 0.5 * (box.lo + box.hi);
  const double half_width = 0.5 * (box.hi - box.lo);
  for (int start = 0; start < options.starts; ++start) {
    Eigen::VectorXd x0(dim);
    if (start == 0) {
      // The origin sits on the ridge between the saturated plateaus of the
      // objective, where gradients are still informative; random points deep
      // in the box are usually numerically stationary.
      x0 = clamp_to_box(Eigen::VectorXd::Zero(dim), box);
    } else {
      detail::Rng rng(
          detail::mix_seed(options.seed, static_cast<std::uint64_t>(start)));
      const double scale = std::ldexp(1.0, 1 - start);  // 1, 1/2, 1/4, ...
      for (int k = 0; k < dim; ++k)
        x0[k] = center + half_width * scale * (2.0 * rng.uniform() - 1.0);
    }

    StartOutcome outcome =
        run_single_start(fn, std::move(x0), box, options, start, trace);
    if (!outcome.usable) continue;
    result.start_values[static_cast<std::size_t>(start)] = outcome.value;
    if (!have_best || outcome.value < result.value) {
      have_best = true;
      result.x = std::move(outcome.x);
      result.value = outcome.value;
      result.iterations = outcome.iterations;
      result.converged = outcome.converged;
    }
  }
  if (!have_best)
    throw std::runtime_error("solver: no start produced a finite value");
  return result;
}

SolveResult minimize(const StateSets& sets, const Interval& box,
                     const boltzmann::ObjectiveConfig& config,
                     const SolverOptions& options, const TraceSink& trace,
                     GradientMode mode) {
  boltzmann::validate_config(config);
  const int dim = sets.shape.coefficient_count();

  ValueGradientFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad == nullptr)
      return boltzmann::objective(x, sets, config).value;
    if (mode == GradientMode::FiniteDifference) {
      *grad = boltzmann::finite_difference_gradient(x, sets, config);
      return boltzmann::objective(x, sets, config).value;
    }
    boltzmann::ObjectiveEvaluation eval =
        boltzmann::objective(x, sets, config, true);
    *grad = std::move(*eval.gradient);
    return eval.value;
  };

  FunctionSolveResult fr = minimize_function(fn, dim, box, options, trace);

  SolveResult result;
  result.psi = HamiltonianCoefficients{std::move(fr.x), box};
  result.f_star = fr.value;
  result.rho = boltzmann::success_probability(fr.value);
  result.iterations = fr.iterations;
  result.converged = fr.converged;
  result.start_values = std::move(fr.start_values);
  return result;
}

FeasibilityResult feasibility_check(const StateSets& sets,
                                    const Interval& box,
                                    const SolverOptions& options) {
  validate_options(options);
  const int dim = sets.shape.coefficient_count();
  const int rows = sets.row_count();

  // Value/gradient of 1/2 * sum max(0, 1 + H_c - H_w)^2 over all pairs.
  ValueGradientFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Eigen::VectorXd energy_c = sets.correct * x;
    const Eigen::VectorXd energy_w = sets.wrong * x;
    Eigen::VectorXd coef_c, coef_w;
    if (grad) {
      coef_c = Eigen::VectorXd::Zero(energy_c.size());
      coef_w = Eigen::VectorXd::Zero(energy_w.size());
    }
    double value = 0.0;
    for (int i = 0; i < rows; ++i) {
      const int c0 = sets.correct_offset[static_cast<std::size_t>(i)];
      const int w0 = sets.wrong_offset[static_cast<std::size_t>(i)];
      for (int r = 0; r < sets.correct_count(i); ++r) {
        for (int w = 0; w < sets.wrong_count(i); ++w) {
          const double v = 1.0 + energy_c[c0 + r] - energy_w[w0 + w];
          if (v <= 0.0) continue;
          value += 0.5 * v * v;
          if (grad) {
            coef_c[c0 + r] += v;
            coef_w[w0 + w] -= v;
          }
        }
      }
    }
    if (grad)
      *grad = sets.correct.transpose() * coef_c +
              sets.wrong.transpose() * coef_w;
    return value;
  };

  // The squared hinge is convex, so one descent from the origin reaches the
  // global minimum; the multi-start schedule adds nothing here.
  SolverOptions single = options;
  single.starts = 1;
  FunctionSolveResult fr = minimize_function(fn, dim, box, single, {});

  // Judge feasibility on the plain hinge and report the worst margin.
  const Eigen::VectorXd energy_c = sets.correct * fr.x;
  const Eigen::VectorXd energy_w = sets.wrong * fr.x;
  double hinge = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows; ++i) {
    const int c0 = sets.correct_offset[static_cast<std::size_t>(i)];
    const int w0 = sets.wrong_offset[static_cast<std::size_t>(i)];
    for (int r = 0; r < sets.correct_count(i); ++r) {
      for (int w = 0; w < sets.wrong_count(i); ++w) {
        const double gap = energy_w[w0 + w] - energy_c[c0 + r];
        hinge += std::max(0.0, 1.0 - gap);
        margin = std::min(margin, gap);
      }
    }
  }

  FeasibilityResult result;
  result.feasible = hinge <= 1e-6;
  result.margin = margin;
  result.psi = HamiltonianCoefficients{std::move(fr.x), box};
  result.hinge = hinge;
  return result;
}

}  // namespace ising::solver
