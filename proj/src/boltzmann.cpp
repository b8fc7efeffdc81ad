#include "ising/boltzmann.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ising::boltzmann {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(1 + e^x) without overflow and with full relative precision for
/// large |x|.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double block_log_sum_exp(const double* xs, int n) {
  double m = kNegInf;
  for (int k = 0; k < n; ++k) m = std::max(m, xs[k]);
  if (!std::isfinite(m)) return m;  // empty or all -inf
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::exp(xs[k] - m);
  return m + std::log(acc);
}

struct RowStats {
  double lse_correct;  // log sum_R e^(-beta H)
  double lse_wrong;    // log sum_W e^(-beta H)
  double log_wrong;    // log p_W
  double log_right;    // log p_R = log(1 - p_W)
};

/// Inputs are the log-weights -beta*H of the row's correct and wrong
/// states. Writing d = lse_correct - lse_wrong,
///   log p_W = -log(1 + e^d)  and  log p_R = -log(1 + e^-d),
/// which keeps full precision on both sides: the naive
/// lse_wrong - lse(all) cancels catastrophically once p_W is near 1.
RowStats row_stats(const double* correct, int n_correct, const double* wrong,
                   int n_wrong) {
  RowStats st;
  st.lse_correct = block_log_sum_exp(correct, n_correct);
  st.lse_wrong = block_log_sum_exp(wrong, n_wrong);
  const double d = st.lse_correct - st.lse_wrong;
  st.log_wrong = -softplus(d);
  st.log_right = -softplus(-d);
  return st;
}

void check_arguments(const Eigen::VectorXd& psi, const StateSets& sets,
                     const ObjectiveConfig& config) {
  validate_config(config);
  if (psi.size() != sets.correct.cols())
    throw std::invalid_argument(
        "objective: psi dimension does not match state sets");
  if (sets.row_count() < 1)
    throw std::invalid_argument("objective: state sets are empty");
}

}  // namespace

void validate_config(const ObjectiveConfig& config) {
  if (!(config.beta > 0.0) || !std::isfinite(config.beta))
    throw std::invalid_argument("config: beta must be positive and finite");
  if (!(config.lambda > 0.0) || !std::isfinite(config.lambda))
    throw std::invalid_argument("config: lambda must be positive and finite");
}

double log_sum_exp(std::span<const double> xs) {
  return block_log_sum_exp(xs.data(), static_cast<int>(xs.size()));
}

double log_sum_exp(const Eigen::VectorXd& xs) {
  return block_log_sum_exp(xs.data(), static_cast<int>(xs.size()));
}

double exact_state_probability(const Eigen::VectorXd& psi,
                               std::span<const Spin> spins,
                               const ObjectiveConfig& config) {
  validate_config(config);
  const int n = static_cast<int>(spins.size());
  if (n < 1 || n > 26)
    throw std::invalid_argument(
        "exact_state_probability: enumeration limited to 1 <= N <= 26");

  const double target = -config.beta * hamiltonian(psi, spins);

  // Partition function over all 2^N states: walk the binary-reflected Gray
  // sequence so each step is a single spin flip with an O(N) energy delta.
  SpinVec state(static_cast<std::size_t>(n), Spin{-1});
  double energy = hamiltonian(psi, state);

  // Streaming max-shifted accumulation of log sum exp.
  double shift = kNegInf;
  double acc = 0.0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t i = 0;; ++i) {
    const double x = -config.beta * energy;
    if (x <= shift) {
      acc += std::exp(x - shift);
    } else {
      acc = acc * std::exp(shift - x) + 1.0;
      shift = x;
    }
    if (i + 1 == total) break;
    const int k = std::countr_zero(i + 1);
    energy += hamiltonian_flip_delta(psi, state, k);
    state[static_cast<std::size_t>(k)] =
        static_cast<Spin>(-state[static_cast<std::size_t>(k)]);
  }
  const double log_z = shift + std::log(acc);
  return std::exp(target - log_z);
}

double log_wrong_probability(const Eigen::VectorXd& psi,
                             const StateSets& sets, int row,
                             const ObjectiveConfig& config) {
  check_arguments(psi, sets, config);
  if (row < 0 || row >= sets.row_count())
    throw std::invalid_argument("log_wrong_probability: row out of range");

  const int c0 = sets.correct_offset[static_cast<std::size_t>(row)];
  const int c1 = sets.correct_offset[static_cast<std::size_t>(row) + 1];
  const int w0 = sets.wrong_offset[static_cast<std::size_t>(row)];
  const int w1 = sets.wrong_offset[static_cast<std::size_t>(row) + 1];
  const Eigen::VectorXd ec =
      -config.beta * (sets.correct.middleRows(c0, c1 - c0) * psi);
  const Eigen::VectorXd ew =
      -config.beta * (sets.wrong.middleRows(w0, w1 - w0) * psi);
  return row_stats(ec.data(), c1 - c0, ew.data(), w1 - w0).log_wrong;
}

double wrong_probability(const Eigen::VectorXd& psi, const StateSets& sets,
                         int row, const ObjectiveConfig& config) {
  return std::exp(log_wrong_probability(psi, sets, row, config));
}

ObjectiveEvaluation objective(const Eigen::VectorXd& psi,
                              const StateSets& sets,
                              const ObjectiveConfig& config,
                              bool with_gradient) {
  check_arguments(psi, sets, config);
  const int rows = sets.row_count();

  // Log-weights of every stacked state in two matrix-vector products.
  const Eigen::VectorXd ec = -config.beta * (sets.correct * psi);
  const Eigen::VectorXd ew = -config.beta * (sets.wrong * psi);

  ObjectiveEvaluation eval;
  eval.row_log_wrong.resize(rows);
  std::vector<RowStats> stats(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    const int c0 = sets.correct_offset[static_cast<std::size_t>(i)];
    const int w0 = sets.wrong_offset[static_cast<std::size_t>(i)];
    stats[static_cast<std::size_t>(i)] =
        row_stats(ec.data() + c0, sets.correct_count(i), ew.data() + w0,
                  sets.wrong_count(i));
    eval.row_log_wrong[i] = stats[static_cast<std::size_t>(i)].log_wrong;
  }

  eval.value = log_sum_exp(config.lambda * eval.row_log_wrong) / config.lambda;

  if (with_gradient) {
    // d f / d psi = sum_i w_i * beta * p_R^(i) * (avg_R phi - avg_W phi),
    // with w_i = exp(lambda (log p_W^(i) - f)) the smooth-max weights and
    // the averages Boltzmann-weighted within each block. Assembling the
    // per-state coefficients first turns the sum into two transposed
    // matrix-vector products.
    Eigen::VectorXd coef_correct = Eigen::VectorXd::Zero(ec.size());
    Eigen::VectorXd coef_wrong = Eigen::VectorXd::Zero(ew.size());
    for (int i = 0; i < rows; ++i) {
      const RowStats& st = stats[static_cast<std::size_t>(i)];
      const double log_scale =
          config.lambda * (st.log_wrong - eval.value) + st.log_right;
      const int c0 = sets.correct_offset[static_cast<std::size_t>(i)];
      const int w0 = sets.wrong_offset[static_cast<std::size_t>(i)];
      for (int r = 0; r < sets.correct_count(i); ++r)
        coef_correct[c0 + r] =
            std::exp(log_scale + ec[c0 + r] - st.lse_correct);
      for (int w = 0; w < sets.wrong_count(i); ++w)
        coef_wrong[w0 + w] = std::exp(log_scale + ew[w0 + w] - st.lse_wrong);
    }
    eval.gradient = config.beta * (sets.correct.transpose() * coef_correct -
                                   sets.wrong.transpose() * coef_wrong);
  }
  return eval;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& psi, const StateSets& sets,
                         const ObjectiveConfig& config) {
  return std::move(*objective(psi, sets, config, true).gradient);
}

Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& psi, double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("finite difference: step must be positive");
  Eigen::VectorXd x = psi;
  Eigen::VectorXd grad(psi.size());
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + step;
    const double hi = fn(x);
    x[k] = orig - step;
    const double lo = fn(x);
    x[k] = orig;
    grad[k] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

Eigen::VectorXd finite_difference_gradient(const Eigen::VectorXd& psi,
                                           const StateSets& sets,
                                           const ObjectiveConfig& config,
                                           double step) {
  return finite_difference_gradient(
      [&](const Eigen::VectorXd& x) {
        return objective(x, sets, config).value;
      },
      psi, step);
}

double success_probability(double f_star) {
  if (std::isnan(f_star))
    throw std::invalid_argument("success_probability: f_star is NaN");
  const double rho = -std::expm1(f_star);
  return rho < 0.0 ? 0.0 : (rho > 1.0 ? 1.0 : rho);
}

}  // namespace ising::boltzmann
