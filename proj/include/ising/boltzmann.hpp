#pragma once

/// Smoothed min-max failure-probability objective over Boltzmann weights,
/// its analytic gradient, and the exact state distribution for small
/// systems. States are weighted exp(-beta * H).

#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "ising/model.hpp"

namespace ising::boltzmann {

/// Temperature and smoothing parameters. beta > 0, lambda > 0.
struct ObjectiveConfig {
  double beta = 1.0;
  double lambda = 100.0;
};

void validate_config(const ObjectiveConfig& config);

/// log(sum_k exp(x[k])), max-shifted. Empty input yields -inf.
double log_sum_exp(std::span<const double> xs);
double log_sum_exp(const Eigen::VectorXd& xs);

/// Boltzmann probability of one full state, partition function taken over
/// all 2^N states by enumeration. Guarded to N <= 26.
double exact_state_probability(const Eigen::VectorXd& psi,
                               std::span<const Spin> spins,
                               const ObjectiveConfig& config);

/// log of the failure probability of truth-table row `row`:
/// log p_W = log [ sum_W e^(-beta H) / (sum_R e^(-beta H) + sum_W e^(-beta H)) ].
/// Always finite and <= 0 for finite psi.
double log_wrong_probability(const Eigen::VectorXd& psi,
                             const StateSets& sets, int row,
                             const ObjectiveConfig& config);

/// exp of the above.
double wrong_probability(const Eigen::VectorXd& psi, const StateSets& sets,
                         int row, const ObjectiveConfig& config);

/// Objective value plus the per-row log failure probabilities and,
/// optionally, the gradient with respect to psi.
struct ObjectiveEvaluation {
  double value = 0.0;
  Eigen::VectorXd row_log_wrong;  // one entry per truth-table row
  std::optional<Eigen::VectorXd> gradient;
};

/// f(psi) = (1/lambda) log sum_i exp(lambda log p_W^(i)), the smooth upper
/// envelope of the worst row. Satisfies
///   max_i log p_W^(i) <= f <= max_i log p_W^(i) + log(rows)/lambda.
ObjectiveEvaluation objective(const Eigen::VectorXd& psi,
                              const StateSets& sets,
                              const ObjectiveConfig& config,
                              bool with_gradient = false);

/// Gradient of the objective at psi.
Eigen::VectorXd gradient(const Eigen::VectorXd& psi, const StateSets& sets,
                         const ObjectiveConfig& config);

/// Central-difference gradient of an arbitrary scalar function; the
/// reference implementation gradients are validated against this.
Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& psi, double step = 1e-5);

/// Same for the objective itself.
Eigen::VectorXd finite_difference_gradient(const Eigen::VectorXd& psi,
                                           const StateSets& sets,
                                           const ObjectiveConfig& config,
                                           double step = 1e-5);

/// Probability that the trained circuit leaves every row in a correct
/// state: rho = 1 - exp(f_star), clamped to [0, 1].
double success_probability(double f_star);

}  // namespace ising::boltzmann
