#pragma once

/// Slow reference machinery: exact Boltzmann distributions by state
/// enumeration, a single-flip Metropolis sampler, and exhaustive search
/// over auxiliary assignments. Everything here trades speed for being
/// checkable by hand.

#include <cstdint>

#include <Eigen/Dense>

#include "ising/boltzmann.hpp"
#include "ising/model.hpp"

namespace ising::oracle {

/// State index convention: bit k of the index set means spin k is +1.
SpinVec spins_from_state_index(std::uint64_t index, int spin_count);
std::uint64_t state_index(std::span<const Spin> spins);

/// Full Boltzmann distribution over all 2^N states. Guarded to N <= 20.
struct ExactDistribution {
  int spin_count = 0;
  Eigen::VectorXd probabilities;  // indexed by state_index
};

ExactDistribution enumerate_distribution(const Eigen::VectorXd& psi,
                                         const boltzmann::ObjectiveConfig& config);

/// Empirical state frequencies from single-flip Metropolis sampling. The
/// first burn_in_fraction of the chain is discarded. Guarded to N <= 20
/// because it returns the full histogram.
struct MetropolisResult {
  Eigen::VectorXd frequencies;  // indexed by state_index, sums to 1
  std::uint64_t total_steps = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t samples = 0;
};

MetropolisResult metropolis_sample(const Eigen::VectorXd& psi, int spin_count,
                                   const boltzmann::ObjectiveConfig& config,
                                   std::uint64_t steps, std::uint64_t seed,
                                   double burn_in_fraction = 0.1);

/// Total variation distance between two distributions on the same state
/// space: (1/2) sum |p - q|.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Coarse psi grid for the exhaustive auxiliary search: a few random box
/// directions, a few points per axis. Deliberately cheap; the point of the
/// search is ranking auxiliary assignments, not polishing psi.
struct GridSearchSpec {
  int subspace_rank = 3;
  int points_per_axis = 5;
  std::uint64_t seed = 0;
};

struct BestAuxResult {
  AuxiliaryArray best;
  double rho = 0.0;          // best success probability found
  std::uint64_t evaluated = 0;  // auxiliary assignments scored
};

/// Scores every auxiliary assignment (2^(aux * rows) of them) by the best
/// success probability over the psi grid and returns the argmax; ties go
/// to the lowest assignment index. Guarded to aux * rows <= 16.
BestAuxResult brute_force_best_aux(const TruthTable& table,
                                   const Interval& box,
                                   const boltzmann::ObjectiveConfig& config,
                                   const GridSearchSpec& grid = {},
                                   WrongMode mode = WrongMode::AuxFixed);

}  // namespace ising::oracle
