#include "ising/oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "detail/rng.hpp"

namespace ising::oracle {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

SpinVec spins_from_state_index(std::uint64_t index, int spin_count) {
  return spins_from_bits(index, spin_count);
}

std::uint64_t state_index(std::span<const Spin> spins) {
  return bits_value(spins);
}

ExactDistribution enumerate_distribution(
    const Eigen::VectorXd& psi, const boltzmann::ObjectiveConfig& config) {
  boltzmann::validate_config(config);
  HamiltonianCoefficients coeffs{psi, {}};
  const int n = coeffs.spin_count();
  require(n >= 1 && n <= 20, "enumerate_distribution: guarded to N <= 20");

  const std::uint64_t total = std::uint64_t{1} << n;
  Eigen::VectorXd log_weight(static_cast<Eigen::Index>(total));

  // Gray-code walk: one spin flip per step, O(N) energy update.
  SpinVec state(static_cast<std::size_t>(n), Spin{-1});
  double energy = hamiltonian(psi, state);
  std::uint64_t gray = 0;
  for (std::uint64_t i = 0;; ++i) {
    log_weight[static_cast<Eigen::Index>(gray)] = -config.beta * energy;
    if (i + 1 == total) break;
    const int k = std::countr_zero(i + 1);
    energy += hamiltonian_flip_delta(psi, state, k);
    state[static_cast<std::size_t>(k)] =
        static_cast<Spin>(-state[static_cast<std::size_t>(k)]);
    gray = (i + 1) ^ ((i + 1) >> 1);
  }

  const double log_z = boltzmann::log_sum_exp(log_weight);
  ExactDistribution dist;
  dist.spin_count = n;
  dist.probabilities = (log_weight.array() - log_z).exp();
  return dist;
}

MetropolisResult metropolis_sample(const Eigen::VectorXd& psi, int spin_count,
                                   const boltzmann::ObjectiveConfig& config,
                                   std::uint64_t steps, std::uint64_t seed,
                                   double burn_in_fraction) {
  boltzmann::validate_config(config);
  HamiltonianCoefficients coeffs{psi, {}};
  require(coeffs.spin_count() == spin_count,
          "metropolis_sample: psi does not match spin count");
  require(spin_count >= 1 && spin_count <= 20,
          "metropolis_sample: histogram guarded to N <= 20");
  require(steps >= 1, "metropolis_sample: need at least one step");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0,
          "metropolis_sample: burn-in fraction must be in [0, 1)");

  detail::Rng rng(seed);
  SpinVec state(static_cast<std::size_t>(spin_count));
  for (Spin& s : state) s = static_cast<Spin>(rng.spin());

  MetropolisResult result;
  result.total_steps = steps;
  result.burn_in = static_cast<std::uint64_t>(
      burn_in_fraction * static_cast<double>(steps));
  result.samples = steps - result.burn_in;
  Eigen::VectorXd counts =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::uint64_t{1}
                                                      << spin_count));

  std::uint64_t index = state_index(state);
  for (std::uint64_t step = 0; step < steps; ++step) {
    const int k = static_cast<int>(rng.index(
        static_cast<std::size_t>(spin_count)));
    const double delta = hamiltonian_flip_delta(psi, state, k);
    // Accept with min(1, exp(-beta * delta)).
    if (delta <= 0.0 || rng.uniform() < std::exp(-config.beta * delta)) {
      state[static_cast<std::size_t>(k)] =
          static_cast<Spin>(-state[static_cast<std::size_t>(k)]);
      index ^= std::uint64_t{1} << k;
    }
    if (step >= result.burn_in)
      counts[static_cast<Eigen::Index>(index)] += 1.0;
  }
  result.frequencies = counts / static_cast<double>(result.samples);
  return result;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  require(p.size() == q.size(), "total_variation: size mismatch");
  return 0.5 * (p - q).lpNorm<1>();
}

BestAuxResult brute_force_best_aux(const TruthTable& table,
                                   const Interval& box,
                                   const boltzmann::ObjectiveConfig& config,
                                   const GridSearchSpec& grid,
                                   WrongMode mode) {
  boltzmann::validate_config(config);
  require(box.valid(), "brute_force_best_aux: empty box");
  require(table.shape().aux >= 1,
          "brute_force_best_aux: shape has no auxiliary spins");
  require(grid.subspace_rank >= 1 && grid.points_per_axis >= 2,
          "brute_force_best_aux: degenerate grid");
  const std::size_t rows = table.row_count();
  const std::size_t bits = static_cast<std::size_t>(table.shape().aux) * rows;
  require(bits <= 16, "brute_force_best_aux: guarded to aux * rows <= 16");

  // Fixed set of psi candidates: points of a full grid over a random
  // low-rank subspace of the box, clamped to the box.
  const int dim = table.shape().coefficient_count();
  detail::Rng rng(grid.seed);
  Eigen::MatrixXd directions(dim, grid.subspace_rank);
  for (int c = 0; c < grid.subspace_rank; ++c) {
    for (int r = 0; r < dim; ++r)
      directions(r, c) = 2.0 * rng.uniform() - 1.0;
    directions.col(c) /= directions.col(c).lpNorm<Eigen::Infinity>();
  }

  std::vector<Eigen::VectorXd> candidates;
  const double half_width = 0.5 * (box.hi - box.lo);
  const double center = 0.5 * (box.lo + box.hi);
  std::vector<int> ticks(static_cast<std::size_t>(grid.subspace_rank), 0);
  while (true) {
    Eigen::VectorXd psi = Eigen::VectorXd::Constant(dim, center);
    for (int c = 0; c < grid.subspace_rank; ++c) {
      const double frac =
          static_cast<double>(ticks[static_cast<std::size_t>(c)]) /
              (grid.points_per_axis - 1) * 2.0 - 1.0;
      psi += half_width * frac * directions.col(c);
    }
    for (int k = 0; k < dim; ++k) psi[k] = box.clamp(psi[k]);
    candidates.push_back(std::move(psi));

    int c = 0;
    for (; c < grid.subspace_rank; ++c) {
      if (++ticks[static_cast<std::size_t>(c)] < grid.points_per_axis) break;
      ticks[static_cast<std::size_t>(c)] = 0;
    }
    if (c == grid.subspace_rank) break;
  }

  BestAuxResult result;
  double best_rho = -1.0;
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t a = 0; a < total; ++a) {
    const AuxiliaryArray aux =
        AuxiliaryArray::from_index(table.shape().aux, rows, a);
    const StateSets sets = build_state_sets(table, aux, mode);
    // Score by the true worst row, not the smoothed envelope: the grid is
    // far too coarse for the smoothing overhead to matter.
    double best_f = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& psi : candidates) {
      const double worst =
          boltzmann::objective(psi, sets, config).row_log_wrong.maxCoeff();
      best_f = std::min(best_f, worst);
    }
    const double rho = boltzmann::success_probability(best_f);
    ++result.evaluated;
    if (rho > best_rho) {
      best_rho = rho;
      result.best = aux;
      result.rho = rho;
    }
  }
  return result;
}

}  // namespace ising::oracle
