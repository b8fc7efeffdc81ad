#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ising/boltzmann.hpp"
#include "ising/problems.hpp"
#include "reference.hpp"

using namespace ising;
using boltzmann::ObjectiveConfig;

namespace {

std::vector<refimpl::Fiber> all_fibers(const TruthTable& table,
                                       const AuxiliaryArray* aux,
                                       WrongMode mode) {
  std::vector<refimpl::Fiber> fibers;
  for (std::size_t r = 0; r < table.row_count(); ++r)
    fibers.push_back(refimpl::row_fiber(table, aux, r, mode));
  return fibers;
}

}  // namespace

TEST_CASE("log_sum_exp handles offsets, singletons, and empties") {
  using boltzmann::log_sum_exp;
  const std::vector<double> pair{0.0, 0.0};
  CHECK(log_sum_exp(pair) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<double> shifted{1000.0, 1000.0 + std::log(3.0)};
  CHECK(log_sum_exp(shifted) ==
        doctest::Approx(1000.0 + std::log(4.0)).epsilon(1e-15));

  const std::vector<double> lone{-3.5};
  CHECK(log_sum_exp(lone) == -3.5);

  CHECK(log_sum_exp(std::vector<double>{}) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("exact state probabilities match the reference distribution") {
  refimpl::TestRng rng(101);
  const ObjectiveConfig config{1.0, 100.0};
  for (int n : {2, 5, 8}) {
    const Eigen::VectorXd psi = rng.vector(coefficient_count(n), -2.0, 2.0);
    const refimpl::Quadratic q = refimpl::unpack(psi, n);
    const std::vector<double> ref = refimpl::distribution(q, config.beta);
    double sum = 0.0;
    for (std::uint64_t st = 0; st < (1ULL << n); ++st) {
      const SpinVec s = spins_from_bits(st, n);
      const double p = boltzmann::exact_state_probability(psi, s, config);
      CHECK(std::abs(p - ref[st]) <= 1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("beta rescales the distribution") {
  refimpl::TestRng rng(103);
  const int n = 4;
  const Eigen::VectorXd psi = rng.vector(coefficient_count(n), -1.0, 1.0);
  const refimpl::Quadratic q = refimpl::unpack(psi, n);
  const std::vector<double> ref = refimpl::distribution(q, 2.5L);
  const SpinVec s = spins_from_bits(9, n);
  CHECK(boltzmann::exact_state_probability(psi, s, {2.5, 100.0}) ==
        doctest::Approx(ref[9]).epsilon(1e-12));
}

TEST_CASE("row failure probabilities match long double enumeration") {
  refimpl::TestRng rng(107);
  const TruthTable table = build_multiplier_truth_table(2, 2, 1);
  const AuxiliaryArray aux = rng.aux_array(1, table.row_count());
  const ObjectiveConfig config{1.0, 100.0};

  for (WrongMode mode : {WrongMode::AuxFixed, WrongMode::AuxFreeWrong}) {
    const StateSets sets = build_state_sets(table, aux, mode);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd psi =
          rng.vector(sets.shape.coefficient_count(), -4.0, 4.0);
      const refimpl::Quadratic q =
          refimpl::unpack(psi, sets.shape.total());
      for (int row = 0; row < sets.row_count(); ++row) {
        const refimpl::Fiber fiber = refimpl::row_fiber(
            table, &aux, static_cast<std::size_t>(row), mode);
        const long double expected =
            refimpl::row_log_wrong(q, fiber, config.beta);
        const double got =
            boltzmann::log_wrong_probability(psi, sets, row, config);
        CHECK(got == doctest::Approx(static_cast<double>(expected))
                         .epsilon(1e-10));
        CHECK(got <= 0.0);
        const double p = boltzmann::wrong_probability(psi, sets, row, config);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }
}

TEST_CASE("log p_W keeps precision when the wrong states dominate") {
  // Single row, one correct and one wrong state, wrong far below correct:
  // p_W -> 1 and log p_W = -e^(-gap) to first order. A cancelling
  // implementation returns 0 here.
  const TruthTable table(SystemShape{2, 1, 0},
                         {{{-1, 1}, {-1}}});
  const StateSets sets = build_state_sets(table, {}, WrongMode::AuxFixed);
  // psi with only the output field set: h_out = t makes the wrong state
  // (output +1) have energy +t and the correct -t.
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(6);
  const double t = -15.0;  // wrong state lower: gap = 2|t| = 30
  psi[2] = t;
  const double got =
      boltzmann::log_wrong_probability(psi, sets, 0, {1.0, 100.0});
  // log p_W = -log(1 + e^(-30)): tiny but strictly negative.
  const double expected = -std::log1p(std::exp(-30.0));
  CHECK(got < 0.0);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  // Relative agreement, not just absolute: the value is ~9.4e-14.
  CHECK(std::abs(got - expected) <= 1e-15 * std::abs(expected) + 1e-300);
}

TEST_CASE("objective equals reference and respects the sandwich bound") {
  refimpl::TestRng rng(109);
  const ObjectiveConfig config{1.0, 100.0};
  for (const ProblemPreset& preset : multiplier_problems()) {
    const TruthTable table = preset.truth_table();
    const AuxiliaryArray aux = rng.aux_array(preset.aux, table.row_count());
    const StateSets sets = build_state_sets(table, aux, WrongMode::AuxFixed);
    const double slack =
        std::log(static_cast<double>(table.row_count())) / config.lambda;

    for (int rep = 0; rep < 3; ++rep) {
      const Eigen::VectorXd psi = rng.vector(
          sets.shape.coefficient_count(), preset.box.lo / 8, preset.box.hi / 8);
      const boltzmann::ObjectiveEvaluation eval =
          boltzmann::objective(psi, sets, config);
      const double worst = eval.row_log_wrong.maxCoeff();
      CHECK(eval.value >= worst - 1e-12);
      CHECK(eval.value <= worst + slack + 1e-12);
    }
  }

  // Value agreement against the long double reference on a small shape.
  const TruthTable table = refimpl::xor_table(1);
  const AuxiliaryArray aux = rng.aux_array(1, table.row_count());
  const StateSets sets = build_state_sets(table, aux, WrongMode::AuxFixed);
  const std::vector<refimpl::Fiber> fibers =
      all_fibers(table, &aux, WrongMode::AuxFixed);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd psi =
        rng.vector(sets.shape.coefficient_count(), -4.0, 4.0);
    const refimpl::Quadratic q = refimpl::unpack(psi, sets.shape.total());
    const long double expected =
        refimpl::smoothed_objective(q, fibers, config.beta, config.lambda);
    CHECK(boltzmann::objective(psi, sets, config).value ==
          doctest::Approx(static_cast<double>(expected)).epsilon(1e-11));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  refimpl::TestRng rng(113);
  const ObjectiveConfig config{1.0, 100.0};
  const TruthTable table = build_multiplier_truth_table(2, 2, 1);
  const AuxiliaryArray aux = rng.aux_array(1, table.row_count());
  const StateSets sets = build_state_sets(table, aux, WrongMode::AuxFixed);

  auto value = [&](const Eigen::VectorXd& x) {
    return boltzmann::objective(x, sets, config).value;
  };

  for (int rep = 0; rep < 20; ++rep) {
    // Mix of full-box and shrunk draws so both saturated and active
    // regions of the objective are exercised.
    const double scale = std::ldexp(4.0, -(rep % 5));
    const Eigen::VectorXd psi =
        rng.vector(sets.shape.coefficient_count(), -scale, scale);
    const Eigen::VectorXd analytic = boltzmann::gradient(psi, sets, config);
    const Eigen::VectorXd numeric = refimpl::fd_gradient(value, psi, 1e-5);
    CHECK(refimpl::rel_l2(analytic, numeric) <= 1e-5);
  }

  // The library's own finite-difference helper agrees with the test's.
  const Eigen::VectorXd psi =
      rng.vector(sets.shape.coefficient_count(), -1.0, 1.0);
  const Eigen::VectorXd lib_fd =
      boltzmann::finite_difference_gradient(psi, sets, config, 1e-5);
  CHECK((lib_fd - refimpl::fd_gradient(value, psi, 1e-5)).norm() <= 1e-12);
}

TEST_CASE("gradient vanishes by symmetry at the origin of the bare xor") {
  const TruthTable table = refimpl::xor_table(0);
  const StateSets sets = build_state_sets(table, {}, WrongMode::AuxFixed);
  const ObjectiveConfig config{1.0, 100.0};
  const Eigen::VectorXd zero =
      Eigen::VectorXd::Zero(sets.shape.coefficient_count());

  const boltzmann::ObjectiveEvaluation eval =
      boltzmann::objective(zero, sets, config, true);
  // All rows tie at p_W = 1/2, so f = log(1/2) + log(4)/lambda exactly.
  CHECK(eval.value == doctest::Approx(std::log(0.5) + std::log(4.0) / 100.0)
                          .epsilon(1e-14));
  CHECK(eval.gradient->lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("objective stays finite across the full dynamic range") {
  refimpl::TestRng rng(127);
  const ObjectiveConfig config{1.0, 100.0};
  for (const ProblemPreset& preset : multiplier_problems()) {
    const TruthTable table = preset.truth_table();
    const AuxiliaryArray aux = rng.aux_array(preset.aux, table.row_count());
    const StateSets sets = build_state_sets(table, aux, WrongMode::AuxFixed);
    for (double magnitude : {1.0, 1e2, 1e4}) {
      Eigen::VectorXd psi =
          rng.vector(sets.shape.coefficient_count(), -magnitude, magnitude);
      const boltzmann::ObjectiveEvaluation eval =
          boltzmann::objective(psi, sets, config, true);
      CHECK(std::isfinite(eval.value));
      CHECK(eval.gradient->allFinite());
      CHECK(eval.row_log_wrong.allFinite());
    }
  }
}

TEST_CASE("success probability clamps and inverts the objective") {
  using boltzmann::success_probability;
  CHECK(success_probability(0.0) == 0.0);
  CHECK(success_probability(0.5) == 0.0);  // f above 0 clamps
  CHECK(success_probability(std::log(0.5)) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(success_probability(-1e-18) ==
        doctest::Approx(1e-18).epsilon(1e-6));  // -expm1 keeps tiny values
  CHECK(success_probability(-std::numeric_limits<double>::infinity()) == 1.0);
  CHECK_THROWS_AS(
      success_probability(std::numeric_limits<double>::quiet_NaN()),
      std::invalid_argument);
}

TEST_CASE("configuration and argument validation") {
  const TruthTable table = refimpl::xor_table(0);
  const StateSets sets = build_state_sets(table, {}, WrongMode::AuxFixed);
  const Eigen::VectorXd psi = Eigen::VectorXd::Zero(6);
  CHECK_THROWS_AS(boltzmann::objective(psi, sets, {0.0, 100.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(boltzmann::objective(psi, sets, {1.0, -1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      boltzmann::objective(Eigen::VectorXd::Zero(5), sets, {1.0, 100.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(boltzmann::log_wrong_probability(psi, sets, 4, {1.0, 100.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      boltzmann::exact_state_probability(psi, SpinVec(27, Spin{1}),
                                         {1.0, 100.0}),
      std::invalid_argument);
}
