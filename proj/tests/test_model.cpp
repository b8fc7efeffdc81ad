#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <set>
#include <sstream>

#include "ising/model.hpp"
#include "ising/problems.hpp"
#include "reference.hpp"

using namespace ising;

TEST_CASE("coefficient count is N + N(N-1)/2") {
  CHECK(coefficient_count(1) == 1);
  CHECK(coefficient_count(2) == 3);
  CHECK(coefficient_count(3) == 6);
  CHECK(coefficient_count(9) == 45);
  CHECK(coefficient_count(11) == 66);
  CHECK(coefficient_count(14) == 105);
  CHECK(coefficient_count(15) == 120);
  CHECK_THROWS_AS(coefficient_count(0), std::invalid_argument);
}

TEST_CASE("pair_index enumerates couplings in row order without gaps") {
  for (int n : {2, 3, 5, 9}) {
    std::set<int> seen;
    int expected = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const int idx = pair_index(i, j, n);
        CHECK(idx == expected);
        ++expected;
        CHECK(seen.insert(idx).second);
      }
    CHECK(expected == coefficient_count(n));
  }
  CHECK_THROWS_AS(pair_index(2, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(pair_index(3, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(pair_index(0, 5, 5), std::invalid_argument);
}

TEST_CASE("spin codecs round-trip and validate") {
  CHECK(spin_encode({0, 1, 1, 0}) == SpinVec{-1, 1, 1, -1});
  CHECK(spin_decode(SpinVec{-1, 1, 1, -1}) == std::vector<int>{0, 1, 1, 0});
  CHECK_THROWS_AS(spin_encode({0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spin_decode(SpinVec{0}), std::invalid_argument);

  CHECK(spins_from_bits(0b1011, 4) == SpinVec{1, 1, -1, 1});
  CHECK(bits_value(SpinVec{1, 1, -1, 1}) == 0b1011);
  for (std::uint64_t v : {0ull, 1ull, 6ull, 31ull})
    CHECK(bits_value(spins_from_bits(v, 5)) == v);
  CHECK(bits_value(spins_from_bits(UINT64_MAX, 64)) == UINT64_MAX);
  CHECK_THROWS_AS(spins_from_bits(4, 2), std::invalid_argument);
}

TEST_CASE("feature map lists spins then ordered products") {
  const SpinVec s{1, -1, 1};
  const Eigen::VectorXd phi = feature_map(s);
  REQUIRE(phi.size() == 6);
  CHECK(phi[0] == 1.0);
  CHECK(phi[1] == -1.0);
  CHECK(phi[2] == 1.0);
  CHECK(phi[3] == -1.0);  // s0*s1
  CHECK(phi[4] == 1.0);   // s0*s2
  CHECK(phi[5] == -1.0);  // s1*s2
}

TEST_CASE("hamiltonian equals feature_map dot psi and the reference energy") {
  refimpl::TestRng rng(41);
  for (int n : {2, 4, 7}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd psi = rng.vector(coefficient_count(n), -3.0, 3.0);
      const SpinVec s = rng.spins(static_cast<std::size_t>(n));
      const double direct = hamiltonian(psi, s);
      CHECK(direct == doctest::Approx(feature_map(s).dot(psi)).epsilon(1e-14));
      const refimpl::Quadratic q = refimpl::unpack(psi, n);
      CHECK(direct ==
            doctest::Approx(static_cast<double>(
                                refimpl::energy(q, refimpl::to_int(s))))
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("flip delta matches recomputing the energy") {
  refimpl::TestRng rng(42);
  const int n = 6;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd psi = rng.vector(coefficient_count(n), -2.0, 2.0);
    SpinVec s = rng.spins(n);
    const int k = static_cast<int>(rng.bits() % n);
    const double before = hamiltonian(psi, s);
    const double delta = hamiltonian_flip_delta(psi, s, k);
    s[static_cast<std::size_t>(k)] =
        static_cast<Spin>(-s[static_cast<std::size_t>(k)]);
    CHECK(delta == doctest::Approx(hamiltonian(psi, s) - before)
                       .epsilon(1e-12));
  }
}

TEST_CASE("multiplier truth table covers all operand pairs") {
  const TruthTable table = build_multiplier_truth_table(2, 2, 1);
  CHECK(table.shape() == SystemShape{4, 4, 1});
  CHECK(table.row_count() == 16);

  // Row for a=3, b=2: operands little-endian in the input segment.
  bool found = false;
  for (const TruthTable::Row& row : table.rows()) {
    const std::uint64_t in = bits_value(row.input);
    if ((in & 3) == 3 && (in >> 2) == 2) {
      CHECK(bits_value(row.output) == 6);
      found = true;
    }
  }
  CHECK(found);

  const TruthTable toy = build_multiplier_truth_table(1, 1, 0);
  CHECK(toy.row_count() == 4);
  CHECK(toy.shape() == SystemShape{2, 2, 0});
}

TEST_CASE("truth table validation") {
  SystemShape shape{2, 1, 0};
  std::vector<TruthTable::Row> rows{{{1, 1}, {1}}, {{1, 1}, {-1}}};
  CHECK_THROWS_AS(TruthTable(shape, rows), std::invalid_argument);  // dup input
  rows = {{{1, 1, 1}, {1}}};
  CHECK_THROWS_AS(TruthTable(shape, rows), std::invalid_argument);  // width
  rows = {{{1, 0}, {1}}};
  CHECK_THROWS_AS(TruthTable(shape, rows), std::invalid_argument);  // not spin
  CHECK_THROWS_AS(TruthTable(shape, {}), std::invalid_argument);    // empty

  const TruthTable xor2 = refimpl::xor_table(0);
  const TruthTable lifted = xor2.with_aux_count(3);
  CHECK(lifted.shape().aux == 3);
  CHECK(lifted.row_count() == xor2.row_count());
}

TEST_CASE("truth table text round-trips") {
  const TruthTable table = build_multiplier_truth_table(2, 1, 2);
  std::stringstream buffer;
  write_truth_table(buffer, table);
  const TruthTable reread = read_truth_table(buffer);
  CHECK(reread.shape() == table.shape());
  REQUIRE(reread.row_count() == table.row_count());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    CHECK(reread.rows()[r].input == table.rows()[r].input);
    CHECK(reread.rows()[r].output == table.rows()[r].output);
  }

  std::stringstream again;
  write_truth_table(again, reread);
  CHECK(again.str() == buffer.str());
}

TEST_CASE("auxiliary arrays round-trip between forms") {
  const AuxiliaryArray a = AuxiliaryArray::from_index(2, 4, 0b10110100);
  CHECK(a.row_count() == 4);
  // Bit (row*aux + k) of the index drives row `row`, spin `k`.
  CHECK(a.assignments[0] == SpinVec{-1, -1});
  CHECK(a.assignments[1] == SpinVec{1, -1});
  CHECK(a.assignments[2] == SpinVec{1, 1});
  CHECK(a.assignments[3] == SpinVec{-1, 1});

  const SpinVec flat = a.flatten();
  CHECK(flat.size() == 8);
  const AuxiliaryArray b = AuxiliaryArray::from_flat(2, flat);
  CHECK(b.assignments == a.assignments);

  CHECK_THROWS_AS(AuxiliaryArray::from_index(2, 4, 256),
                  std::invalid_argument);
  CHECK_THROWS_AS(AuxiliaryArray::from_flat(3, flat), std::invalid_argument);
}

TEST_CASE("state sets stack the fibers row by row") {
  refimpl::TestRng rng(7);
  const TruthTable table = refimpl::xor_table(1);
  const AuxiliaryArray aux = rng.aux_array(1, table.row_count());

  SUBCASE("aux-fixed keeps the assigned auxiliary everywhere") {
    const StateSets sets = build_state_sets(table, aux, WrongMode::AuxFixed);
    REQUIRE(sets.row_count() == 4);
    CHECK(sets.correct.rows() == 4);
    CHECK(sets.wrong.rows() == 4);  // one wrong output per row
    for (int r = 0; r < 4; ++r) {
      CHECK(sets.correct_count(r) == 1);
      CHECK(sets.wrong_count(r) == 1);
      const refimpl::Fiber fiber =
          refimpl::row_fiber(table, &aux, static_cast<std::size_t>(r),
                             WrongMode::AuxFixed);
      REQUIRE(fiber.correct.size() == 1);
      REQUIRE(fiber.wrong.size() == 1);
      // Feature rows must match the reference assembly of the same states.
      SpinVec c(fiber.correct[0].begin(), fiber.correct[0].end());
      SpinVec w(fiber.wrong[0].begin(), fiber.wrong[0].end());
      CHECK((sets.correct.row(sets.correct_offset[static_cast<std::size_t>(r)])
                 .transpose() -
             feature_map(c))
                .norm() == 0.0);
      CHECK((sets.wrong.row(sets.wrong_offset[static_cast<std::size_t>(r)])
                 .transpose() -
             feature_map(w))
                .norm() == 0.0);
    }
  }

  SUBCASE("aux-free-wrong multiplies the wrong set by the aux states") {
    const StateSets sets =
        build_state_sets(table, aux, WrongMode::AuxFreeWrong);
    for (int r = 0; r < 4; ++r) CHECK(sets.wrong_count(r) == 2);
    CHECK(sets.wrong.rows() == 8);
  }

  SUBCASE("correct-aux-free widens the correct set") {
    const StateSets sets =
        build_state_sets(table, aux, WrongMode::AuxFixed, true);
    for (int r = 0; r < 4; ++r) CHECK(sets.correct_count(r) == 2);
  }

  SUBCASE("no auxiliary spins works") {
    const TruthTable bare = refimpl::xor_table(0);
    const StateSets sets = build_state_sets(bare, {}, WrongMode::AuxFixed);
    CHECK(sets.correct.rows() == 4);
    CHECK(sets.wrong.rows() == 4);
    CHECK(sets.correct.cols() == bare.shape().coefficient_count());
  }

  SUBCASE("mismatched aux array is rejected") {
    CHECK_THROWS_AS(build_state_sets(table, rng.aux_array(2, 4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_state_sets(table, rng.aux_array(1, 3)),
                    std::invalid_argument);
  }
}

TEST_CASE("constraint counting matches literal enumeration") {
  // 2-input, 2-aux system: 48 ordered (correct, wrong) pairs.
  CHECK(count_constraints(SystemShape{2, 2, 2}) == 48);
  // 4-input, 4-aux system.
  CHECK(count_constraints(SystemShape{4, 4, 4}) == 3840);

  // Literal enumeration: every (input row, aux value, wrong output).
  for (int aux = 0; aux <= 2; ++aux) {
    const TruthTable table = build_multiplier_truth_table(1, 1, aux);
    std::uint64_t literal = 0;
    const std::uint64_t aux_states = 1ULL << aux;
    const std::uint64_t out_states = 1ULL << table.shape().outputs;
    for (std::size_t r = 0; r < table.row_count(); ++r)
      literal += aux_states * (out_states - 1);
    CHECK(count_constraints(table.shape()) == literal);
  }
}

TEST_CASE("aux array counting tracks the double exponential") {
  const AuxArrayCount small = count_aux_arrays(SystemShape{2, 2, 2});
  CHECK(small.exponent == 8);
  CHECK(small.fits_uint64());
  CHECK(small.as_uint64() == 256);
  CHECK(small.str() == "256");

  const AuxArrayCount big = count_aux_arrays(SystemShape{4, 4, 4});
  CHECK(big.exponent == 64);
  CHECK_FALSE(big.fits_uint64());
  CHECK_THROWS_AS(big.as_uint64(), std::overflow_error);
  CHECK(big.str() == "18446744073709551616");

  // Problem 4's shape: 3x3 multiplier, 6 inputs, 3 aux spins per row.
  const AuxArrayCount p4 = count_aux_arrays(SystemShape{6, 6, 3});
  CHECK(p4.exponent == 3 * 64);
}

TEST_CASE("hamiltonian coefficient accessors agree with pair indexing") {
  refimpl::TestRng rng(11);
  const int n = 5;
  HamiltonianCoefficients psi{rng.vector(coefficient_count(n), -1.0, 1.0),
                              {-1.0, 1.0}};
  CHECK(psi.spin_count() == n);
  CHECK(psi.inside_box());
  CHECK(psi.field(3) == psi.values[3]);
  CHECK(psi.coupling(1, 4) == psi.values[pair_index(1, 4, n)]);
  psi.values[0] = 2.0;
  CHECK_FALSE(psi.inside_box());

  HamiltonianCoefficients bad{Eigen::VectorXd::Zero(7), {}};
  CHECK_THROWS_AS(bad.spin_count(), std::invalid_argument);
}
