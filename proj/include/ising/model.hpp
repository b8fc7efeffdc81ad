#pragma once

/// Spin systems for combinational circuits: state layout, Hamiltonian
/// coefficients, truth tables, auxiliary spin assignments, and the
/// correct/wrong state sets that the training objective is built from.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ising {

/// A single spin value, strictly -1 or +1.
using Spin = std::int8_t;
using SpinVec = std::vector<Spin>;

/// Bit <-> spin codec. Bit 0 maps to spin -1, bit 1 to spin +1.
SpinVec spin_encode(const std::vector<int>& bits);
std::vector<int> spin_decode(std::span<const Spin> spins);

/// Little-endian unpack of `value` into `width` spins (bit k -> spin k).
SpinVec spins_from_bits(std::uint64_t value, int width);
/// Inverse of spins_from_bits. Requires width <= 64.
std::uint64_t bits_value(std::span<const Spin> spins);

/// Closed interval [lo, hi]; the box constraint on every coefficient.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

/// Sizes of the three spin groups. Layout of every full state vector is
/// [inputs | outputs | auxiliaries], in that order.
struct SystemShape {
  int inputs = 0;
  int outputs = 0;
  int aux = 0;

  int total() const { return inputs + outputs + aux; }
  /// Dimension of the coefficient vector: N fields + N(N-1)/2 couplings.
  int coefficient_count() const;
  bool operator==(const SystemShape&) const = default;
};

/// Throws std::invalid_argument unless inputs >= 1, outputs >= 1, aux >= 0.
void validate_shape(const SystemShape& shape);

/// Number of coefficients for a system of `spins` spins.
int coefficient_count(int spins);

/// Index of the coupling J_{ij} (i < j, zero-based) inside the coefficient
/// vector; fields occupy indices [0, spins). Couplings are ordered
/// (0,1), (0,2), ..., (0,N-1), (1,2), ...
int pair_index(int i, int j, int spins);

/// Coefficient vector psi = (h_0..h_{N-1}, J_{01}, J_{02}, ...) together
/// with the box every entry must lie in.
struct HamiltonianCoefficients {
  Eigen::VectorXd values;
  Interval box;

  int spin_count() const;
  double field(int i) const { return values[i]; }
  double coupling(int i, int j) const;
  /// True iff every entry lies inside the box.
  bool inside_box() const;
};

/// Feature row phi(s) = (s_0..s_{N-1}, s_0 s_1, s_0 s_2, ...), so that
/// H(s) = phi(s) . psi.
Eigen::VectorXd feature_map(std::span<const Spin> spins);

/// Energy of one state, computed directly from the quadratic form.
double hamiltonian(const Eigen::VectorXd& coefficients,
                   std::span<const Spin> spins);

/// Energy change caused by flipping spin k of `spins` (state unchanged).
double hamiltonian_flip_delta(const Eigen::VectorXd& coefficients,
                              std::span<const Spin> spins, int k);

/// One full spin state split into its input/output/aux groups.
struct SpinVector {
  SystemShape shape;
  SpinVec spins;  // length shape.total(), layout [inputs|outputs|aux]

  static SpinVector assemble(const SystemShape& shape,
                             std::span<const Spin> input,
                             std::span<const Spin> output,
                             std::span<const Spin> aux);
  std::span<const Spin> input() const;
  std::span<const Spin> output() const;
  std::span<const Spin> aux() const;
};

/// Desired input/output behaviour of the circuit. Inputs are pairwise
/// distinct; every row's widths match the shape.
struct TruthTable {
  struct Row {
    SpinVec input;
    SpinVec output;
  };

  TruthTable(SystemShape shape, std::vector<Row> rows);

  const SystemShape& shape() const { return shape_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }

  /// Same rows with a different auxiliary budget.
  TruthTable with_aux_count(int aux) const;

 private:
  SystemShape shape_;
  std::vector<Row> rows_;
};

/// Truth table of a p-bit by q-bit binary multiplier: inputs are the
/// operand bits, outputs the (p+q)-bit product, all little-endian.
TruthTable build_multiplier_truth_table(int p_bits, int q_bits,
                                        int aux_count = 0);

/// Plain-text truth table: header line "shape inputs outputs aux", then one
/// row per line as space-separated -1/1 spins, inputs then outputs.
void write_truth_table(std::ostream& out, const TruthTable& table);
TruthTable read_truth_table(std::istream& in);

/// One auxiliary assignment per truth-table row.
struct AuxiliaryArray {
  int aux_count = 0;
  std::vector<SpinVec> assignments;

  std::size_t row_count() const { return assignments.size(); }
  /// Row-major concatenation (row 0 aux spins, then row 1, ...).
  SpinVec flatten() const;
  static AuxiliaryArray from_flat(int aux_count, std::span<const Spin> flat);
  /// Assignment number `index` in lexicographic order: bit (row*aux + k)
  /// of `index` gives aux spin k of that row. Requires aux*rows <= 63.
  static AuxiliaryArray from_index(int aux_count, std::size_t rows,
                                   std::uint64_t index);
};

/// How the wrong set of each row is built.
///  AuxFixed: wrong outputs keep the row's auxiliary assignment.
///  AuxFreeWrong: wrong outputs range over every auxiliary state.
enum class WrongMode { AuxFixed, AuxFreeWrong };

const char* to_string(WrongMode mode);
WrongMode parse_wrong_mode(const std::string& text);

/// Feature rows of the correct and wrong states of every truth-table row,
/// stacked into two matrices. Row block i of `correct` (resp. `wrong`)
/// spans matrix rows [correct_offset[i], correct_offset[i+1]).
struct StateSets {
  SystemShape shape;
  Eigen::MatrixXd correct;
  Eigen::MatrixXd wrong;
  std::vector<int> correct_offset;
  std::vector<int> wrong_offset;

  int row_count() const {
    return static_cast<int>(correct_offset.size()) - 1;
  }
  int correct_count(int row) const {
    return correct_offset[row + 1] - correct_offset[row];
  }
  int wrong_count(int row) const {
    return wrong_offset[row + 1] - wrong_offset[row];
  }
};

/// Builds the per-row state sets. With correct_aux_free the correct set of
/// each row contains every auxiliary completion of the desired output
/// instead of the assigned one only.
StateSets build_state_sets(const TruthTable& table,
                           const AuxiliaryArray& aux,
                           WrongMode mode = WrongMode::AuxFixed,
                           bool correct_aux_free = false);

/// Number of (correct, wrong) energy-order constraints:
/// 2^(inputs+aux) * (2^inputs - 1) for the square multiplier layout.
/// Throws std::overflow_error if the count does not fit in 64 bits.
std::uint64_t count_constraints(const SystemShape& shape);

/// Cardinality of the auxiliary search space, 2^(aux * 2^inputs), kept as
/// an exponent because it overflows every machine integer early.
struct AuxArrayCount {
  std::uint64_t exponent = 0;  // count = 2^exponent

  bool fits_uint64() const { return exponent < 64; }
  std::uint64_t as_uint64() const;  // throws std::overflow_error if too big
  /// Exact decimal digits; exponents above 2^20 throw std::overflow_error.
  std::string str() const;
};

AuxArrayCount count_aux_arrays(const SystemShape& shape);

}  // namespace ising
