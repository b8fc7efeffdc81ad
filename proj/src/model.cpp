#include "ising/model.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace ising {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void check_spins(std::span<const Spin> spins, const char* what) {
  for (Spin s : spins)
    require(s == 1 || s == -1,
            std::string(what) + ": spin values must be -1 or +1");
}

}  // namespace

SpinVec spin_encode(const std::vector<int>& bits) {
  SpinVec out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    require(bits[i] == 0 || bits[i] == 1, "spin_encode: bits must be 0 or 1");
    out[i] = bits[i] ? Spin{1} : Spin{-1};
  }
  return out;
}

std::vector<int> spin_decode(std::span<const Spin> spins) {
  check_spins(spins, "spin_decode");
  std::vector<int> out(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) out[i] = spins[i] > 0;
  return out;
}

SpinVec spins_from_bits(std::uint64_t value, int width) {
  require(width >= 0 && width <= 64, "spins_from_bits: width out of range");
  require(width == 64 || (value >> width) == 0,
          "spins_from_bits: value does not fit in width");
  SpinVec out(static_cast<std::size_t>(width));
  for (int k = 0; k < width; ++k)
    out[static_cast<std::size_t>(k)] = (value >> k) & 1 ? Spin{1} : Spin{-1};
  return out;
}

std::uint64_t bits_value(std::span<const Spin> spins) {
  require(spins.size() <= 64, "bits_value: more than 64 spins");
  check_spins(spins, "bits_value");
  std::uint64_t value = 0;
  for (std::size_t k = 0; k < spins.size(); ++k)
    if (spins[k] > 0) value |= std::uint64_t{1} << k;
  return value;
}

int coefficient_count(int spins) {
  require(spins >= 1, "coefficient_count: need at least one spin");
  return spins + spins * (spins - 1) / 2;
}

int SystemShape::coefficient_count() const {
  return ising::coefficient_count(total());
}

void validate_shape(const SystemShape& shape) {
  require(shape.inputs >= 1, "shape: inputs must be >= 1");
  require(shape.outputs >= 1, "shape: outputs must be >= 1");
  require(shape.aux >= 0, "shape: aux must be >= 0");
}

int pair_index(int i, int j, int spins) {
  require(0 <= i && i < j && j < spins, "pair_index: need 0 <= i < j < N");
  // Couplings with first index i start after those of 0..i-1; row i holds
  // N-1-i of them.
  return spins + i * (2 * spins - i - 1) / 2 + (j - i - 1);
}

int HamiltonianCoefficients::spin_count() const {
  // Invert D = N(N+1)/2: N = (sqrt(8D+1)-1)/2, integral for valid D.
  const auto d = static_cast<std::uint64_t>(values.size());
  std::uint64_t n = 0;
  while ((n + 1) * (n + 2) / 2 <= d) ++n;
  if (n * (n + 1) / 2 != d)
    throw std::invalid_argument(
        "HamiltonianCoefficients: size is not N(N+1)/2 for any N");
  return static_cast<int>(n);
}

double HamiltonianCoefficients::coupling(int i, int j) const {
  return values[pair_index(i, j, spin_count())];
}

bool HamiltonianCoefficients::inside_box() const {
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (!box.contains(values[k])) return false;
  return true;
}

Eigen::VectorXd feature_map(std::span<const Spin> spins) {
  check_spins(spins, "feature_map");
  const int n = static_cast<int>(spins.size());
  Eigen::VectorXd phi(coefficient_count(n));
  for (int i = 0; i < n; ++i) phi[i] = spins[static_cast<std::size_t>(i)];
  int k = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      phi[k++] = static_cast<double>(spins[static_cast<std::size_t>(i)]) *
                 spins[static_cast<std::size_t>(j)];
  return phi;
}

double hamiltonian(const Eigen::VectorXd& coefficients,
                   std::span<const Spin> spins) {
  check_spins(spins, "hamiltonian");
  const int n = static_cast<int>(spins.size());
  require(coefficients.size() == coefficient_count(n),
          "hamiltonian: coefficient size does not match spin count");
  double energy = 0.0;
  for (int i = 0; i < n; ++i)
    energy += coefficients[i] * spins[static_cast<std::size_t>(i)];
  int k = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      energy += coefficients[k++] *
                spins[static_cast<std::size_t>(i)] *
                spins[static_cast<std::size_t>(j)];
  return energy;
}

double hamiltonian_flip_delta(const Eigen::VectorXd& coefficients,
                              std::span<const Spin> spins, int k) {
  const int n = static_cast<int>(spins.size());
  require(0 <= k && k < n, "hamiltonian_flip_delta: spin index out of range");
  require(coefficients.size() == coefficient_count(n),
          "hamiltonian_flip_delta: coefficient size mismatch");
  // Local field at k; flipping s_k negates every term containing it.
  double local = coefficients[k];
  for (int j = 0; j < n; ++j) {
    if (j == k) continue;
    const int p = j < k ? pair_index(j, k, n) : pair_index(k, j, n);
    local += coefficients[p] * spins[static_cast<std::size_t>(j)];
  }
  return -2.0 * spins[static_cast<std::size_t>(k)] * local;
}

SpinVector SpinVector::assemble(const SystemShape& shape,
                                std::span<const Spin> input,
                                std::span<const Spin> output,
                                std::span<const Spin> aux) {
  validate_shape(shape);
  require(std::ssize(input) == shape.inputs, "assemble: input width mismatch");
  require(std::ssize(output) == shape.outputs,
          "assemble: output width mismatch");
  require(std::ssize(aux) == shape.aux, "assemble: aux width mismatch");
  SpinVector s;
  s.shape = shape;
  s.spins.reserve(static_cast<std::size_t>(shape.total()));
  s.spins.insert(s.spins.end(), input.begin(), input.end());
  s.spins.insert(s.spins.end(), output.begin(), output.end());
  s.spins.insert(s.spins.end(), aux.begin(), aux.end());
  check_spins(s.spins, "assemble");
  return s;
}

std::span<const Spin> SpinVector::input() const {
  return {spins.data(), static_cast<std::size_t>(shape.inputs)};
}

std::span<const Spin> SpinVector::output() const {
  return {spins.data() + shape.inputs,
          static_cast<std::size_t>(shape.outputs)};
}

std::span<const Spin> SpinVector::aux() const {
  return {spins.data() + shape.inputs + shape.outputs,
          static_cast<std::size_t>(shape.aux)};
}

TruthTable::TruthTable(SystemShape shape, std::vector<Row> rows)
    : shape_(shape), rows_(std::move(rows)) {
  validate_shape(shape_);
  require(!rows_.empty(), "truth table: needs at least one row");
  std::set<SpinVec> seen;
  for (const Row& row : rows_) {
    require(std::ssize(row.input) == shape_.inputs,
            "truth table: input width mismatch");
    require(std::ssize(row.output) == shape_.outputs,
            "truth table: output width mismatch");
    check_spins(row.input, "truth table");
    check_spins(row.output, "truth table");
    require(seen.insert(row.input).second,
            "truth table: duplicate input row");
  }
}

TruthTable TruthTable::with_aux_count(int aux) const {
  SystemShape shape = shape_;
  shape.aux = aux;
  return TruthTable(shape, rows_);
}

TruthTable build_multiplier_truth_table(int p_bits, int q_bits,
                                        int aux_count) {
  require(p_bits >= 1 && q_bits >= 1, "multiplier: operand widths must be >= 1");
  require(p_bits + q_bits <= 20, "multiplier: operand widths too large");
  const SystemShape shape{p_bits + q_bits, p_bits + q_bits, aux_count};
  std::vector<TruthTable::Row> rows;
  rows.reserve(std::size_t{1} << (p_bits + q_bits));
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << p_bits); ++a) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << q_bits); ++b) {
      TruthTable::Row row;
      row.input = spins_from_bits(a | (b << p_bits), p_bits + q_bits);
      row.output = spins_from_bits(a * b, p_bits + q_bits);
      rows.push_back(std::move(row));
    }
  }
  return TruthTable(shape, std::move(rows));
}

void write_truth_table(std::ostream& out, const TruthTable& table) {
  const SystemShape& s = table.shape();
  out << "shape " << s.inputs << ' ' << s.outputs << ' ' << s.aux << '\n';
  for (const TruthTable::Row& row : table.rows()) {
    bool first = true;
    for (Spin v : row.input) {
      if (!first) out << ' ';
      out << static_cast<int>(v);
      first = false;
    }
    for (Spin v : row.output) out << ' ' << static_cast<int>(v);
    out << '\n';
  }
}

TruthTable read_truth_table(std::istream& in) {
  std::string tag;
  SystemShape shape;
  if (!(in >> tag) || tag != "shape" ||
      !(in >> shape.inputs >> shape.outputs >> shape.aux))
    throw std::invalid_argument("truth table: malformed shape header");
  std::vector<TruthTable::Row> rows;
  while (true) {
    TruthTable::Row row;
    row.input.resize(static_cast<std::size_t>(shape.inputs));
    row.output.resize(static_cast<std::size_t>(shape.outputs));
    int v = 0;
    if (!(in >> v)) break;
    row.input[0] = static_cast<Spin>(v);
    for (int k = 1; k < shape.inputs; ++k) {
      if (!(in >> v)) throw std::invalid_argument("truth table: short row");
      row.input[static_cast<std::size_t>(k)] = static_cast<Spin>(v);
    }
    for (int k = 0; k < shape.outputs; ++k) {
      if (!(in >> v)) throw std::invalid_argument("truth table: short row");
      row.output[static_cast<std::size_t>(k)] = static_cast<Spin>(v);
    }
    rows.push_back(std::move(row));
  }
  return TruthTable(shape, std::move(rows));
}

SpinVec AuxiliaryArray::flatten() const {
  SpinVec flat;
  flat.reserve(assignments.size() * static_cast<std::size_t>(aux_count));
  for (const SpinVec& a : assignments)
    flat.insert(flat.end(), a.begin(), a.end());
  return flat;
}

AuxiliaryArray AuxiliaryArray::from_flat(int aux_count,
                                         std::span<const Spin> flat) {
  require(aux_count >= 1, "aux array: from_flat needs aux_count >= 1");
  require(flat.size() % static_cast<std::size_t>(aux_count) == 0,
          "aux array: flat length not a multiple of aux_count");
  check_spins(flat, "aux array");
  AuxiliaryArray out;
  out.aux_count = aux_count;
  const std::size_t rows = flat.size() / static_cast<std::size_t>(aux_count);
  out.assignments.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto begin = flat.begin() + static_cast<std::ptrdiff_t>(
                                    r * static_cast<std::size_t>(aux_count));
    out.assignments.emplace_back(begin, begin + aux_count);
  }
  return out;
}

AuxiliaryArray AuxiliaryArray::from_index(int aux_count, std::size_t rows,
                                          std::uint64_t index) {
  require(aux_count >= 1, "aux array: from_index needs aux_count >= 1");
  const std::size_t bits = static_cast<std::size_t>(aux_count) * rows;
  require(bits <= 63, "aux array: from_index limited to aux*rows <= 63");
  require(index < (std::uint64_t{1} << bits),
          "aux array: index out of range");
  AuxiliaryArray out;
  out.aux_count = aux_count;
  out.assignments.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    SpinVec& a = out.assignments[r];
    a.resize(static_cast<std::size_t>(aux_count));
    for (int k = 0; k < aux_count; ++k) {
      const std::size_t bit = r * static_cast<std::size_t>(aux_count) +
                              static_cast<std::size_t>(k);
      a[static_cast<std::size_t>(k)] =
          (index >> bit) & 1 ? Spin{1} : Spin{-1};
    }
  }
  return out;
}

const char* to_string(WrongMode mode) {
  return mode == WrongMode::AuxFixed ? "aux-fixed" : "aux-free-wrong";
}

WrongMode parse_wrong_mode(const std::string& text) {
  if (text == "aux-fixed") return WrongMode::AuxFixed;
  if (text == "aux-free-wrong") return WrongMode::AuxFreeWrong;
  throw std::invalid_argument("unknown wrong-state mode: " + text);
}

StateSets build_state_sets(const TruthTable& table, const AuxiliaryArray& aux,
                           WrongMode mode, bool correct_aux_free) {
  const SystemShape& shape = table.shape();
  if (shape.aux > 0) {
    require(aux.aux_count == shape.aux,
            "state sets: aux width does not match shape");
    require(aux.row_count() == table.row_count(),
            "state sets: aux array row count does not match table");
  }
  require(shape.outputs <= 62, "state sets: too many output spins");

  const int dim = shape.coefficient_count();
  const std::uint64_t output_states = std::uint64_t{1} << shape.outputs;
  const std::uint64_t aux_states =
      shape.aux > 0 ? std::uint64_t{1} << shape.aux : 1;
  require(shape.aux <= 62, "state sets: too many auxiliary spins");

  const std::size_t rows = table.row_count();
  const std::size_t correct_per_row =
      correct_aux_free ? static_cast<std::size_t>(aux_states) : 1;
  const std::size_t wrong_per_row =
      static_cast<std::size_t>(output_states - 1) *
      (mode == WrongMode::AuxFreeWrong ? static_cast<std::size_t>(aux_states)
                                       : 1);

  StateSets sets;
  sets.shape = shape;
  sets.correct.resize(static_cast<Eigen::Index>(rows * correct_per_row), dim);
  sets.wrong.resize(static_cast<Eigen::Index>(rows * wrong_per_row), dim);
  sets.correct_offset.resize(rows + 1);
  sets.wrong_offset.resize(rows + 1);

  const SpinVec no_aux;
  Eigen::Index ci = 0;
  Eigen::Index wi = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    sets.correct_offset[r] = static_cast<int>(ci);
    sets.wrong_offset[r] = static_cast<int>(wi);
    const TruthTable::Row& row = table.rows()[r];
    const SpinVec& assigned = shape.aux > 0 ? aux.assignments[r] : no_aux;
    const std::uint64_t desired = bits_value(row.output);

    if (correct_aux_free) {
      for (std::uint64_t a = 0; a < aux_states; ++a) {
        const SpinVec aux_spins = spins_from_bits(a, shape.aux);
        sets.correct.row(ci++) = feature_map(
            SpinVector::assemble(shape, row.input, row.output, aux_spins)
                .spins);
      }
    } else {
      sets.correct.row(ci++) = feature_map(
          SpinVector::assemble(shape, row.input, row.output, assigned)
              .spins);
    }

    for (std::uint64_t o = 0; o < output_states; ++o) {
      if (o == desired) continue;
      const SpinVec out_spins = spins_from_bits(o, shape.outputs);
      if (mode == WrongMode::AuxFreeWrong) {
        for (std::uint64_t a = 0; a < aux_states; ++a) {
          const SpinVec aux_spins = spins_from_bits(a, shape.aux);
          sets.wrong.row(wi++) = feature_map(
              SpinVector::assemble(shape, row.input, out_spins, aux_spins)
                  .spins);
        }
      } else {
        sets.wrong.row(wi++) = feature_map(
            SpinVector::assemble(shape, row.input, out_spins, assigned)
                .spins);
      }
    }
  }
  sets.correct_offset[rows] = static_cast<int>(ci);
  sets.wrong_offset[rows] = static_cast<int>(wi);
  return sets;
}

std::uint64_t count_constraints(const SystemShape& shape) {
  validate_shape(shape);
  require(shape.inputs + shape.aux <= 62 && shape.inputs <= 62,
          "count_constraints: shape too large");
  const std::uint64_t fibers = std::uint64_t{1}
                               << (shape.inputs + shape.aux);
  const std::uint64_t wrong = (std::uint64_t{1} << shape.inputs) - 1;
  if (wrong != 0 && fibers > UINT64_MAX / wrong)
    throw std::overflow_error("count_constraints: result exceeds 64 bits");
  return fibers * wrong;
}

std::uint64_t AuxArrayCount::as_uint64() const {
  if (!fits_uint64())
    throw std::overflow_error("aux array count exceeds 64 bits");
  return std::uint64_t{1} << exponent;
}

std::string AuxArrayCount::str() const {
  if (exponent > (std::uint64_t{1} << 20))
    throw std::overflow_error(
        "aux array count too large for decimal expansion; use exponent");
  boost::multiprecision::cpp_int value = 1;
  value <<= exponent;
  return value.str();
}

AuxArrayCount count_aux_arrays(const SystemShape& shape) {
  validate_shape(shape);
  require(shape.inputs <= 62, "count_aux_arrays: too many inputs");
  const std::uint64_t rows = std::uint64_t{1} << shape.inputs;
  const std::uint64_t aux = static_cast<std::uint64_t>(shape.aux);
  if (aux != 0 && rows > UINT64_MAX / aux)
    throw std::overflow_error("count_aux_arrays: exponent exceeds 64 bits");
  return AuxArrayCount{aux * rows};
}

}  // namespace ising
