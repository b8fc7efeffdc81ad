#pragma once

// Reference implementations for the tests. Deliberately slow and written
// along a different path than the library (explicit J matrices, long
// double accumulation, direct fiber enumeration from the truth table) so
// that agreement between the two is evidence rather than tautology.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ising/model.hpp"

namespace refimpl {

struct Quadratic {
  int n = 0;
  std::vector<long double> h;                   // n fields
  std::vector<std::vector<long double>> j;      // full symmetric, zero diagonal
};

// Unpacks psi by walking fields then (i, j) pairs in ascending i, then j.
inline Quadratic unpack(const Eigen::VectorXd& psi, int n) {
  if (psi.size() != n + n * (n - 1) / 2)
    throw std::invalid_argument("refimpl::unpack: size mismatch");
  Quadratic q;
  q.n = n;
  q.h.resize(static_cast<std::size_t>(n));
  q.j.assign(static_cast<std::size_t>(n),
             std::vector<long double>(static_cast<std::size_t>(n), 0.0L));
  int k = 0;
  for (int i = 0; i < n; ++i) q.h[static_cast<std::size_t>(i)] = psi[k++];
  for (int i = 0; i < n; ++i)
    for (int jj = i + 1; jj < n; ++jj) {
      q.j[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)] = psi[k];
      q.j[static_cast<std::size_t>(jj)][static_cast<std::size_t>(i)] = psi[k];
      ++k;
    }
  return q;
}

inline long double energy(const Quadratic& q, const std::vector<int>& s) {
  long double e = 0.0L;
  for (int i = 0; i < q.n; ++i)
    e += q.h[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
  for (int i = 0; i < q.n; ++i)
    for (int jj = i + 1; jj < q.n; ++jj)
      e += q.j[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)] *
           s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(jj)];
  return e;
}

inline std::vector<int> to_int(std::span<const ising::Spin> spins) {
  std::vector<int> out(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) out[i] = spins[i];
  return out;
}

// All full states of one truth-table row's fiber, enumerated directly.
struct Fiber {
  std::vector<std::vector<int>> correct;
  std::vector<std::vector<int>> wrong;
};

inline Fiber row_fiber(const ising::TruthTable& table,
                       const ising::AuxiliaryArray* aux, std::size_t row,
                       ising::WrongMode mode, bool correct_aux_free = false) {
  const ising::SystemShape& shape = table.shape();
  const ising::TruthTable::Row& r = table.rows()[row];
  const int n_aux = shape.aux;
  const std::uint64_t aux_states = n_aux > 0 ? (1ULL << n_aux) : 1;
  const std::uint64_t out_states = 1ULL << shape.outputs;

  auto assemble = [&](std::uint64_t out_bits, std::uint64_t aux_bits) {
    std::vector<int> s;
    for (const ising::Spin v : r.input) s.push_back(v);
    for (int k = 0; k < shape.outputs; ++k)
      s.push_back((out_bits >> k) & 1 ? 1 : -1);
    for (int k = 0; k < n_aux; ++k)
      s.push_back((aux_bits >> k) & 1 ? 1 : -1);
    return s;
  };
  auto assigned_bits = [&]() -> std::uint64_t {
    if (n_aux == 0) return 0;
    std::uint64_t b = 0;
    const ising::SpinVec& a = aux->assignments[row];
    for (int k = 0; k < n_aux; ++k)
      if (a[static_cast<std::size_t>(k)] > 0) b |= 1ULL << k;
    return b;
  };

  std::uint64_t desired = 0;
  for (int k = 0; k < shape.outputs; ++k)
    if (r.output[static_cast<std::size_t>(k)] > 0) desired |= 1ULL << k;

  Fiber fiber;
  if (correct_aux_free) {
    for (std::uint64_t a = 0; a < aux_states; ++a)
      fiber.correct.push_back(assemble(desired, a));
  } else {
    fiber.correct.push_back(assemble(desired, assigned_bits()));
  }
  for (std::uint64_t o = 0; o < out_states; ++o) {
    if (o == desired) continue;
    if (mode == ising::WrongMode::AuxFreeWrong) {
      for (std::uint64_t a = 0; a < aux_states; ++a)
        fiber.wrong.push_back(assemble(o, a));
    } else {
      fiber.wrong.push_back(assemble(o, assigned_bits()));
    }
  }
  return fiber;
}

// log p_W through shifted long double sums.
inline long double row_log_wrong(const Quadratic& q, const Fiber& fiber,
                                 long double beta) {
  long double top = -std::numeric_limits<long double>::infinity();
  auto scan = [&](const std::vector<std::vector<int>>& states) {
    for (const std::vector<int>& s : states)
      top = std::max(top, -beta * energy(q, s));
  };
  scan(fiber.correct);
  scan(fiber.wrong);
  long double sum_r = 0.0L, sum_w = 0.0L;
  for (const std::vector<int>& s : fiber.correct)
    sum_r += std::exp(-beta * energy(q, s) - top);
  for (const std::vector<int>& s : fiber.wrong)
    sum_w += std::exp(-beta * energy(q, s) - top);
  return std::log(sum_w) - std::log(sum_r + sum_w);
}

inline long double smoothed_objective(const Quadratic& q,
                                      const std::vector<Fiber>& fibers,
                                      long double beta, long double lambda) {
  std::vector<long double> scaled;
  long double top = -std::numeric_limits<long double>::infinity();
  for (const Fiber& f : fibers) {
    scaled.push_back(lambda * row_log_wrong(q, f, beta));
    top = std::max(top, scaled.back());
  }
  long double acc = 0.0L;
  for (long double v : scaled) acc += std::exp(v - top);
  return (top + std::log(acc)) / lambda;
}

// Full Boltzmann distribution; state index bit k set means spin k is +1.
inline std::vector<double> distribution(const Quadratic& q,
                                        long double beta) {
  const std::uint64_t total = 1ULL << q.n;
  std::vector<long double> logw(total);
  long double top = -std::numeric_limits<long double>::infinity();
  for (std::uint64_t st = 0; st < total; ++st) {
    std::vector<int> s(static_cast<std::size_t>(q.n));
    for (int k = 0; k < q.n; ++k) s[static_cast<std::size_t>(k)] = (st >> k) & 1 ? 1 : -1;
    logw[st] = -beta * energy(q, s);
    top = std::max(top, logw[st]);
  }
  long double z = 0.0L;
  for (std::uint64_t st = 0; st < total; ++st) z += std::exp(logw[st] - top);
  std::vector<double> p(total);
  for (std::uint64_t st = 0; st < total; ++st)
    p[st] = static_cast<double>(std::exp(logw[st] - top) / z);
  return p;
}

// Test-local central differences, independent of the library's.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + step;
    const double hi = fn(probe);
    probe[k] = orig - step;
    const double lo = fn(probe);
    probe[k] = orig;
    g[k] = (hi - lo) / (2.0 * step);
  }
  return g;
}

// Relative L2 error with a unit floor in the denominator, so comparisons
// stay meaningful where both gradients vanish.
inline double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

// Deterministic uniform draws for test inputs (std::mt19937_64 raw bits,
// explicit transform; no standard distributions).
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int spin() { return (gen_() & 1) ? 1 : -1; }
  std::uint64_t bits() { return gen_(); }

  Eigen::VectorXd vector(Eigen::Index size, double lo, double hi) {
    Eigen::VectorXd v(size);
    for (Eigen::Index k = 0; k < size; ++k) v[k] = uniform(lo, hi);
    return v;
  }
  ising::SpinVec spins(std::size_t count) {
    ising::SpinVec s(count);
    for (auto& v : s) v = static_cast<ising::Spin>(spin());
    return s;
  }
  ising::AuxiliaryArray aux_array(int aux_count, std::size_t rows) {
    ising::AuxiliaryArray a;
    a.aux_count = aux_count;
    for (std::size_t r = 0; r < rows; ++r) a.assignments.push_back(spins(
        static_cast<std::size_t>(aux_count)));
    return a;
  }

 private:
  std::mt19937_64 gen_;
};

// XOR truth table: two inputs, one output, output spin = -u1*u2 (spin
// algebra of the boolean xor under the 0->-1, 1->+1 encoding).
inline ising::TruthTable xor_table(int aux_count) {
  ising::SystemShape shape{2, 1, aux_count};
  std::vector<ising::TruthTable::Row> rows;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      ising::TruthTable::Row row;
      row.input = {static_cast<ising::Spin>(a ? 1 : -1),
                   static_cast<ising::Spin>(b ? 1 : -1)};
      row.output = {static_cast<ising::Spin>((a ^ b) ? 1 : -1)};
      rows.push_back(std::move(row));
    }
  return ising::TruthTable(shape, std::move(rows));
}

}  // namespace refimpl
