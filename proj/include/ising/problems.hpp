#pragma once

/// The four benchmark multiplier problems with their standard coefficient
/// ranges, auxiliary budgets, and forest depths.

#include <array>
#include <string>

#include "ising/model.hpp"

namespace ising {

struct ProblemPreset {
  int id = 0;
  int p_bits = 0;
  int q_bits = 0;
  int aux = 0;
  Interval box;
  int forest_depth = 0;  // default tree depth tuned per problem

  SystemShape shape() const {
    return {p_bits + q_bits, p_bits + q_bits, aux};
  }
  std::string name() const;
  TruthTable truth_table() const {
    return build_multiplier_truth_table(p_bits, q_bits, aux);
  }
};

const std::array<ProblemPreset, 4>& multiplier_problems();

/// Preset by 1-based id; throws std::invalid_argument outside [1, 4].
const ProblemPreset& multiplier_problem(int id);

}  // namespace ising
