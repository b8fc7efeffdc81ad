#include "ising/problems.hpp"

#include <stdexcept>

namespace ising {

std::string ProblemPreset::name() const {
  return "multiplier-" + std::to_string(p_bits) + "x" + std::to_string(q_bits);
}

const std::array<ProblemPreset, 4>& multiplier_problems() {
  static const std::array<ProblemPreset, 4> presets = {{
      {1, 2, 2, 1, {-4.0, 4.0}, 16},
      {2, 2, 3, 1, {-64.0, 64.0}, 27},
      {3, 2, 4, 2, {-256.0, 256.0}, 16},
      {4, 3, 3, 3, {-256.0, 256.0}, 18},
  }};
  return presets;
}

const ProblemPreset& multiplier_problem(int id) {
  if (id < 1 || id > 4)
    throw std::invalid_argument("problem id must be 1, 2, 3, or 4");
  return multiplier_problems()[static_cast<std::size_t>(id - 1)];
}

}  // namespace ising
