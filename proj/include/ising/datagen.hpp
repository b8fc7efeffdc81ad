#pragma once

/// Training-set production: sampling auxiliary assignments, solving each
/// one for its success probability, deterministic splits, and the CSV /
/// manifest formats the tooling exchanges.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ising/boltzmann.hpp"
#include "ising/model.hpp"
#include "ising/solver.hpp"

namespace ising::datagen {

/// One labelled example: the flattened auxiliary array and the solved
/// success probability, plus provenance for reproduction.
struct DatasetRow {
  SpinVec aux;       // row-major flattened auxiliary assignments
  double rho = 0.0;
  double f_star = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;  // per-row solver seed
};

struct SampleOptions {
  /// Target fraction of feasible assignments; unset samples uniformly
  /// without classifying.
  std::optional<double> balance;
  std::uint64_t seed = 0;
  std::uint64_t max_attempts = 0;  // 0 picks a budget from count
  WrongMode mode = WrongMode::AuxFixed;
  solver::SolverOptions feasibility;  // used by the hinge check
};

struct SampleResult {
  std::vector<AuxiliaryArray> arrays;
  std::size_t feasible = 0;    // counted only when balance is set
  std::size_t infeasible = 0;
  bool balance_met = true;
  std::string note;  // non-empty when the request could not be met exactly
};

/// Draws `count` distinct auxiliary assignments. With a balance target the
/// feasibility check classifies candidates and fills per-class quotas;
/// when one class runs dry the remainder is filled from the other and
/// balance_met reports it.
SampleResult sample_aux_arrays(const TruthTable& table, const Interval& box,
                               std::size_t count,
                               const SampleOptions& options);

struct GenerateOptions {
  boltzmann::ObjectiveConfig objective;
  solver::SolverOptions solver;  // solver.seed is the master dataset seed
  WrongMode mode = WrongMode::AuxFixed;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Everything needed to reproduce a dataset byte for byte.
struct DatasetManifest {
  std::string problem;  // preset name or "custom"
  SystemShape shape;
  Interval box;
  double beta = 1.0;
  double lambda = 100.0;
  WrongMode mode = WrongMode::AuxFixed;
  std::size_t rows = 0;
  std::optional<double> balance;
  std::uint64_t seed = 0;
  solver::SolverOptions solver;
  double nonconverged_fraction = 0.0;
  bool degraded = false;  // more than 5% of rows failed to converge
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRow> rows;
};

/// Solves every assignment and labels it with its success probability.
/// Row i uses the derived seed mix(master, i), so the dataset is identical
/// for any thread count.
Dataset generate_dataset(const TruthTable& table, const Interval& box,
                         const std::vector<AuxiliaryArray>& arrays,
                         const GenerateOptions& options,
                         const std::string& problem_name);

/// Seeded shuffle, then split: first round(ratio * n) rows train, rest test.
std::pair<std::vector<DatasetRow>, std::vector<DatasetRow>> split_dataset(
    const std::vector<DatasetRow>& rows, double ratio, std::uint64_t seed);

/// CSV with header a_1..a_K,rho,f_star,converged,seed; floats carry full
/// precision (%.17g) so a written dataset reloads bit-exactly.
void write_dataset_csv(std::ostream& out, const std::vector<DatasetRow>& rows);
std::vector<DatasetRow> read_dataset_csv(std::istream& in);

/// Plain-text manifest, one "key value" pair per line, fixed key order.
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
DatasetManifest read_manifest(std::istream& in);

}  // namespace ising::datagen
