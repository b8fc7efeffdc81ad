#include "ising/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "detail/text.hpp"

namespace ising::datagen {

using detail::format_double;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

AuxiliaryArray draw_array(detail::Rng& rng, int aux_count, std::size_t rows) {
  AuxiliaryArray a;
  a.aux_count = aux_count;
  a.assignments.resize(rows);
  for (SpinVec& row : a.assignments) {
    row.resize(static_cast<std::size_t>(aux_count));
    for (Spin& s : row) s = static_cast<Spin>(rng.spin());
  }
  return a;
}

bool is_feasible(const TruthTable& table, const AuxiliaryArray& aux,
                 const Interval& box, const SampleOptions& options) {
  const StateSets sets = build_state_sets(table, aux, options.mode);
  return solver::feasibility_check(sets, box, options.feasibility).feasible;
}

}  // namespace

SampleResult sample_aux_arrays(const TruthTable& table, const Interval& box,
                               std::size_t count,
                               const SampleOptions& options) {
  require(count >= 1, "sample: count must be >= 1");
  require(table.shape().aux >= 1, "sample: shape has no auxiliary spins");
  require(!options.balance ||
              (*options.balance >= 0.0 && *options.balance <= 1.0),
          "sample: balance must be in [0, 1]");

  const int aux_count = table.shape().aux;
  const std::size_t rows = table.row_count();
  const std::size_t bits = static_cast<std::size_t>(aux_count) * rows;

  SampleResult result;

  // Small search spaces are enumerated outright instead of sampled.
  if (bits <= 20 && (std::size_t{1} << bits) <= count) {
    const std::uint64_t total = std::uint64_t{1} << bits;
    for (std::uint64_t a = 0; a < total; ++a)
      result.arrays.push_back(
          AuxiliaryArray::from_index(aux_count, rows, a));
    if (options.balance) {
      for (const AuxiliaryArray& a : result.arrays)
        ++(is_feasible(table, a, box, options) ? result.feasible
                                               : result.infeasible);
      result.balance_met = false;
    }
    std::ostringstream note;
    note << "search space holds only " << total
         << " assignments; returning all of them";
    result.note = note.str();
    return result;
  }

  const std::uint64_t budget =
      options.max_attempts > 0
          ? options.max_attempts
          : (options.balance ? 200 : 20) * static_cast<std::uint64_t>(count) +
                1000;

  detail::Rng rng(options.seed);
  std::set<SpinVec> seen;
  std::size_t feasible_target = count;
  std::size_t infeasible_target = count;
  if (options.balance) {
    feasible_target = static_cast<std::size_t>(
        std::llround(*options.balance * static_cast<double>(count)));
    infeasible_target = count - feasible_target;
  }

  std::uint64_t attempts = 0;
  bool quota_exhausted = false;
  while (result.arrays.size() < count && attempts < budget) {
    ++attempts;
    AuxiliaryArray candidate = draw_array(rng, aux_count, rows);
    if (!seen.insert(candidate.flatten()).second) continue;
    if (options.balance) {
      const bool feasible = is_feasible(table, candidate, box, options);
      std::size_t& have = feasible ? result.feasible : result.infeasible;
      const std::size_t want = feasible ? feasible_target : infeasible_target;
      if (have >= want) {
        quota_exhausted = true;
        continue;  // class quota already full
      }
      ++have;
    }
    result.arrays.push_back(std::move(candidate));
  }

  if (result.arrays.size() < count && options.balance && quota_exhausted) {
    // One class ran dry inside the budget; fill up from whatever appears.
    while (result.arrays.size() < count && attempts < 2 * budget) {
      ++attempts;
      AuxiliaryArray candidate = draw_array(rng, aux_count, rows);
      if (!seen.insert(candidate.flatten()).second) continue;
      ++(is_feasible(table, candidate, box, options) ? result.feasible
                                                     : result.infeasible);
      result.arrays.push_back(std::move(candidate));
    }
    result.balance_met = false;
    result.note = "balance target unreachable; filled from available class";
  }
  if (result.arrays.size() < count) {
    std::ostringstream note;
    note << "attempt budget exhausted after " << attempts << " draws; got "
         << result.arrays.size() << " of " << count;
    result.note = note.str();
    if (options.balance) result.balance_met = false;
  }
  return result;
}

Dataset generate_dataset(const TruthTable& table, const Interval& box,
                         const std::vector<AuxiliaryArray>& arrays,
                         const GenerateOptions& options,
                         const std::string& problem_name) {
  require(!arrays.empty(), "generate: no auxiliary assignments given");
  require(box.valid(), "generate: empty box");
  boltzmann::validate_config(options.objective);
  solver::validate_options(options.solver);

  Dataset dataset;
  dataset.rows.resize(arrays.size());

  detail::parallel_for(
      arrays.size(),
      [&](std::size_t i) {
        const AuxiliaryArray& aux = arrays[i];
        const StateSets sets = build_state_sets(table, aux, options.mode);
        solver::SolverOptions row_options = options.solver;
        row_options.seed = detail::mix_seed(options.solver.seed, i);
        const solver::SolveResult solved =
            solver::minimize(sets, box, options.objective, row_options);
        DatasetRow& row = dataset.rows[i];
        row.aux = aux.flatten();
        row.rho = solved.rho;
        row.f_star = solved.f_star;
        row.converged = solved.converged;
        row.seed = row_options.seed;
      },
      options.threads);

  std::size_t nonconverged = 0;
  for (const DatasetRow& row : dataset.rows)
    if (!row.converged) ++nonconverged;

  DatasetManifest& m = dataset.manifest;
  m.problem = problem_name;
  m.shape = table.shape();
  m.box = box;
  m.beta = options.objective.beta;
  m.lambda = options.objective.lambda;
  m.mode = options.mode;
  m.rows = dataset.rows.size();
  m.seed = options.solver.seed;
  m.solver = options.solver;
  m.nonconverged_fraction =
      static_cast<double>(nonconverged) / static_cast<double>(m.rows);
  m.degraded = m.nonconverged_fraction > 0.05;
  return dataset;
}

std::pair<std::vector<DatasetRow>, std::vector<DatasetRow>> split_dataset(
    const std::vector<DatasetRow>& rows, double ratio, std::uint64_t seed) {
  require(ratio >= 0.0 && ratio <= 1.0, "split: ratio must be in [0, 1]");
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher-Yates, spelled out so the permutation is fixed across platforms.
  detail::Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.index(i)]);

  const auto train_count = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(rows.size())));
  std::pair<std::vector<DatasetRow>, std::vector<DatasetRow>> split;
  split.first.reserve(train_count);
  split.second.reserve(rows.size() - train_count);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < train_count ? split.first : split.second).push_back(rows[order[i]]);
  return split;
}

void write_dataset_csv(std::ostream& out,
                       const std::vector<DatasetRow>& rows) {
  require(!rows.empty(), "write csv: no rows");
  const std::size_t width = rows.front().aux.size();
  for (std::size_t k = 0; k < width; ++k) out << 'a' << '_' << (k + 1) << ',';
  out << "rho,f_star,converged,seed\n";
  for (const DatasetRow& row : rows) {
    require(row.aux.size() == width, "write csv: ragged aux widths");
    for (Spin s : row.aux) out << static_cast<int>(s) << ',';
    out << format_double(row.rho) << ',' << format_double(row.f_star) << ','
        << (row.converged ? 1 : 0) << ',' << row.seed << '\n';
  }
}

std::vector<DatasetRow> read_dataset_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw std::invalid_argument("read csv: missing header");
  std::size_t width = 0;
  {
    std::stringstream ss(header);
    std::string field;
    while (std::getline(ss, field, ','))
      if (field.rfind("a_", 0) == 0) ++width;
  }
  std::vector<DatasetRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    DatasetRow row;
    row.aux.reserve(width);
    for (std::size_t k = 0; k < width; ++k) {
      if (!std::getline(ss, field, ','))
        throw std::invalid_argument("read csv: short row");
      const int v = std::stoi(field);
      if (v != 1 && v != -1)
        throw std::invalid_argument("read csv: aux spins must be -1 or 1");
      row.aux.push_back(static_cast<Spin>(v));
    }
    if (!std::getline(ss, field, ','))
      throw std::invalid_argument("read csv: missing rho");
    row.rho = std::stod(field);
    if (!std::getline(ss, field, ','))
      throw std::invalid_argument("read csv: missing f_star");
    row.f_star = std::stod(field);
    if (!std::getline(ss, field, ','))
      throw std::invalid_argument("read csv: missing converged");
    row.converged = std::stoi(field) != 0;
    if (!std::getline(ss, field, ','))
      throw std::invalid_argument("read csv: missing seed");
    row.seed = std::stoull(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "format dataset-manifest-1\n";
  out << "problem " << m.problem << '\n';
  out << "inputs " << m.shape.inputs << '\n';
  out << "outputs " << m.shape.outputs << '\n';
  out << "aux " << m.shape.aux << '\n';
  out << "range_lo " << format_double(m.box.lo) << '\n';
  out << "range_hi " << format_double(m.box.hi) << '\n';
  out << "beta " << format_double(m.beta) << '\n';
  out << "lambda " << format_double(m.lambda) << '\n';
  out << "mode " << to_string(m.mode) << '\n';
  out << "rows " << m.rows << '\n';
  out << "balance " << (m.balance ? format_double(*m.balance) : "none")
      << '\n';
  out << "seed " << m.seed << '\n';
  out << "solver_starts " << m.solver.starts << '\n';
  out << "solver_max_iterations " << m.solver.max_iterations << '\n';
  out << "solver_gradient_tolerance "
      << format_double(m.solver.gradient_tolerance) << '\n';
  out << "solver_step_tolerance " << format_double(m.solver.step_tolerance)
      << '\n';
  out << "solver_memory " << m.solver.memory << '\n';
  out << "nonconverged_fraction " << format_double(m.nonconverged_fraction)
      << '\n';
  out << "degraded " << (m.degraded ? 1 : 0) << '\n';
}

DatasetManifest read_manifest(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t space = line.find(' ');
    if (space == std::string::npos)
      throw std::invalid_argument("manifest: malformed line: " + line);
    kv[line.substr(0, space)] = line.substr(space + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw std::invalid_argument("manifest: missing key " + key);
    return it->second;
  };
  if (get("format") != "dataset-manifest-1")
    throw std::invalid_argument("manifest: unknown format tag");

  DatasetManifest m;
  m.problem = get("problem");
  m.shape.inputs = std::stoi(get("inputs"));
  m.shape.outputs = std::stoi(get("outputs"));
  m.shape.aux = std::stoi(get("aux"));
  m.box.lo = std::stod(get("range_lo"));
  m.box.hi = std::stod(get("range_hi"));
  m.beta = std::stod(get("beta"));
  m.lambda = std::stod(get("lambda"));
  m.mode = parse_wrong_mode(get("mode"));
  m.rows = std::stoull(get("rows"));
  if (get("balance") != "none") m.balance = std::stod(get("balance"));
  m.seed = std::stoull(get("seed"));
  m.solver.starts = std::stoi(get("solver_starts"));
  m.solver.max_iterations = std::stoi(get("solver_max_iterations"));
  m.solver.gradient_tolerance = std::stod(get("solver_gradient_tolerance"));
  m.solver.step_tolerance = std::stod(get("solver_step_tolerance"));
  m.solver.memory = std::stoi(get("solver_memory"));
  m.solver.seed = m.seed;
  m.nonconverged_fraction = std::stod(get("nonconverged_fraction"));
  m.degraded = std::stoi(get("degraded")) != 0;
  return m;
}

}  // namespace ising::datagen
