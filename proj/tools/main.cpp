// isingopt: command-line front end for the reverse-Ising pipeline.
// Subcommands: truth-table, solve, datagen, train, eval, bench.
//
// Exit codes: 0 success, 2 configuration or input validation error,
// 3 runtime failure (solver failure, diverged training, benchmark
// ordering violation, I/O errors).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detail/text.hpp"
#include "ising/boltzmann.hpp"
#include "ising/datagen.hpp"
#include "ising/model.hpp"
#include "ising/oracle.hpp"
#include "ising/problems.hpp"
#include "ising/solver.hpp"
#include "ising/surrogate.hpp"

namespace {

using namespace ising;
using detail::format_double;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Options shared by every subcommand that names a spin system.
struct SystemConfig {
  int problem = 0;              // 1..4 preset id, 0 = unset
  std::vector<int> shape;       // p_bits, q_bits, alpha
  std::string table_path;
  std::vector<double> range;    // lo, hi
  double beta = 1.0;
  double lambda = 100.0;
  std::string mode = "aux-fixed";
};

struct ResolvedSystem {
  TruthTable table;
  Interval box;
  std::string name;
};

void add_system_options(CLI::App* cmd, SystemConfig& cfg) {
  cmd->add_option("--problem", cfg.problem,
                  "Benchmark multiplier preset id (1-4)")
      ->check(CLI::Range(1, 4));
  cmd->add_option("--shape", cfg.shape,
                  "Custom multiplier p_bits,q_bits,alpha")
      ->delimiter(',')
      ->expected(3);
  cmd->add_option("--table", cfg.table_path, "Truth-table file to load");
  cmd->add_option("--range", cfg.range,
                  "Coefficient box lo,hi (default: preset range, else -4,4)")
      ->delimiter(',')
      ->expected(2);
  cmd->add_option("--beta", cfg.beta, "Inverse temperature (default 1)");
  cmd->add_option("--lambda", cfg.lambda, "Max-smoothing sharpness "
                                          "(default 100)");
  cmd->add_option("--mode", cfg.mode, "Wrong-state mode (default aux-fixed)")
      ->check(CLI::IsMember({"aux-fixed", "aux-free-wrong"}));
}

ResolvedSystem resolve_system(const SystemConfig& cfg) {
  const int selectors = (cfg.problem > 0) + !cfg.shape.empty() +
                        !cfg.table_path.empty();
  if (selectors != 1)
    throw std::invalid_argument(
        "specify exactly one of --problem, --shape, --table");

  const auto build = [&cfg]() -> ResolvedSystem {
    if (cfg.problem > 0) {
      const ProblemPreset& preset = multiplier_problem(cfg.problem);
      return {preset.truth_table(), preset.box, preset.name()};
    }
    if (!cfg.shape.empty())
      return {build_multiplier_truth_table(cfg.shape[0], cfg.shape[1],
                                           cfg.shape[2]),
              {-4.0, 4.0},
              "multiplier-" + std::to_string(cfg.shape[0]) + "x" +
                  std::to_string(cfg.shape[1])};
    std::ifstream in(cfg.table_path);
    if (!in)
      throw std::invalid_argument("cannot open truth table: " +
                                  cfg.table_path);
    return {read_truth_table(in), {-4.0, 4.0}, "custom"};
  };

  ResolvedSystem out = build();
  if (!cfg.range.empty()) out.box = {cfg.range[0], cfg.range[1]};
  if (!out.box.valid())
    throw std::invalid_argument("coefficient range must satisfy lo < hi");
  boltzmann::validate_config({cfg.beta, cfg.lambda});
  return out;
}

void add_solver_options(CLI::App* cmd, solver::SolverOptions& options) {
  cmd->add_option("--starts", options.starts, "Solver multi-starts "
                                              "(default 8)");
  cmd->add_option("--max-iter", options.max_iterations,
                  "Iteration cap per start (default 2000)");
  cmd->add_option("--gtol", options.gradient_tolerance,
                  "Projected-gradient tolerance (default 1e-6)");
  cmd->add_option("--step-tol", options.step_tolerance,
                  "Step-size tolerance (default 1e-10)");
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return text.substr(begin, text.find_last_not_of(" \t\r") - begin + 1);
}

/// Expands "--config FILE" into "--key=value" tokens inserted right after
/// the subcommand name, so explicit flags anywhere on the command line
/// override the file (options keep the last value they are given). The
/// file is flat: one key=value per line, keys mirror the long option
/// names, blank lines and #-comments ignored.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty() || args.empty() || args[0].rfind('-', 0) == 0)
    return args;

  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  std::vector<std::string> extra;
  for (std::string line; std::getline(in, line);) {
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    const std::string key = eq == std::string::npos ? "" :
                            trim(entry.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line is not key=value: " + line);
    extra.push_back("--" + key + "=" + trim(entry.substr(eq + 1)));
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

/// Writes the report to stdout and, when a path is given, to that file
/// with identical bytes.
void emit_report(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (out_path.empty()) return;
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ' ';
    line += format_double(values[i]);
  }
  return line;
}

// ---------------------------------------------------------------- truth-table

struct TruthTableArgs {
  SystemConfig system;
  std::string out_path;
};

int run_truth_table(const TruthTableArgs& args) {
  const ResolvedSystem sys = resolve_system(args.system);
  const SystemShape& shape = sys.table.shape();
  const AuxArrayCount arrays = count_aux_arrays(shape);

  std::ostringstream report;
  report << "truth-table-report-1\n"
         << "problem " << sys.name << "\n"
         << "shape (" << shape.total() << "," << shape.inputs << ","
         << shape.aux << ")\n"
         << "rows " << sys.table.row_count() << "\n"
         << "constraints " << count_constraints(shape) << "\n"
         << "aux_arrays_log2 " << arrays.exponent << "\n"
         << "aux_arrays " << arrays.str() << "\n";
  emit_report(report.str(), "");

  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    if (!out) throw std::runtime_error("cannot write " + args.out_path);
    write_truth_table(out, sys.table);
  }
  return 0;
}

// ---------------------------------------------------------------------- solve

struct SolveArgs {
  SystemConfig system;
  solver::SolverOptions solver;
  std::string aux_file;
  std::uint64_t aux_index = 0;
  bool aux_index_set = false;
  std::string grad = "analytic";
  std::string trace_path;
  std::string out_path;
};

AuxiliaryArray load_aux(const SolveArgs& args, const TruthTable& table) {
  const int alpha = table.shape().aux;
  if (alpha == 0) {
    if (!args.aux_file.empty() || args.aux_index_set)
      throw std::invalid_argument(
          "table has no auxiliary spins; drop --aux-file/--aux-index");
    return {};
  }
  if (!args.aux_file.empty() && args.aux_index_set)
    throw std::invalid_argument("use --aux-file or --aux-index, not both");
  if (args.aux_index_set)
    return AuxiliaryArray::from_index(alpha, table.row_count(),
                                      args.aux_index);
  if (args.aux_file.empty())
    throw std::invalid_argument(
        "table has auxiliary spins; provide --aux-file or --aux-index");

  std::ifstream in(args.aux_file);
  if (!in)
    throw std::invalid_argument("cannot open aux file: " + args.aux_file);
  SpinVec flat;
  for (int value; in >> value;) flat.push_back(static_cast<Spin>(value));
  if (flat.size() != table.row_count() * static_cast<std::size_t>(alpha))
    throw std::invalid_argument("aux file: expected " +
                                std::to_string(table.row_count() *
                                               static_cast<std::size_t>(
                                                   alpha)) +
                                " spins");
  return AuxiliaryArray::from_flat(alpha, flat);
}

int run_solve(const SolveArgs& args) {
  const ResolvedSystem sys = resolve_system(args.system);
  const AuxiliaryArray aux = load_aux(args, sys.table);
  const WrongMode mode = parse_wrong_mode(args.system.mode);
  const StateSets sets = build_state_sets(sys.table, aux, mode);
  const boltzmann::ObjectiveConfig config{args.system.beta,
                                          args.system.lambda};
  solver::validate_options(args.solver);

  std::ofstream trace_out;
  solver::TraceSink sink;
  if (!args.trace_path.empty()) {
    trace_out.open(args.trace_path);
    if (!trace_out)
      throw std::runtime_error("cannot write " + args.trace_path);
    trace_out << "# start iteration value step_norm pg_norm\n";
    sink = [&trace_out](const solver::TraceRecord& r) {
      trace_out << r.start << ' ' << r.iteration << ' '
                << format_double(r.value) << ' '
                << format_double(r.step_norm) << ' '
                << format_double(r.projected_gradient_norm) << '\n';
    };
  }

  const auto t0 = Clock::now();
  const solver::GradientMode grad_mode =
      args.grad == "fd" ? solver::GradientMode::FiniteDifference
                        : solver::GradientMode::Analytic;
  const solver::SolveResult result =
      solver::minimize(sets, sys.box, config, args.solver, sink, grad_mode);
  std::cerr << "solve wall_s " << seconds_since(t0) << "\n";

  std::vector<double> psi(result.psi.values.data(),
                          result.psi.values.data() + result.psi.values.size());
  std::ostringstream report;
  report << "solve-report-1\n"
         << "problem " << sys.name << "\n"
         << "shape (" << sets.shape.total() << "," << sets.shape.inputs << ","
         << sets.shape.aux << ")\n"
         << "mode " << to_string(mode) << "\n"
         << "beta " << format_double(config.beta) << "\n"
         << "lambda " << format_double(config.lambda) << "\n"
         << "range " << format_double(sys.box.lo) << " "
         << format_double(sys.box.hi) << "\n"
         << "gradient " << (grad_mode == solver::GradientMode::Analytic
                                ? "analytic"
                                : "fd")
         << "\n"
         << "seed " << args.solver.seed << "\n"
         << "starts " << args.solver.starts << "\n"
         << "converged " << (result.converged ? 1 : 0) << "\n"
         << "iterations " << result.iterations << "\n"
         << "f_star " << format_double(result.f_star) << "\n"
         << "rho " << format_double(result.rho) << "\n"
         << "start_values " << join_doubles(result.start_values) << "\n"
         << "psi " << join_doubles(psi) << "\n";
  emit_report(report.str(), args.out_path);
  return 0;
}

// -------------------------------------------------------------------- datagen

struct DatagenArgs {
  SystemConfig system;
  solver::SolverOptions solver;
  std::size_t rows = 1000;
  double balance = -1.0;
  bool balance_set = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_prefix;
};

int run_datagen(const DatagenArgs& args) {
  const ResolvedSystem sys = resolve_system(args.system);
  if (sys.table.shape().aux == 0)
    throw std::invalid_argument(
        "datagen needs a table with auxiliary spins (alpha >= 1)");
  if (args.rows == 0) throw std::invalid_argument("--rows must be positive");

  datagen::SampleOptions sample;
  if (args.balance_set) sample.balance = args.balance;
  sample.seed = args.seed;
  sample.mode = parse_wrong_mode(args.system.mode);

  const auto t0 = Clock::now();
  const datagen::SampleResult sampled =
      datagen::sample_aux_arrays(sys.table, sys.box, args.rows, sample);

  datagen::GenerateOptions generate;
  generate.objective = {args.system.beta, args.system.lambda};
  generate.solver = args.solver;
  generate.solver.seed = args.seed;
  generate.mode = sample.mode;
  generate.threads = args.threads;
  datagen::Dataset dataset = datagen::generate_dataset(
      sys.table, sys.box, sampled.arrays, generate, sys.name);
  dataset.manifest.box = sys.box;
  if (args.balance_set) dataset.manifest.balance = args.balance;
  std::cerr << "datagen wall_s " << seconds_since(t0) << "\n";

  const std::string csv_path = args.out_prefix + ".csv";
  const std::string manifest_path = args.out_prefix + ".manifest";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    datagen::write_dataset_csv(csv, dataset.rows);
    std::ofstream manifest(manifest_path);
    if (!manifest) throw std::runtime_error("cannot write " + manifest_path);
    datagen::write_manifest(manifest, dataset.manifest);
  }

  std::ostringstream report;
  report << "datagen-report-1\n"
         << "problem " << sys.name << "\n"
         << "rows " << dataset.rows.size() << "\n";
  if (args.balance_set)
    report << "feasible " << sampled.feasible << "\n"
           << "infeasible " << sampled.infeasible << "\n"
           << "balance_met " << (sampled.balance_met ? 1 : 0) << "\n";
  if (!sampled.note.empty()) report << "note " << sampled.note << "\n";
  report << "nonconverged_fraction "
         << format_double(dataset.manifest.nonconverged_fraction) << "\n"
         << "degraded " << (dataset.manifest.degraded ? 1 : 0) << "\n"
         << "csv " << csv_path << "\n"
         << "manifest " << manifest_path << "\n";
  emit_report(report.str(), "");
  return 0;
}

// ---------------------------------------------------------------------- train

struct TrainArgs {
  std::string data_path;
  std::string model = "both";
  double split = 0.8;
  std::uint64_t seed = 0;
  surrogate::ForestOptions forest;
  std::vector<int> layers = {64, 64};
  int epochs = 200;
  double step_size = 0.03;
  int batch_size = 32;
  std::string out_prefix;
};

std::vector<datagen::DatasetRow> load_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset: " + path);
  return datagen::read_dataset_csv(in);
}

std::string join_ints(const std::vector<int>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(values[i]);
  }
  return line;
}

int run_train(const TrainArgs& args) {
  if (args.split <= 0.0 || args.split > 1.0)
    throw std::invalid_argument("--split must be in (0, 1]");
  const std::vector<datagen::DatasetRow> rows = load_rows(args.data_path);
  const auto [train, test] =
      datagen::split_dataset(rows, args.split, args.seed);
  if (train.empty()) throw std::invalid_argument("training split is empty");

  std::ostringstream report;
  report << "train-report-1\n"
         << "data " << args.data_path << "\n"
         << "rows " << rows.size() << "\n"
         << "train_rows " << train.size() << "\n"
         << "test_rows " << test.size() << "\n"
         << "seed " << args.seed << "\n";

  const bool want_forest = args.model != "mlp";
  const bool want_mlp = args.model != "forest";

  if (want_forest) {
    surrogate::ForestOptions options = args.forest;
    options.seed = args.seed;
    const auto t0 = Clock::now();
    const surrogate::ForestModel forest = surrogate::train_forest(train,
                                                                  options);
    std::cerr << "train forest wall_s " << seconds_since(t0) << "\n";
    const std::string path = args.out_prefix + ".forest";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    surrogate::save_forest(out, forest);
    report << "forest_trees " << options.tree_count << "\n"
           << "forest_depth " << options.max_depth << "\n"
           << "forest_train_mse "
           << format_double(surrogate::evaluate_mse(forest, train)) << "\n";
    if (!test.empty())
      report << "forest_test_mse "
             << format_double(surrogate::evaluate_mse(forest, test)) << "\n";
    report << "forest_out " << path << "\n";
  }

  if (want_mlp) {
    surrogate::MlpOptions options;
    options.hidden = args.layers;
    options.epochs = args.epochs;
    options.step_size = args.step_size;
    options.batch_size = args.batch_size;
    options.seed = args.seed;
    const auto t0 = Clock::now();
    const surrogate::MlpModel mlp = surrogate::train_mlp(train, options);
    std::cerr << "train mlp wall_s " << seconds_since(t0) << "\n";
    const std::string path = args.out_prefix + ".mlp";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    surrogate::save_mlp(out, mlp);
    report << "mlp_layers " << join_ints(args.layers) << "\n"
           << "mlp_epochs " << args.epochs << "\n"
           << "mlp_train_mse "
           << format_double(surrogate::evaluate_mse(mlp, train)) << "\n";
    if (!test.empty())
      report << "mlp_test_mse "
             << format_double(surrogate::evaluate_mse(mlp, test)) << "\n";
    report << "mlp_out " << path << "\n";
  }

  emit_report(report.str(), "");
  return 0;
}

// ----------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model_path;
  std::string data_path;
};

int run_eval(const EvalArgs& args) {
  std::ifstream in(args.model_path);
  if (!in)
    throw std::invalid_argument("cannot open model: " + args.model_path);
  std::string tag;
  in >> tag;
  in.seekg(0);

  const std::vector<datagen::DatasetRow> rows = load_rows(args.data_path);
  std::string kind;
  double mse = 0.0;
  if (tag == "forest-model-1") {
    kind = "forest";
    mse = surrogate::evaluate_mse(surrogate::load_forest(in), rows);
  } else if (tag == "mlp-model-1") {
    kind = "mlp";
    mse = surrogate::evaluate_mse(surrogate::load_mlp(in), rows);
  } else {
    throw std::invalid_argument("unrecognized model file: " +
                                args.model_path);
  }

  std::ostringstream report;
  report << "eval-report-1\n"
         << "model " << kind << "\n"
         << "rows " << rows.size() << "\n"
         << "mse " << format_double(mse) << "\n";
  emit_report(report.str(), "");
  return 0;
}

// ---------------------------------------------------------------------- bench

struct BenchArgs {
  SystemConfig system;
  solver::SolverOptions solver;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string forest_path;
  std::string mlp_path;
  std::string out_path;
};

struct BenchRow {
  std::string method;
  std::size_t queries = 0;
  double total_ms = 0.0;
  double mean_ms = 0.0;
};

void print_bench_table(const std::vector<BenchRow>& rows,
                       const std::string& csv_path) {
  std::ostringstream table;
  table << std::left << std::setw(16) << "method" << std::right
        << std::setw(10) << "queries" << std::setw(16) << "total_ms"
        << std::setw(16) << "mean_ms" << "\n";
  table << std::fixed << std::setprecision(4);
  for (const BenchRow& row : rows)
    table << std::left << std::setw(16) << row.method << std::right
          << std::setw(10) << row.queries << std::setw(16) << row.total_ms
          << std::setw(16) << row.mean_ms << "\n";
  std::cout << table.str();

  if (csv_path.empty()) return;
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  csv << "method,queries,total_ms,mean_ms\n";
  for (const BenchRow& row : rows)
    csv << row.method << ',' << row.queries << ','
        << format_double(row.total_ms) << ',' << format_double(row.mean_ms)
        << "\n";
}

template <typename Model>
BenchRow time_predictor(const std::string& method, const Model& model,
                        const std::vector<SpinVec>& inputs) {
  volatile double sink = 0.0;
  double elapsed = 0.0;
  std::size_t passes = 0;
  // Repeat whole passes until the clock has seen enough work to trust.
  while (elapsed < 0.05 && passes < 200000) {
    const auto t0 = Clock::now();
    for (const SpinVec& input : inputs)
      sink = sink + surrogate::predict(model, input);
    elapsed += seconds_since(t0);
    ++passes;
  }
  const double mean_s = elapsed / static_cast<double>(passes * inputs.size());
  return {method, inputs.size(), mean_s * 1e3 * inputs.size(), mean_s * 1e3};
}

int run_bench(const BenchArgs& args) {
  if (args.count == 0) {
    print_bench_table({}, args.out_path);
    return 0;
  }
  const ResolvedSystem sys = resolve_system(args.system);
  if (sys.table.shape().aux == 0)
    throw std::invalid_argument(
        "bench needs a table with auxiliary spins (alpha >= 1)");
  if (args.forest_path.empty() || args.mlp_path.empty())
    throw std::invalid_argument("bench needs --forest and --mlp model files");

  std::ifstream forest_in(args.forest_path);
  if (!forest_in)
    throw std::invalid_argument("cannot open model: " + args.forest_path);
  const surrogate::ForestModel forest = surrogate::load_forest(forest_in);
  std::ifstream mlp_in(args.mlp_path);
  if (!mlp_in)
    throw std::invalid_argument("cannot open model: " + args.mlp_path);
  const surrogate::MlpModel mlp = surrogate::load_mlp(mlp_in);

  const WrongMode mode = parse_wrong_mode(args.system.mode);
  datagen::SampleOptions sample;
  sample.balance = 0.5;  // half feasible, half infeasible
  sample.seed = args.seed;
  sample.mode = mode;
  const datagen::SampleResult sampled =
      datagen::sample_aux_arrays(sys.table, sys.box, args.count, sample);
  if (!sampled.note.empty()) std::cerr << "bench note: " << sampled.note
                                       << "\n";

  const boltzmann::ObjectiveConfig config{args.system.beta,
                                          args.system.lambda};
  solver::validate_options(args.solver);
  std::vector<SpinVec> inputs;
  inputs.reserve(sampled.arrays.size());
  for (const AuxiliaryArray& aux : sampled.arrays)
    inputs.push_back(aux.flatten());

  double fd_s = 0.0;
  double analytic_s = 0.0;
  for (const AuxiliaryArray& aux : sampled.arrays) {
    const StateSets sets = build_state_sets(sys.table, aux, mode);
    auto t0 = Clock::now();
    (void)solver::minimize(sets, sys.box, config, args.solver, {},
                           solver::GradientMode::FiniteDifference);
    fd_s += seconds_since(t0);
    t0 = Clock::now();
    (void)solver::minimize(sets, sys.box, config, args.solver, {},
                           solver::GradientMode::Analytic);
    analytic_s += seconds_since(t0);
  }
  const double n = static_cast<double>(sampled.arrays.size());

  std::vector<BenchRow> rows;
  rows.push_back({"fd-solve", sampled.arrays.size(), fd_s * 1e3,
                  fd_s * 1e3 / n});
  rows.push_back({"analytic-solve", sampled.arrays.size(), analytic_s * 1e3,
                  analytic_s * 1e3 / n});
  rows.push_back(time_predictor("forest-predict", forest, inputs));
  rows.push_back(time_predictor("mlp-predict", mlp, inputs));
  print_bench_table(rows, args.out_path);

  // Contract: the analytic gradient beats finite differences, and a trained
  // predictor is at least an order of magnitude faster than any solve.
  const double analytic_mean = rows[1].mean_ms;
  if (analytic_s >= fd_s)
    throw std::runtime_error("bench: analytic solve not faster than "
                             "finite-difference solve");
  for (std::size_t i = 2; i < rows.size(); ++i)
    if (rows[i].mean_ms * 10.0 >= analytic_mean)
      throw std::runtime_error("bench: " + rows[i].method +
                               " not well under 10x the analytic solve");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reverse-Ising toolkit: truth tables, coefficient solving, "
               "dataset generation, surrogate training, benchmarks"};
  app.require_subcommand(1);
  // Later occurrences override earlier ones, letting command-line flags
  // take precedence over expanded --config values.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;  // applied by expand_config before parsing
  const auto add_config_option = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "Flat key=value config file; keys mirror long option "
                    "names");
  };

  TruthTableArgs tt;
  CLI::App* tt_cmd = app.add_subcommand(
      "truth-table", "Build a truth table and report its counts");
  add_config_option(tt_cmd);
  add_system_options(tt_cmd, tt.system);
  tt_cmd->add_option("--out", tt.out_path, "Write the table to this file");

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand(
      "solve", "Minimize the smoothed failure objective for one aux array");
  add_config_option(solve_cmd);
  add_system_options(solve_cmd, solve.system);
  add_solver_options(solve_cmd, solve.solver);
  solve_cmd->add_option("--seed", solve.solver.seed, "Solver seed");
  solve_cmd->add_option("--aux-file", solve.aux_file,
                        "Whitespace-separated +-1 aux spins, row-major");
  solve_cmd
      ->add_option("--aux-index", solve.aux_index,
                   "Aux assignment by lexicographic index")
      ->trigger_on_parse()
      ->each([&solve](const std::string&) { solve.aux_index_set = true; });
  solve_cmd
      ->add_option("--grad", solve.grad,
                   "Gradient mode: analytic or fd (default analytic)")
      ->check(CLI::IsMember({"analytic", "fd"}));
  solve_cmd->add_option("--trace", solve.trace_path,
                        "Write per-iteration trace lines to this file");
  solve_cmd->add_option("--out", solve.out_path,
                        "Write the report to this file as well");

  DatagenArgs datagen_args;
  CLI::App* datagen_cmd = app.add_subcommand(
      "datagen", "Sample aux arrays, solve each, write CSV + manifest");
  add_config_option(datagen_cmd);
  add_system_options(datagen_cmd, datagen_args.system);
  add_solver_options(datagen_cmd, datagen_args.solver);
  datagen_cmd->add_option("--rows", datagen_args.rows,
                          "Dataset rows to generate (default 1000)");
  datagen_cmd
      ->add_option("--balance", datagen_args.balance,
                   "Target feasible fraction in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->trigger_on_parse()
      ->each([&datagen_args](const std::string&) {
        datagen_args.balance_set = true;
      });
  datagen_cmd->add_option("--seed", datagen_args.seed, "Master dataset seed");
  datagen_cmd->add_option("--threads", datagen_args.threads,
                          "Worker threads (0 = hardware)");
  datagen_cmd
      ->add_option("--out", datagen_args.out_prefix,
                   "Output prefix; writes <prefix>.csv and <prefix>.manifest")
      ->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train surrogates on a dataset CSV and report MSE");
  add_config_option(train_cmd);
  train_cmd->add_option("--data", train.data_path, "Dataset CSV")->required();
  train_cmd->add_option("--model", train.model,
                        "Which surrogates: forest, mlp, both (default)")
      ->check(CLI::IsMember({"forest", "mlp", "both"}));
  train_cmd->add_option("--split", train.split,
                        "Training fraction (default 0.8)");
  train_cmd->add_option("--seed", train.seed, "Split/training seed");
  train_cmd->add_option("--trees", train.forest.tree_count,
                        "Forest size (default 100)");
  train_cmd->add_option("--depth", train.forest.max_depth,
                        "Tree depth cap (default 16)");
  train_cmd->add_option("--threads", train.forest.threads,
                        "Forest training threads (0 = hardware)");
  train_cmd->add_option("--layers", train.layers,
                        "MLP hidden layer widths (default 64,64)")
      ->delimiter(',');
  train_cmd->add_option("--epochs", train.epochs,
                        "MLP training epochs (default 200)");
  train_cmd->add_option("--step-size", train.step_size,
                        "MLP SGD step size (default 0.03)");
  train_cmd->add_option("--batch", train.batch_size,
                        "MLP minibatch size (default 32)");
  train_cmd
      ->add_option("--out", train.out_prefix,
                   "Output prefix; writes <prefix>.forest and <prefix>.mlp")
      ->required();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Report a saved model's MSE on a dataset CSV");
  add_config_option(eval_cmd);
  eval_cmd->add_option("--model", eval.model_path, "Model file")->required();
  eval_cmd->add_option("--data", eval.data_path, "Dataset CSV")->required();

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Time solver and predictor methods on sampled aux arrays");
  add_config_option(bench_cmd);
  add_system_options(bench_cmd, bench.system);
  add_solver_options(bench_cmd, bench.solver);
  bench_cmd->add_option("--count", bench.count,
                        "Aux arrays to benchmark (0 = empty table)");
  bench_cmd->add_option("--seed", bench.seed, "Sampling seed");
  bench_cmd->add_option("--forest", bench.forest_path,
                        "Trained forest model file");
  bench_cmd->add_option("--mlp", bench.mlp_path, "Trained MLP model file");
  bench_cmd->add_option("--out", bench.out_path,
                        "Write the timing table as CSV to this file");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
    if (tt_cmd->parsed()) return run_truth_table(tt);
    if (solve_cmd->parsed()) return run_solve(solve);
    if (datagen_cmd->parsed()) return run_datagen(datagen_args);
    if (train_cmd->parsed()) return run_train(train);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (bench_cmd->parsed()) return run_bench(bench);
    return 2;
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
