#pragma once

/// Surrogate regressors mapping a flattened auxiliary array to the success
/// probability: a variance-reduction random forest and a small ReLU MLP,
/// both self-contained and bit-reproducible from their seeds.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ising/datagen.hpp"
#include "ising/model.hpp"

namespace ising::surrogate {

/// Binary regression tree over +-1 features; every split tests one feature
/// against 0, so left = spin -1, right = spin +1.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict(std::span<const Spin> features) const;
};

struct ForestOptions {
  int tree_count = 100;
  int max_depth = 16;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  int feature_count = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;
};

/// Bootstrap-aggregated trees; each node searches ceil(sqrt(F)) random
/// features for the best variance reduction, ties to the lowest feature
/// index. Tree t draws from seed mix(seed, t), so training is identical
/// for any thread count.
ForestModel train_forest(const std::vector<datagen::DatasetRow>& rows,
                         const ForestOptions& options);

/// Mean over trees, clamped to [0, 1].
double predict(const ForestModel& model, std::span<const Spin> features);

struct MlpOptions {
  std::vector<int> hidden = {64, 64};
  int epochs = 200;
  double step_size = 0.03;
  int batch_size = 32;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct MlpModel {
  std::vector<int> layer_sizes;  // input, hidden..., 1
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  MlpOptions options;
  std::vector<double> validation_history;  // held-out MSE after each epoch
};

/// ReLU hidden layers, linear output, mini-batch SGD on mean squared
/// error. Initial weights are uniform with per-layer width scaling; the
/// epoch shuffles and the train/validation split are seeded. Throws
/// std::runtime_error if the loss turns non-finite.
MlpModel train_mlp(const std::vector<datagen::DatasetRow>& rows,
                   const MlpOptions& options);

/// Forward pass, clamped to [0, 1].
double predict(const MlpModel& model, std::span<const Spin> features);

/// Mean squared error of a predictor over labelled rows.
double evaluate_mse(const ForestModel& model,
                    const std::vector<datagen::DatasetRow>& rows);
double evaluate_mse(const MlpModel& model,
                    const std::vector<datagen::DatasetRow>& rows);

/// Plain-text serialization; full float precision, so save/load round-trips
/// reproduce predictions bit for bit.
void save_forest(std::ostream& out, const ForestModel& model);
ForestModel load_forest(std::istream& in);
void save_mlp(std::ostream& out, const MlpModel& model);
MlpModel load_mlp(std::istream& in);

}  // namespace ising::surrogate
