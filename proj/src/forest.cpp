#include "ising/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "detail/text.hpp"

namespace ising::surrogate {

using detail::format_double;

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

double clamp_unit(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

struct Frame {
  std::vector<const datagen::DatasetRow*> rows;  // bootstrap sample views
  int feature_count = 0;
  int max_depth = 0;
  detail::Rng* rng = nullptr;
  std::vector<int> feature_scratch;
};

struct SplitStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double y) {
    sum += y;
    sum_sq += y * y;
    ++count;
  }
  /// Sum of squared deviations from the mean.
  double sse() const {
    return count == 0 ? 0.0 : sum_sq - sum * sum / static_cast<double>(count);
  }
};

/// Grows the subtree over rows [begin, end) of frame.rows and returns its
/// node index. Children are laid out depth-first after their parent.
int grow(Frame& frame, RegressionTree& tree, std::size_t begin,
         std::size_t end, int depth) {
  SplitStats all;
  for (std::size_t i = begin; i < end; ++i) all.add(frame.rows[i]->rho);
  const double mean = all.sum / static_cast<double>(all.count);

  const int node = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({-1, -1, -1, mean});
  if (depth >= frame.max_depth || all.count < 2 || all.sse() <= 1e-15)
    return node;

  // Candidate features: ceil(sqrt(F)) distinct draws, scanned in ascending
  // order so equal gains resolve to the lowest feature index.
  const int k = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(frame.feature_count))));
  std::vector<int>& feats = frame.feature_scratch;
  for (int i = 0; i < frame.feature_count; ++i)
    feats[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        frame.rng->index(static_cast<std::size_t>(frame.feature_count - i));
    std::swap(feats[static_cast<std::size_t>(i)], feats[j]);
  }
  std::sort(feats.begin(), feats.begin() + k);

  int best_feature = -1;
  double best_gain = 1e-12;  // require a strictly useful split
  for (int c = 0; c < k; ++c) {
    const int f = feats[static_cast<std::size_t>(c)];
    SplitStats left;
    for (std::size_t i = begin; i < end; ++i)
      if (frame.rows[i]->aux[static_cast<std::size_t>(f)] < 0)
        left.add(frame.rows[i]->rho);
    if (left.count == 0 || left.count == all.count) continue;
    SplitStats right;
    right.sum = all.sum - left.sum;
    right.sum_sq = all.sum_sq - left.sum_sq;
    right.count = all.count - left.count;
    const double gain = all.sse() - left.sse() - right.sse();
    if (gain > best_gain) {
      best_gain = gain;
      best_feature = f;
    }
  }
  if (best_feature < 0) return node;

  const auto mid = std::stable_partition(
                       frame.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                       frame.rows.begin() + static_cast<std::ptrdiff_t>(end),
                       [best_feature](const datagen::DatasetRow* row) {
                         return row->aux[static_cast<std::size_t>(
                                    best_feature)] < 0;
                       }) -
                   frame.rows.begin();

  tree.nodes[static_cast<std::size_t>(node)].feature = best_feature;
  const int left =
      grow(frame, tree, begin, static_cast<std::size_t>(mid), depth + 1);
  tree.nodes[static_cast<std::size_t>(node)].left = left;
  const int right =
      grow(frame, tree, static_cast<std::size_t>(mid), end, depth + 1);
  tree.nodes[static_cast<std::size_t>(node)].right = right;
  return node;
}

void check_rows(const std::vector<datagen::DatasetRow>& rows) {
  require(!rows.empty(), "train: no rows");
  const std::size_t width = rows.front().aux.size();
  require(width >= 1, "train: rows have no features");
  for (const datagen::DatasetRow& row : rows)
    require(row.aux.size() == width, "train: ragged feature widths");
}

}  // namespace

double RegressionTree::predict(std::span<const Spin> features) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = features[static_cast<std::size_t>(n.feature)] < 0 ? n.left
                                                             : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

ForestModel train_forest(const std::vector<datagen::DatasetRow>& rows,
                         const ForestOptions& options) {
  check_rows(rows);
  require(options.tree_count >= 1, "forest: tree_count must be >= 1");
  require(options.max_depth >= 1, "forest: max_depth must be >= 1");

  ForestModel model;
  model.feature_count = static_cast<int>(rows.front().aux.size());
  model.max_depth = options.max_depth;
  model.seed = options.seed;
  model.trees.resize(static_cast<std::size_t>(options.tree_count));

  detail::parallel_for(
      static_cast<std::size_t>(options.tree_count),
      [&](std::size_t t) {
        detail::Rng rng(detail::mix_seed(options.seed, t));
        Frame frame;
        frame.feature_count = model.feature_count;
        frame.max_depth = options.max_depth;
        frame.rng = &rng;
        frame.feature_scratch.resize(
            static_cast<std::size_t>(model.feature_count));
        frame.rows.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          frame.rows[i] = &rows[rng.index(rows.size())];  // bootstrap
        RegressionTree& tree = model.trees[t];
        tree.nodes.reserve(rows.size() / 4);
        grow(frame, tree, 0, frame.rows.size(), 0);
      },
      options.threads);
  return model;
}

double predict(const ForestModel& model, std::span<const Spin> features) {
  require(static_cast<int>(features.size()) == model.feature_count,
          "predict: feature width mismatch");
  double sum = 0.0;
  for (const RegressionTree& tree : model.trees) sum += tree.predict(features);
  return clamp_unit(sum / static_cast<double>(model.trees.size()));
}

double evaluate_mse(const ForestModel& model,
                    const std::vector<datagen::DatasetRow>& rows) {
  check_rows(rows);
  double sum = 0.0;
  for (const datagen::DatasetRow& row : rows) {
    const double err = predict(model, row.aux) - row.rho;
    sum += err * err;
  }
  return sum / static_cast<double>(rows.size());
}

void save_forest(std::ostream& out, const ForestModel& model) {
  out << "forest-model-1\n";
  out << "feature_count " << model.feature_count << '\n';
  out << "max_depth " << model.max_depth << '\n';
  out << "seed " << model.seed << '\n';
  out << "trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const RegressionTree& tree = model.trees[t];
    out << "tree " << t << ' ' << tree.nodes.size() << '\n';
    for (const TreeNode& n : tree.nodes)
      out << n.feature << ' ' << n.left << ' ' << n.right << ' '
          << format_double(n.value) << '\n';
  }
}

ForestModel load_forest(std::istream& in) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("load forest: ") + what);
  };
  std::string tag;
  if (!(in >> tag) || tag != "forest-model-1") fail("bad format tag");

  ForestModel model;
  std::size_t tree_count = 0;
  if (!(in >> tag) || tag != "feature_count" || !(in >> model.feature_count))
    fail("bad feature_count");
  if (!(in >> tag) || tag != "max_depth" || !(in >> model.max_depth))
    fail("bad max_depth");
  if (!(in >> tag) || tag != "seed" || !(in >> model.seed)) fail("bad seed");
  if (!(in >> tag) || tag != "trees" || !(in >> tree_count))
    fail("bad tree count");

  model.trees.resize(tree_count);
  for (std::size_t t = 0; t < tree_count; ++t) {
    std::size_t index = 0;
    std::size_t node_count = 0;
    if (!(in >> tag) || tag != "tree" || !(in >> index >> node_count) ||
        index != t)
      fail("bad tree header");
    RegressionTree& tree = model.trees[t];
    tree.nodes.resize(node_count);
    for (TreeNode& n : tree.nodes) {
      if (!(in >> n.feature >> n.left >> n.right >> n.value))
        fail("bad node");
      if (n.feature >= model.feature_count) fail("node feature out of range");
      const int limit = static_cast<int>(node_count);
      if (n.feature >= 0 &&
          (n.left < 0 || n.left >= limit || n.right < 0 || n.right >= limit))
        fail("node child out of range");
    }
    if (node_count == 0) fail("empty tree");
  }
  return model;
}

}  // namespace ising::surrogate
