#include "ising/surrogate.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "detail/rng.hpp"
#include "detail/text.hpp"

namespace ising::surrogate {

using detail::format_double;

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

double clamp_unit(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void shuffle_indices(std::vector<std::size_t>& order, detail::Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.index(i)]);
}

Eigen::VectorXd forward(const MlpModel& model, Eigen::VectorXd activation) {
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    activation = (model.weights[l] * activation + model.biases[l]).eval();
    if (l + 1 < layers) activation = activation.cwiseMax(0.0);  // ReLU
  }
  return activation;
}

double mse_over(const MlpModel& model, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y,
                const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i : indices) {
    const double pred =
        forward(model, x.row(static_cast<Eigen::Index>(i)).transpose())[0];
    const double err = pred - y[static_cast<Eigen::Index>(i)];
    sum += err * err;
  }
  return sum / static_cast<double>(indices.size());
}

}  // namespace

MlpModel train_mlp(const std::vector<datagen::DatasetRow>& rows,
                   const MlpOptions& options) {
  require(!rows.empty(), "mlp: no rows");
  const std::size_t width = rows.front().aux.size();
  require(width >= 1, "mlp: rows have no features");
  for (const datagen::DatasetRow& row : rows)
    require(row.aux.size() == width, "mlp: ragged feature widths");
  require(options.epochs >= 1, "mlp: epochs must be >= 1");
  require(options.batch_size >= 1, "mlp: batch_size must be >= 1");
  require(options.step_size > 0.0, "mlp: step_size must be > 0");
  require(options.validation_fraction >= 0.0 &&
              options.validation_fraction <= 0.5,
          "mlp: validation_fraction must be in [0, 0.5]");
  for (int h : options.hidden) require(h >= 1, "mlp: hidden width must be >= 1");

  const std::size_t n = rows.size();
  Eigen::MatrixXd x(n, width);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < width; ++k)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i].aux[k];
    y[static_cast<Eigen::Index>(i)] = rows[i].rho;
  }

  MlpModel model;
  model.options = options;
  model.layer_sizes.push_back(static_cast<int>(width));
  for (int h : options.hidden) model.layer_sizes.push_back(h);
  model.layer_sizes.push_back(1);

  // Width-scaled uniform init; draws are ordered layer by layer, row by
  // row, so the initial state is a pure function of the seed.
  detail::Rng init_rng(detail::mix_seed(options.seed, 0));
  const std::size_t layers = model.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = model.layer_sizes[l];
    const int fan_out = model.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        w(r, c) = init_rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  // Seeded split: shuffle once, last chunk is the held-out fold.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  detail::Rng split_rng(detail::mix_seed(options.seed, 1));
  shuffle_indices(order, split_rng);
  const auto val_count = static_cast<std::size_t>(std::llround(
      options.validation_fraction * static_cast<double>(n)));
  require(val_count < n, "mlp: validation fold swallows every row");
  std::vector<std::size_t> train_idx(order.begin(),
                                     order.end() - static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_count),
                                   order.end());

  const std::size_t batch = static_cast<std::size_t>(options.batch_size);
  std::vector<Eigen::MatrixXd> z(layers);   // pre-activations per layer
  std::vector<Eigen::MatrixXd> a(layers + 1);  // activations, a[0] = input

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    detail::Rng epoch_rng(
        detail::mix_seed(options.seed, 2 + static_cast<std::uint64_t>(epoch)));
    shuffle_indices(train_idx, epoch_rng);

    for (std::size_t begin = 0; begin < train_idx.size(); begin += batch) {
      const std::size_t size = std::min(batch, train_idx.size() - begin);
      a[0].resize(static_cast<Eigen::Index>(size),
                  static_cast<Eigen::Index>(width));
      Eigen::VectorXd yb(static_cast<Eigen::Index>(size));
      for (std::size_t r = 0; r < size; ++r) {
        a[0].row(static_cast<Eigen::Index>(r)) =
            x.row(static_cast<Eigen::Index>(train_idx[begin + r]));
        yb[static_cast<Eigen::Index>(r)] =
            y[static_cast<Eigen::Index>(train_idx[begin + r])];
      }

      for (std::size_t l = 0; l < layers; ++l) {
        z[l] = (a[l] * model.weights[l].transpose()).rowwise() +
               model.biases[l].transpose();
        a[l + 1] = l + 1 < layers ? z[l].cwiseMax(0.0) : z[l];
      }

      // d(mean squared error)/d(output) = 2 (pred - y) / batch
      Eigen::MatrixXd dz = a[layers];
      dz.col(0) -= yb;
      dz *= 2.0 / static_cast<double>(size);

      for (std::size_t l = layers; l-- > 0;) {
        const Eigen::MatrixXd dw = dz.transpose() * a[l];
        const Eigen::VectorXd db = dz.colwise().sum().transpose();
        if (l > 0) {
          dz = (dz * model.weights[l]).eval();
          dz = dz.cwiseProduct(
              (z[l - 1].array() > 0.0).cast<double>().matrix());
        }
        model.weights[l] -= options.step_size * dw;
        model.biases[l] -= options.step_size * db;
      }
    }

    const double held_out = val_idx.empty()
                                ? mse_over(model, x, y, train_idx)
                                : mse_over(model, x, y, val_idx);
    if (!std::isfinite(held_out))
      throw std::runtime_error("mlp: loss diverged at epoch " +
                               std::to_string(epoch));
    model.validation_history.push_back(held_out);
  }
  return model;
}

double predict(const MlpModel& model, std::span<const Spin> features) {
  require(!model.layer_sizes.empty() &&
              static_cast<int>(features.size()) == model.layer_sizes.front(),
          "predict: feature width mismatch");
  Eigen::VectorXd input(static_cast<Eigen::Index>(features.size()));
  for (std::size_t k = 0; k < features.size(); ++k)
    input[static_cast<Eigen::Index>(k)] = features[k];
  return clamp_unit(forward(model, std::move(input))[0]);
}

double evaluate_mse(const MlpModel& model,
                    const std::vector<datagen::DatasetRow>& rows) {
  require(!rows.empty(), "evaluate: no rows");
  double sum = 0.0;
  for (const datagen::DatasetRow& row : rows) {
    const double err = predict(model, row.aux) - row.rho;
    sum += err * err;
  }
  return sum / static_cast<double>(rows.size());
}

void save_mlp(std::ostream& out, const MlpModel& model) {
  out << "mlp-model-1\n";
  out << "layers " << model.layer_sizes.size();
  for (int s : model.layer_sizes) out << ' ' << s;
  out << '\n';
  out << "epochs " << model.options.epochs << '\n';
  out << "step_size " << format_double(model.options.step_size) << '\n';
  out << "batch_size " << model.options.batch_size << '\n';
  out << "validation_fraction "
      << format_double(model.options.validation_fraction) << '\n';
  out << "seed " << model.options.seed << '\n';
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Eigen::MatrixXd& w = model.weights[l];
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(w(r, c));
      }
      out << '\n';
    }
    out << "bias " << l << '\n';
    for (Eigen::Index r = 0; r < model.biases[l].size(); ++r) {
      if (r) out << ' ';
      out << format_double(model.biases[l][r]);
    }
    out << '\n';
  }
  out << "validation_history " << model.validation_history.size();
  for (double v : model.validation_history) out << ' ' << format_double(v);
  out << '\n';
}

MlpModel load_mlp(std::istream& in) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("load mlp: ") + what);
  };
  std::string tag;
  if (!(in >> tag) || tag != "mlp-model-1") fail("bad format tag");

  MlpModel model;
  std::size_t layer_count = 0;
  if (!(in >> tag) || tag != "layers" || !(in >> layer_count) ||
      layer_count < 2)
    fail("bad layer header");
  model.layer_sizes.resize(layer_count);
  for (int& s : model.layer_sizes)
    if (!(in >> s) || s < 1) fail("bad layer size");
  if (!(in >> tag) || tag != "epochs" || !(in >> model.options.epochs))
    fail("bad epochs");
  if (!(in >> tag) || tag != "step_size" || !(in >> model.options.step_size))
    fail("bad step_size");
  if (!(in >> tag) || tag != "batch_size" ||
      !(in >> model.options.batch_size))
    fail("bad batch_size");
  if (!(in >> tag) || tag != "validation_fraction" ||
      !(in >> model.options.validation_fraction))
    fail("bad validation_fraction");
  if (!(in >> tag) || tag != "seed" || !(in >> model.options.seed))
    fail("bad seed");
  model.options.hidden.assign(model.layer_sizes.begin() + 1,
                              model.layer_sizes.end() - 1);

  for (std::size_t l = 0; l + 1 < layer_count; ++l) {
    std::size_t index = 0;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag) || tag != "weight" || !(in >> index >> rows >> cols) ||
        index != l || rows != model.layer_sizes[l + 1] ||
        cols != model.layer_sizes[l])
      fail("bad weight header");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(in >> w(r, c))) fail("bad weight value");
    model.weights.push_back(std::move(w));
    if (!(in >> tag) || tag != "bias" || !(in >> index) || index != l)
      fail("bad bias header");
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r)
      if (!(in >> b[r])) fail("bad bias value");
    model.biases.push_back(std::move(b));
  }

  std::size_t history = 0;
  if (!(in >> tag) || tag != "validation_history" || !(in >> history))
    fail("bad history header");
  model.validation_history.resize(history);
  for (double& v : model.validation_history)
    if (!(in >> v)) fail("bad history value");
  return model;
}

}  // namespace ising::surrogate
