#include "adaptlab/nn.hpp"

#include <algorithm>
#include <cmath>

#include "adaptlab/rng.hpp"
#include "binary_io.hpp"

namespace adaptlab::nn {

namespace {

Matrix activate(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::identity:
      return z;
  }
  throw ArgumentError("unknown activation");
}

// Derivative expressed through the activation output itself.
Matrix activation_grad_from_output(const Matrix& a, Activation activation) {
  switch (activation) {
    case Activation::relu:
      return (a.array() > 0.0).cast<double>().matrix();
    case Activation::tanh:
      return (1.0 - a.array().square()).matrix();
    case Activation::identity:
      return Matrix::Ones(a.rows(), a.cols());
  }
  throw ArgumentError("unknown activation");
}

std::uint32_t activation_tag(Activation activation) {
  switch (activation) {
    case Activation::relu:
      return 0;
    case Activation::tanh:
      return 1;
    case Activation::identity:
      return 2;
  }
  throw ArgumentError("unknown activation");
}

Activation activation_from_tag(std::uint32_t tag) {
  switch (tag) {
    case 0:
      return Activation::relu;
    case 1:
      return Activation::tanh;
    case 2:
      return Activation::identity;
    default:
      throw FormatError("bad activation tag " + std::to_string(tag));
  }
}

}  // namespace

int Mlp::input_dim() const {
  if (layers.empty()) {
    throw ArgumentError("input_dim: model has no layers");
  }
  return static_cast<int>(layers.front().W.cols());
}

int Mlp::output_dim() const {
  if (layers.empty()) {
    throw ArgumentError("output_dim: model has no layers");
  }
  return static_cast<int>(layers.back().W.rows());
}

void Mlp::validate() const {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& layer = layers[k];
    if (layer.W.rows() < 1 || layer.W.cols() < 1) {
      throw ArgumentError("layer " + std::to_string(k) + ": empty weight matrix");
    }
    if (layer.b.size() != layer.W.rows()) {
      throw ShapeError("layer " + std::to_string(k) + ": bias length mismatch");
    }
    if (k > 0 && layers[k - 1].W.rows() != layer.W.cols()) {
      throw ShapeError("layer " + std::to_string(k) + ": dimension chain broken");
    }
    if (!layer.W.allFinite() || !layer.b.allFinite()) {
      throw ArgumentError("layer " + std::to_string(k) + ": non-finite parameter");
    }
  }
}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw ArgumentError("optim: learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ArgumentError("optim: momentum must lie in [0, 1)");
  }
  if (batch_size < 1) {
    throw ArgumentError("optim: batch_size must be positive");
  }
}

MomentumState MomentumState::zeros_like(const Mlp& model) {
  MomentumState state;
  state.velocity.reserve(model.layers.size());
  for (const Layer& layer : model.layers) {
    state.velocity.push_back(Layer{Matrix::Zero(layer.W.rows(), layer.W.cols()),
                                   Vector::Zero(layer.b.size())});
  }
  return state;
}

ForwardResult forward(const Mlp& model, const Matrix& x) {
  if (model.layers.empty()) {
    throw ArgumentError("forward: model has no layers");
  }
  if (x.cols() != model.input_dim()) {
    throw ShapeError("forward: input width " + std::to_string(x.cols()) +
                     " does not match model input " +
                     std::to_string(model.input_dim()));
  }
  Matrix current = x;
  for (std::size_t k = 0; k + 1 < model.layers.size(); ++k) {
    const Layer& layer = model.layers[k];
    Matrix z = current * layer.W.transpose();
    z.rowwise() += layer.b.transpose();
    current = activate(z, model.activation);
  }
  const Layer& last = model.layers.back();
  Matrix logits = current * last.W.transpose();
  logits.rowwise() += last.b.transpose();
  return ForwardResult{std::move(current), std::move(logits)};
}

Matrix softmax(const Matrix& logits) {
  if (!logits.allFinite()) {
    throw ArgumentError("softmax: non-finite logits");
  }
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const auto e = (logits.row(i).array() - m).exp().eval();
    probs.row(i) = (e / e.sum()).matrix();
  }
  return probs;
}

Matrix one_hot(std::span<const std::int32_t> labels, int num_classes) {
  if (num_classes < 1) {
    throw ArgumentError("one_hot: num_classes must be positive");
  }
  Matrix targets = Matrix::Zero(static_cast<Eigen::Index>(labels.size()),
                                num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw ArgumentError("one_hot: label out of range");
    }
    targets(static_cast<Eigen::Index>(i), y) = 1.0;
  }
  return targets;
}

double cross_entropy(const Matrix& probs, std::span<const std::int32_t> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
    throw ShapeError("cross_entropy: label count does not match rows");
  }
  const int num_classes = static_cast<int>(probs.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const std::int32_t y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= num_classes) {
      throw ArgumentError("cross_entropy: label out of range");
    }
    total += -std::log(std::max(probs(i, y), kProbFloor));
  }
  return total / static_cast<double>(probs.rows());
}

double soft_cross_entropy(const Matrix& probs, const Matrix& soft_targets) {
  if (probs.rows() != soft_targets.rows() || probs.cols() != soft_targets.cols()) {
    throw ShapeError("soft_cross_entropy: target shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double row_sum = soft_targets.row(i).sum();
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw ArgumentError("soft_cross_entropy: target row does not sum to 1");
    }
    double row = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      row -= soft_targets(i, c) * std::log(std::max(probs(i, c), kProbFloor));
    }
    total += row;
  }
  return total / static_cast<double>(probs.rows());
}

double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) {
    throw ShapeError("kl_divergence: length mismatch");
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (p(c) > 0.0) {
      total += p(c) * (std::log(std::max(p(c), kProbFloor)) -
                       std::log(std::max(q(c), kProbFloor)));
    }
  }
  return std::max(total, 0.0);
}

BackwardResult backward(const Mlp& model, const Matrix& x, LossKind kind,
                        const Matrix& targets, bool want_input_gradient) {
  if (model.layers.empty()) {
    throw ArgumentError("backward: model has no layers");
  }
  if (x.cols() != model.input_dim()) {
    throw ShapeError("backward: input width mismatch");
  }
  const std::size_t depth = model.layers.size();

  // Forward pass caching the input of every layer.
  std::vector<Matrix> inputs;
  inputs.reserve(depth);
  inputs.push_back(x);
  for (std::size_t k = 0; k + 1 < depth; ++k) {
    const Layer& layer = model.layers[k];
    Matrix z = inputs.back() * layer.W.transpose();
    z.rowwise() += layer.b.transpose();
    inputs.push_back(activate(z, model.activation));
  }
  const Layer& last = model.layers.back();
  Matrix logits = inputs.back() * last.W.transpose();
  logits.rowwise() += last.b.transpose();
  const Matrix probs = softmax(logits);

  if (targets.rows() != probs.rows() || targets.cols() != probs.cols()) {
    throw ShapeError("backward: target shape mismatch");
  }

  const double n = static_cast<double>(probs.rows());
  double loss = 0.0;
  switch (kind) {
    case LossKind::cross_entropy:
    case LossKind::soft_cross_entropy: {
      for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
          loss -= targets(i, c) * std::log(std::max(probs(i, c), kProbFloor));
        }
      }
      loss /= n;
      break;
    }
    case LossKind::kl_to_reference: {
      for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
          if (targets(i, c) > 0.0) {
            row += targets(i, c) *
                   (std::log(std::max(targets(i, c), kProbFloor)) -
                    std::log(std::max(probs(i, c), kProbFloor)));
          }
        }
        loss += std::max(row, 0.0);
      }
      loss /= n;
      break;
    }
  }

  BackwardResult result;
  result.loss = loss;
  result.grads.layers.resize(depth);

  // The mean-loss gradient at the logits is identical for all three kinds.
  Matrix delta = (probs - targets) / n;
  for (std::size_t k = depth; k-- > 0;) {
    const Layer& layer = model.layers[k];
    result.grads.layers[k].W = delta.transpose() * inputs[k];
    result.grads.layers[k].b = delta.colwise().sum().transpose();
    if (k > 0) {
      const Matrix back = delta * layer.W;
      delta = back.cwiseProduct(
          activation_grad_from_output(inputs[k], model.activation));
    } else if (want_input_gradient) {
      result.input_gradient = delta * layer.W;
    }
  }
  return result;
}

BackwardResult backward(const Mlp& model, const Matrix& x,
                        std::span<const std::int32_t> labels,
                        bool want_input_gradient) {
  return backward(model, x, LossKind::cross_entropy,
                  one_hot(labels, model.output_dim()), want_input_gradient);
}

void axpy(Gradients& grads, double scale, const Gradients& other) {
  if (grads.layers.size() != other.layers.size()) {
    throw ShapeError("axpy: gradient layer count mismatch");
  }
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    grads.layers[k].W += scale * other.layers[k].W;
    grads.layers[k].b += scale * other.layers[k].b;
  }
}

void sgd_step(Mlp& model, const Gradients& grads, MomentumState& state,
              const OptimConfig& config) {
  config.validate();
  if (grads.layers.size() != model.layers.size() ||
      state.velocity.size() != model.layers.size()) {
    throw ShapeError("sgd_step: layer count mismatch");
  }
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    Layer& layer = model.layers[k];
    Layer& v = state.velocity[k];
    const Layer& g = grads.layers[k];
    if (g.W.rows() != layer.W.rows() || g.W.cols() != layer.W.cols()) {
      throw ShapeError("sgd_step: gradient shape mismatch");
    }
    v.W = config.momentum * v.W + g.W;
    v.b = config.momentum * v.b + g.b;
    layer.W -= config.learning_rate * v.W;
    layer.b -= config.learning_rate * v.b;
  }
}

Mlp init_params(const std::vector<int>& widths, Activation activation,
                InitScheme scheme, std::uint64_t seed) {
  if (widths.size() < 2) {
    throw ArgumentError("init_params: need at least input and output widths");
  }
  for (int w : widths) {
    if (w < 1) {
      throw ArgumentError("init_params: nonpositive dimension");
    }
  }
  Rng rng(seed);
  Mlp model;
  model.activation = activation;
  model.layers.reserve(widths.size() - 1);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const int fan_in = widths[k];
    const int fan_out = widths[k + 1];
    Layer layer{Matrix::Zero(fan_out, fan_in), Vector::Zero(fan_out)};
    if (scheme == InitScheme::fan_in_uniform) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.W.cols(); ++j) {
          layer.W(i, j) = rng.uniform(-bound, bound);
        }
      }
      for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
        layer.b(i) = rng.uniform(-bound, bound);
      }
    }
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

namespace {
constexpr char kModelMagic[4] = {'A', 'M', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(const Mlp& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out.write(kModelMagic, 4);
  detail::put_u32(out, kModelVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const Layer& layer : model.layers) {
    detail::put_u32(out, static_cast<std::uint32_t>(layer.W.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(layer.W.cols()));
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.W.cols(); ++j) {
        detail::put_f32(out, static_cast<float>(layer.W(i, j)));
      }
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
      detail::put_f32(out, static_cast<float>(layer.b(i)));
    }
  }
  detail::put_u32(out, activation_tag(model.activation));
  out.flush();
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

Mlp load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  char magic[4] = {};
  if (!in.read(magic, 4)) {
    throw FormatError("truncated header (magic) in '" + path.string() + "'");
  }
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw FormatError("bad magic in '" + path.string() + "'");
  }
  std::uint32_t version = 0, count = 0;
  if (!detail::get_u32(in, version) || !detail::get_u32(in, count)) {
    throw FormatError("truncated header in '" + path.string() + "'");
  }
  if (version != kModelVersion) {
    throw FormatError("bad version " + std::to_string(version) + " in '" +
                      path.string() + "'");
  }
  Mlp model;
  model.layers.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    std::uint32_t out_dim = 0, in_dim = 0;
    if (!detail::get_u32(in, out_dim) || !detail::get_u32(in, in_dim)) {
      throw FormatError("truncated layer header in '" + path.string() + "'");
    }
    if (out_dim == 0 || in_dim == 0) {
      throw FormatError("bad layer dimensions in '" + path.string() + "'");
    }
    Layer layer{Matrix(out_dim, in_dim), Vector(out_dim)};
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.W.cols(); ++j) {
        float v = 0.0f;
        if (!detail::get_f32(in, v)) {
          throw FormatError("truncated weight block in '" + path.string() + "'");
        }
        layer.W(i, j) = v;
      }
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
      float v = 0.0f;
      if (!detail::get_f32(in, v)) {
        throw FormatError("truncated bias block in '" + path.string() + "'");
      }
      layer.b(i) = v;
    }
    model.layers.push_back(std::move(layer));
  }
  std::uint32_t tag = 0;
  if (!detail::get_u32(in, tag)) {
    throw FormatError("truncated activation tag in '" + path.string() + "'");
  }
  model.activation = activation_from_tag(tag);
  char extra = 0;
  if (in.read(&extra, 1)) {
    throw FormatError("trailing bytes after payload in '" + path.string() + "'");
  }
  model.validate();
  return model;
}

}  // namespace adaptlab::nn
